from __future__ import annotations

import math

import numpy as np
import pytest

from monesc.monitoring import MonitorState, a_seq, bound_check, c_seq, detect_switch, envelope
from monesc.simcore import SimTrace


def test_envelope_new_variant():
    ms = MonitorState(variant="new", lam=2.0, r=0.1, t_k=1.0, e_k=1.0)
    assert envelope(ms, 1.5) == pytest.approx(math.exp(-1.0) + 0.1, rel=1e-15)
    assert envelope(ms, 1.5) == pytest.approx(0.4679, abs=1e-4)
    assert envelope(ms, 1.0) == pytest.approx(1.1)
    assert envelope(ms, 1e4) == pytest.approx(0.1)


def test_envelope_before_switch_is_a_bug():
    with pytest.raises(RuntimeError):
        envelope(MonitorState(t_k=2.0), 1.0)


def test_legacy_and_global_seek_envelopes():
    legacy = MonitorState(variant="legacy", lam=2.0, r=0.1, k=3, t_k=0.5, e_k=0.2)
    a = 4.0
    assert envelope(legacy, 1.0) == pytest.approx(0.2 * math.exp(-1.0) + a * math.exp(-1.0 / a))
    seek = MonitorState(variant="global-seek", lam=2.0, r=0.1, k=3, t_k=0.5, e_k=0.2)
    new = MonitorState(variant="new", lam=2.0, r=0.1, k=3, t_k=0.5, e_k=0.2)
    assert envelope(seek, 1.0) - envelope(new, 1.0) == pytest.approx(2.0 / 4.0)


def test_detect_switch_examples():
    ms = MonitorState(variant="new", lam=2.0, r=0.1, t_k=0.0, e_k=0.4)
    t = math.log(0.4 / 0.4) / 2.0  # envelope = 0.5 at t = 0
    same, switched = detect_switch(ms, 0.2, t)
    assert not switched and same is ms
    new, switched = detect_switch(ms, 0.5, t)  # equality triggers
    assert switched
    assert (new.k, new.t_k, new.e_k) == (1, t, 0.5)
    neg, switched = detect_switch(ms, -0.7, 0.1)
    assert switched and neg.e_k == 0.7


def test_slowly_decaying_error_never_switches():
    # 0.4 e^-t stays below 0.4 e^-2t + 0.1 for all t >= 0
    ms = MonitorState(variant="new", lam=2.0, r=0.1, t_k=0.0, e_k=0.4)
    for t in np.arange(0.0, 30.0, 1e-3):
        ms, switched = detect_switch(ms, 0.4 * math.exp(-t), t)
        assert not switched
    t = np.linspace(0, 30, 300001)
    assert np.all(0.4 * np.exp(-t) < 0.4 * np.exp(-2 * t) + 0.1)


def test_legacy_sequence_grows_at_fixed_time():
    ms = MonitorState(variant="legacy", a0=1.0)
    t = 1.0
    for k in range(60):
        a0, a1 = a_seq(ms, k), a_seq(ms, k + 1)
        threshold = a0 * a1 * math.log(a1 / a0) / (a1 - a0)
        assert t < threshold
        assert a1 * math.exp(-t / a1) > a0 * math.exp(-t / a0)


def test_c_sequence_decreases_to_zero():
    ms = MonitorState(c0=2.0)
    vals = [c_seq(ms, k) for k in range(200)]
    assert vals[0] == 2.0
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 0.011


def test_monitor_problems():
    assert MonitorState().problems() == []
    assert "r must be positive" in MonitorState(r=0.0).problems()
    assert MonitorState(variant="other").problems()


def _trace(e, phi):
    n = len(e)
    zeros = np.zeros(n)
    return SimTrace(
        t=np.arange(n) * 1e-3, z=zeros, y=zeros, y_m=zeros, e=np.asarray(e, float), phi_m=np.asarray(phi, float),
        u=zeros, rho=zeros, k=np.zeros(n, dtype=np.int64), sigma=np.ones(n, dtype=np.int64), eta_bar=zeros,
    )


def test_bound_check_examples():
    assert bound_check(_trace(np.zeros(100), np.full(100, 0.1))).passed
    growing = np.linspace(0, 1, 101)
    rep = bound_check(_trace(growing, np.full(101, 0.2)))
    assert not rep.passed
    assert rep.eps_step == pytest.approx(0.01)
    assert rep.first_violation == 22
    ok = bound_check(_trace([0.0, 0.3, 0.1], [0.2, 0.2, 0.2]))  # one-step overshoot tolerated
    assert ok.passed and ok.eps_step == pytest.approx(0.3)
