from __future__ import annotations

import math

import numpy as np
import pytest

from monesc.config import apply_overrides
from monesc.observer import ObserverState, check_norm_bound, observer_step
from monesc.scenario import preset_example1
from monesc.simcore import SimTrace, run_simulation


def test_observer_step_examples():
    obs = ObserverState(eta_bar=0.0, lam0=0.8, gain=2.0)
    assert observer_step(obs, 1.0, 0.0, 0.001).eta_bar == pytest.approx(0.002, abs=1e-15)
    assert observer_step(obs, -1.0, 0.0, 0.001).eta_bar == pytest.approx(0.002, abs=1e-15)
    decay = ObserverState(eta_bar=1.0, lam0=0.8, gain=2.0)
    assert observer_step(decay, 0.0, 0.0, 0.001).eta_bar == pytest.approx(0.9992, abs=1e-15)


def test_observer_fixed_point():
    obs = ObserverState(eta_bar=0.0, lam0=0.8, gain=2.0)
    for i in range(30000):
        obs = observer_step(obs, 1.0, i * 1e-3, 1e-3)
    assert obs.eta_bar == pytest.approx(2.0 / 0.8, rel=1e-9)


def test_observer_rejects_large_step():
    with pytest.raises(ValueError):
        observer_step(ObserverState(lam0=0.8), 1.0, 0.0, 1.25)


def test_observer_problems():
    assert ObserverState().problems() == []
    assert ObserverState(lam0=0.0).problems()
    assert ObserverState(gain=-1.0).problems()


def _synthetic(eta_norm, eta_bar, t, lam0=0.8):
    n = len(t)
    zeros = np.zeros(n)
    return SimTrace(
        t=t, z=zeros, y=zeros, y_m=zeros, e=zeros, phi_m=zeros, u=zeros, rho=zeros,
        k=np.zeros(n, dtype=np.int64), sigma=np.ones(n, dtype=np.int64), eta_bar=eta_bar,
        eta_norm=eta_norm, step_size=t[1] - t[0], info={"lam0": lam0},
    )


def test_norm_bound_with_pure_decay():
    t = np.arange(0, 10.001, 0.001)
    rep = check_norm_bound(_synthetic(0.7 * np.exp(-t), 0.7 * np.exp(-0.8 * t), t))
    assert rep.passed and rep.fitted_r == 0.0


def test_norm_bound_absorbs_initial_mismatch():
    t = np.arange(0, 10.001, 0.001)
    # eta starts above eta_bar but the gap decays at lam0
    eta = 0.5 * np.exp(-0.8 * t) + 0.1
    bar = np.full_like(t, 0.1)
    rep = check_norm_bound(_synthetic(eta, bar, t), psi_margin=1.0)
    assert rep.passed
    assert rep.fitted_r == pytest.approx(0.5, rel=1e-9)


def test_norm_bound_example1_run():
    trace = run_simulation(preset_example1(4.0))
    rep = check_norm_bound(trace)
    assert rep.passed
    assert rep.fitted_r == 0.0 and rep.allowed_r == 0.0
    assert np.all(trace.eta_bar >= 0.0)


def test_norm_bound_flags_misspecified_gain():
    trace = run_simulation(apply_overrides(preset_example1(4.0), ["observer.gain=0.1"]))
    rep = check_norm_bound(trace)
    assert not rep.passed
    assert rep.first_violation is not None
    assert "FAIL" in rep.line()
    assert math.isfinite(rep.max_excess) and rep.max_excess > 0
