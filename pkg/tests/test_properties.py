"""Randomised invariants of the building blocks."""

from __future__ import annotations

import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from monesc.acceptance import derivative_oracle
from monesc.controller import ControllerState, DominationBounds, ReferenceModel, control_output, flip_direction
from monesc.controller import modulation_rd1, modulation_scaled, reference_step
from monesc.monitoring import MonitorState, c_seq, detect_switch, envelope
from monesc.observer import ObserverState, observer_step
from monesc.plants import gaussian_mixture
from monesc.scenario import read_csv, emit_csv
from monesc.simcore import SimTrace, euler_step

finite = st.floats(-1e6, 1e6, allow_nan=False)
pos = st.floats(1e-3, 1e3, allow_nan=False)
step = st.floats(1e-6, 1.0)


@given(st.lists(finite, min_size=1, max_size=5), st.data(), step)
def test_euler_is_affine(x, data, h):
    f = data.draw(st.lists(finite, min_size=len(x), max_size=len(x)))
    out = euler_step(x, f, h)
    assert np.allclose(out, np.asarray(x) + h * np.asarray(f), rtol=1e-12, atol=1e-9)


@given(st.sampled_from(["new", "legacy", "global-seek"]), pos, pos, st.integers(0, 50), st.floats(0, 10), st.floats(0, 100))
def test_envelope_positive_and_new_variant_decreasing(variant, lam, r, k, e_k, dt):
    ms = MonitorState(variant=variant, lam=lam, r=r, k=k, t_k=1.0, e_k=e_k)
    assert envelope(ms, 1.0 + dt) > 0
    if variant == "new":
        assert envelope(ms, 1.0 + dt) >= r
        assert envelope(ms, 1.0 + dt) <= envelope(ms, 1.0) + 1e-12


@given(pos, pos, st.integers(0, 100), st.floats(0, 10), st.floats(0, 10))
def test_global_seek_offset_is_c_of_k(lam, r, k, e_k, dt):
    kw = dict(lam=lam, r=r, k=k, t_k=0.0, e_k=e_k)
    diff = envelope(MonitorState(variant="global-seek", **kw), dt) - envelope(MonitorState(variant="new", **kw), dt)
    assert math.isclose(diff, c_seq(MonitorState(), k), rel_tol=1e-9, abs_tol=1e-12)


@given(st.floats(-10, 10), st.floats(0, 5), st.floats(0, 2), st.integers(0, 20))
def test_detect_switch_postcondition(e, dt, e_k, k):
    ms = MonitorState(variant="new", lam=2.0, r=0.1, k=k, t_k=0.0, e_k=e_k)
    new, switched = detect_switch(ms, e, dt)
    if switched:
        assert abs(e) >= envelope(ms, dt)
        assert (new.k, new.t_k, new.e_k) == (k + 1, dt, abs(e))
    else:
        assert abs(e) < envelope(ms, dt) and new == ms


@given(st.sampled_from([1, -1]), pos, finite)
def test_control_sign(sigma, rho, e):
    u = control_output(ControllerState(sigma=sigma, rho=rho), e)
    assert abs(u) in (0.0, rho)
    assert u * sigma * e <= 0
    twice = flip_direction(flip_direction(ControllerState(sigma=sigma)))
    assert twice.sigma == sigma and twice.k_pi == 2


@given(st.floats(-5, 5), st.floats(0, 10), step, st.floats(0, 10))
def test_reference_monotone_and_capped(y, km, h, cap):
    rm = ReferenceModel(min(y, cap), km, cap)
    nxt = reference_step(rm, h).y_m
    assert rm.y_m <= nxt <= cap


@given(st.floats(0, 100), st.floats(-100, 100), st.floats(0.01, 5), st.floats(0, 5), st.floats(0, 5))
def test_observer_stays_nonnegative(eta_bar, z, lam0, gain, offset):
    obs = ObserverState(eta_bar=eta_bar, lam0=lam0, gain=gain, offset=offset)
    h = 0.99 / lam0
    assert observer_step(obs, z, 0.0, h).eta_bar >= 0.0


@given(st.floats(-50, 50), st.floats(0, 50), st.floats(-50, 50), st.floats(0, 100), st.integers(0, 30), pos)
def test_rd1_modulation_floor(e, eta_bar, z, t, k, delta):
    cs = ControllerState(mode="rd1", lam=2.0, km=1.0, kp_min=0.5, delta=delta, k_pi=k)
    rho = modulation_rd1(cs, e, eta_bar, z, t, DominationBounds(1.0, 2.0, 0.0, 1.3, 0.0))
    assert rho >= delta


@given(st.floats(-50, 50), st.floats(0.01, 1), pos)
def test_scaled_modulation_floor(e, mu, delta):
    cs = ControllerState(mode="scaled", mu=mu, km=mu * 2, lam=mu, kp_min=0.5, delta=delta)
    assert modulation_scaled(cs, e) >= mu * delta


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.floats(0.1, 3), st.floats(-5, 5), st.floats(0.3, 3)), min_size=1, max_size=4))
def test_derivative_matches_finite_difference(parts):
    amps, centers, widths = zip(*parts)
    worst, ok = derivative_oracle(gaussian_mixture(amps, centers, widths), points=400)
    assert ok, worst


@settings(max_examples=20, deadline=None)
@given(values=st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=1, max_size=20))
def test_csv_round_trip_is_exact(values, tmp_path_factory):
    n = len(values)
    col = np.asarray(values)
    tr = SimTrace(
        t=np.arange(n) * 1e-3, z=col, y=col[::-1].copy(), y_m=col, e=col, phi_m=col, u=col, rho=col,
        k=np.arange(n, dtype=np.int64), sigma=np.ones(n, dtype=np.int64), eta_bar=col, v=col, src=col,
    )
    back = read_csv(emit_csv(tr, tmp_path_factory.mktemp("csv") / "p.csv"))
    for name in ("t", "z", "y", "u", "v", "src", "k", "sigma"):
        assert np.array_equal(getattr(back, name), getattr(tr, name))
