from __future__ import annotations

import numpy as np
import pytest

from monesc.config import apply_overrides, resolve
from monesc.scenario import preset_cart, preset_example1
from monesc.simcore import SimulationFault, TimeGrid, TrajectoryDiverged, euler_step, run_simulation


def test_euler_step_examples():
    assert euler_step([1.0], [-1.0], 0.001) == pytest.approx([0.999])
    assert np.array_equal(euler_step([0.0, 0.0], [0.0, 0.0], 0.01), [0.0, 0.0])
    assert euler_step([2.0], [3.0], 0.5) == pytest.approx([3.5])


def test_euler_step_errors():
    with pytest.raises(SimulationFault, match="sample 7"):
        euler_step([np.nan], [1.0], 0.1, index=7)
    with pytest.raises(ValueError):
        euler_step([1.0], [1.0, 2.0], 0.1)
    with pytest.raises(ValueError):
        euler_step([1.0], [1.0], 0.0)


def test_time_grid():
    g = TimeGrid(1e-3, 15.0)
    assert g.n_samples == 15001
    assert g.times()[-1] == pytest.approx(15.0)
    assert TimeGrid(0.1, 0.1).n_samples == 2
    with pytest.raises(ValueError):
        TimeGrid(0.0, 1.0)
    with pytest.raises(ValueError):
        TimeGrid(1.0, 0.5)


@pytest.fixture(scope="module")
def e1_trace():
    return run_simulation(preset_example1(4.0))


def test_trace_shape_and_spacing(e1_trace):
    tr = e1_trace
    assert len(tr) == 15001
    assert np.allclose(np.diff(tr.t), 1e-3, rtol=0, atol=1e-12)
    assert np.all(np.diff(tr.t) > 0)
    assert tr.is_finite()
    assert tr.v is None and tr.src is None
    with pytest.raises(ValueError):
        tr.z[0] = 1.0


def test_example1_settles_near_global_maximum(e1_trace):
    tail = e1_trace.y[-3000:]
    assert np.max(np.abs(tail - 1.5)) <= 0.15


def test_flips_match_switch_index(e1_trace):
    tr = e1_trace
    dk = np.diff(tr.k)
    dsig = np.diff(tr.sigma) != 0
    assert set(np.unique(dk)) <= {0, 1}  # at most one flip per sample
    assert np.array_equal(dk == 1, dsig)
    assert tr.info["flips"] == tr.k[-1]


def test_modulation_floor_on_traces(e1_trace):
    assert np.all(e1_trace.rho >= 0.1)
    cart = run_simulation(preset_cart(False))
    assert np.all(cart.rho >= 0.5 * 0.1)


def test_observer_state_stays_nonnegative(e1_trace):
    assert np.all(e1_trace.eta_bar >= 0.0)


def test_zero_gain_holds_state():
    cfg = apply_overrides(
        preset_example1(2.5),
        ["plant.z_eta=0", "plant.z_z=0", "controller.km=0", "diagnostics.fault=zero-gain", "grid.T=2"],
    )
    tr = run_simulation(cfg)
    assert np.all(tr.z == 2.5)
    assert np.all(tr.u == 0.0)


def test_divergence_guard_returns_partial_trace():
    with pytest.raises(TrajectoryDiverged) as info:
        run_simulation(preset_example1(7.0))
    partial = info.value.trace
    assert 0 < len(partial) < 15001
    assert abs(partial.z[-1]) > 1e6
    assert not partial.info["completed"]


def test_divergence_bound_is_configurable():
    cfg = apply_overrides(preset_example1(4.0), ["diagnostics.divergence_bound=3", "grid.T=1"])
    with pytest.raises(TrajectoryDiverged, match="diverged"):
        run_simulation(cfg)


def test_determinism(e1_trace):
    again = run_simulation(preset_example1(4.0))
    for name in ("t", "z", "y", "e", "u", "rho", "k", "sigma", "eta_bar", "phi_m"):
        assert np.array_equal(getattr(again, name), getattr(e1_trace, name))


def test_noise_is_seeded():
    base = apply_overrides(preset_example1(4.0), ["noise.amplitude=0.01", "grid.T=2"])
    a = run_simulation(apply_overrides(base, ["noise.seed=3"]))
    b = run_simulation(apply_overrides(base, ["noise.seed=3"]))
    c = run_simulation(apply_overrides(base, ["noise.seed=4"]))
    assert np.array_equal(a.y, b.y)
    assert not np.array_equal(a.y, c.y)


def test_grid_refinement_consistency(e1_trace):
    fine = run_simulation(apply_overrides(preset_example1(4.0), ["grid.h=5e-4"]))
    tolerance = 0.5 * resolve(preset_example1(4.0)).diagnostics.delta
    assert abs(fine.z[-1] - e1_trace.z[-1]) < tolerance


def test_tau_clock_on_image_grid_is_exact():
    base = preset_cart(False)
    ref = run_simulation(apply_overrides(base, ["grid.T=5"]))
    tau = run_simulation(apply_overrides(base, ["grid.clock=tau", "grid.T=10", "grid.h=0.002"]))
    assert np.array_equal(tau.z, ref.z)
    assert tau.t[-1] == pytest.approx(10.0)
