"""Acceptance suite shared by ``monesc verify`` and tests/test_acceptance.py.

Each criterion returns a ``CriterionResult`` with the measured value next to
the required one. ``overrides`` (``section.key=value`` strings) are applied to
every scenario the suite runs, which is how the fault-injection hooks in
[diagnostics] reach the checks.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .config import ScenarioConfig, apply_overrides, resolve
from .monitoring import bound_check
from .observer import check_norm_bound
from .plants import example1_map, map_derivative
from .scenario import EXAMPLE1_Z0, compute_metrics, preset_cart, preset_example1, trace_csv_text
from .simcore import SimTrace, TrajectoryDiverged, run_simulation


@dataclass(frozen=True)
class CriterionResult:
    cid: int
    name: str
    passed: bool
    measured: str
    required: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} C{self.cid} {self.name}: measured {self.measured}; required {self.required}"


@dataclass(frozen=True)
class Outcome:
    trace: SimTrace
    error: str | None
    seconds: float

    @property
    def completed(self) -> bool:
        return self.error is None


_CACHE: dict[ScenarioConfig, Outcome] = {}


def simulate(cfg: ScenarioConfig, fresh: bool = False) -> Outcome:
    """Run a scenario, memoised by config. Divergence is captured, not raised."""
    if not fresh and cfg in _CACHE:
        return _CACHE[cfg]
    t0 = time.perf_counter()
    try:
        out = Outcome(run_simulation(cfg), None, time.perf_counter() - t0)
    except TrajectoryDiverged as exc:
        out = Outcome(exc.trace, str(exc), time.perf_counter() - t0)
    if not fresh:
        _CACHE[cfg] = out
    return out


def clear_cache() -> None:
    _CACHE.clear()


def _e1(z0: float, overrides=(), extra=()) -> ScenarioConfig:
    return apply_overrides(preset_example1(z0), [*extra, *overrides])


def _cart(moving: bool, overrides=(), extra=()) -> ScenarioConfig:
    return apply_overrides(preset_cart(moving), [*extra, *overrides])


def _window(trace: SimTrace, a: float, b: float) -> np.ndarray:
    t = np.asarray(trace.t)
    return (t >= a - 1e-12) & (t <= b + 1e-12)


# ---------------------------------------------------------------------------


def c1_global_convergence(overrides=()) -> CriterionResult:
    parts, ok = [], True
    for z0 in EXAMPLE1_Z0:
        cfg = _e1(z0, overrides)
        out = simulate(cfg)
        if not out.completed:
            ok = False
            parts.append(f"z0={z0:g}: {out.error} at t={out.trace.t[-1]:.3f}s")
            continue
        m = compute_metrics(out.trace, cfg)
        good = m.first_entry_time is not None and m.terminal_amplitude <= 0.15 and out.seconds < 5.0
        ok &= good
        entry = "never" if m.first_entry_time is None else f"{m.first_entry_time:.3f}s"
        parts.append(f"z0={z0:g}: entry {entry}, amp {m.terminal_amplitude:.4f}, {out.seconds:.2f}s")
    delta = resolve(_e1(4.0, overrides)).diagnostics.delta
    return CriterionResult(
        1,
        "example1 global convergence",
        ok,
        "; ".join(parts),
        f"entry into |z-z*|<{delta / 2:.4f} and max|y-y*|<=0.15 over last 20% of 15 s, <5 s per run, all z0",
    )


def c2_local_escape(overrides=()) -> CriterionResult:
    out = simulate(_e1(2.0, overrides))
    zmax = float(np.max(out.trace.z))
    return CriterionResult(2, "local-maximum escape", zmax > 3.5, f"max z={zmax:.4f}", "max z > 3.5 from z0=2")


def _accepted_runs(overrides):
    runs = [(f"example1 z0={z0:g}", _e1(z0, overrides)) for z0 in (2.0, 4.0)]
    runs += [("cart fixed", _cart(False, overrides)), ("cart moving", _cart(True, overrides))]
    return runs


def c3_monitor_bound(overrides=()) -> CriterionResult:
    parts, ok = [], True
    for label, cfg in _accepted_runs(overrides):
        out = simulate(cfg)
        if not out.completed:
            ok = False
            parts.append(f"{label}: did not complete")
            continue
        rep = bound_check(out.trace)
        ok &= rep.passed
        parts.append(f"{label}: {rep.violations} violations (eps {rep.eps_step:.3g})")
    return CriterionResult(3, "monitoring bound", ok, "; ".join(parts), "|e| <= phi_m + eps_step on every sample")


def c4_direction_behaviour(overrides=()) -> CriterionResult:
    wrong = _e1(
        2.0,
        overrides,
        ["monitoring.enabled=false", "controller.sigma0=-1", "grid.T=5", "diagnostics.divergence_bound=1e300"],
    )
    ow = simulate(wrong)
    ae = np.abs(ow.trace.e)
    half = ae[len(ae) // 2 :]
    steps = np.diff(half)
    mono = ow.completed and len(ae) == 5001 and bool(np.all(steps >= 0.0))

    right = _e1(
        2.0, overrides, ["monitoring.enabled=false", "controller.sigma0=1", "grid.T=0.6", "controller.ym0=0.3"]
    )
    orr = simulate(right)
    e = np.asarray(orr.trace.e)
    h = orr.trace.step_size
    edot = np.max(np.abs(np.diff(e))) / h
    band = 2.0 * h * edot
    cross = np.flatnonzero(np.sign(e[1:]) != np.sign(e[:-1]))
    if cross.size and orr.completed:
        i0 = int(cross[0]) + 1
        after = float(np.max(np.abs(e[i0:])))
        sliding = after <= band
        tc = f"{orr.trace.t[i0]:.3f}s"
    else:
        after, sliding, tc = float("nan"), False, "none"
    return CriterionResult(
        4,
        "frozen-direction behaviour",
        mono and sliding,
        f"wrong: min d|e| over last 50% = {steps.min():.3g}; right: crossing at {tc}, max|e| after = {after:.4g}, band = {band:.4g}",
        "wrong: |e| nondecreasing; right: zero crossing then |e| <= 2 h max|de/dt|",
    )


def _fixed_cart_numbers(overrides):
    cfg = _cart(False, overrides)
    out = simulate(cfg)
    res = resolve(cfg)
    tr = out.trace
    w = _window(tr, 0.8 * tr.t[-1], tr.t[-1])
    band = float(np.max(np.abs(tr.y[w] - res.y_star)))
    lag = float(np.max(np.abs(tr.z[w] - tr.src[w])))
    return out, res, band, lag


def c5_cart_fixed(overrides=()) -> CriterionResult:
    out, res, band, _ = _fixed_cart_numbers(overrides)
    ok = out.completed and band <= 3.0 * res.r
    return CriterionResult(
        5, "cart fixed source", ok, f"band={band:.4f}", f"band <= 3r = {3.0 * res.r:.4f}"
    )


def c6_cart_moving(overrides=()) -> CriterionResult:
    fixed_out, res, fixed_band, fixed_lag = _fixed_cart_numbers(overrides)
    out = simulate(_cart(True, overrides))
    tr = out.trace
    w = _window(tr, 15.0, 30.0)
    band = float(np.max(np.abs(tr.y[w] - res.y_star))) if w.any() else float("inf")
    lag = float(np.max(np.abs(tr.z[w] - tr.src[w]))) if w.any() else float("inf")
    ok = out.completed and fixed_out.completed and band <= 1.5 * fixed_band and lag <= 1.5 * fixed_lag
    return CriterionResult(
        6,
        "cart moving source",
        ok,
        f"intensity band={band:.4f}, max|z-s|={lag:.4f}",
        f"band <= 1.5 x {fixed_band:.4f}, max|z-s| <= 1.5 x {fixed_lag:.4f} (fixed-source values)",
    )


def c7_time_scaling(overrides=()) -> CriterionResult:
    base = _cart(False, overrides)
    h = base.grid.h
    mu = base.plant.mu
    tau_T = base.grid.T / mu
    ref = simulate(base)
    # tau grid whose image under t = mu tau is exactly the t grid
    image = simulate(apply_overrides(base, ["grid.clock=tau", f"grid.T={tau_T!r}", f"grid.h={h / mu!r}"]))
    # independent tau grid with the same step h, resampled at the t samples
    fine = simulate(apply_overrides(base, ["grid.clock=tau", f"grid.T={tau_T!r}", f"grid.h={h!r}"]))

    def gap(tau_trace: SimTrace) -> float:
        t_img = np.asarray(tau_trace.t) * mu
        z_on_t = np.interp(ref.trace.t, t_img, tau_trace.z)
        return float(np.max(np.abs(z_on_t - ref.trace.z)))

    g_image, g_fine = gap(image.trace), gap(fine.trace)
    tol = 10.0 * h
    ok = ref.completed and image.completed and fine.completed and g_image <= tol and g_fine <= tol
    return CriterionResult(
        7,
        "time-scaling consistency",
        ok,
        f"max|dz| image grid={g_image:.3g}, tau step h={g_fine:.4g}",
        f"both <= 10h = {tol:.3g}",
    )


def c8_norm_observer(overrides=()) -> CriterionResult:
    parts, ok = [], True
    for z0 in (2.0, 4.0):
        dominated = simulate(_e1(z0, overrides, ["init.eta0=0.5", "init.eta_bar0=0.5"]))
        tr = dominated.trace
        held = dominated.completed and bool(np.all(tr.eta_norm <= tr.eta_bar))
        zero = simulate(_e1(z0, overrides))
        rep = check_norm_bound(zero.trace)
        good = held and zero.completed and rep.passed
        ok &= good
        parts.append(
            f"z0={z0:g}: |eta|<=eta_bar {'held' if held else 'broken'}, "
            f"fitted R={rep.fitted_r:.3g} (allowed {rep.allowed_r:.3g})"
        )
    return CriterionResult(
        8, "norm observer bound", ok, "; ".join(parts), "|eta|<=eta_bar when eta_bar(0)>=|eta(0)|; fitted-R check passes"
    )


def derivative_oracle(cmap=None, points: int = 1000, step: float = 1e-6) -> tuple[float, bool]:
    """Worst relative gap between map_derivative and a central difference.

    Samples whose slope is below 1e-3 in magnitude are compared absolutely
    against 1e-9, since a relative comparison there measures rounding only.
    """
    cmap = cmap or example1_map()
    zs = np.linspace(-10.0, 15.0, points)
    fd = (cmap(zs + step) - cmap(zs - step)) / (2.0 * step)
    an = map_derivative(cmap, zs)
    big = np.abs(an) >= 1e-3
    rel = np.abs(fd[big] - an[big]) / np.abs(an[big])
    small_ok = bool(np.all(np.abs(fd[~big] - an[~big]) <= 1e-9))
    worst = float(rel.max()) if rel.size else 0.0
    return worst, worst <= 1e-6 and small_ok


def c9_determinism(overrides=()) -> CriterionResult:
    configs = [_e1(z0, overrides) for z0 in EXAMPLE1_Z0] + [_cart(False, overrides), _cart(True, overrides)]
    same = 0
    for cfg in configs:
        a = trace_csv_text(simulate(cfg, fresh=True).trace)
        b = trace_csv_text(simulate(cfg, fresh=True).trace)
        same += a == b
    worst, deriv_ok = derivative_oracle()
    ok = same == len(configs) and deriv_ok
    return CriterionResult(
        9,
        "determinism and derivative oracle",
        ok,
        f"{same}/{len(configs)} presets byte-identical; worst derivative rel gap {worst:.3g}",
        "all presets identical; rel gap <= 1e-6",
    )


CRITERIA: tuple[Callable[..., CriterionResult], ...] = (
    c1_global_convergence,
    c2_local_escape,
    c3_monitor_bound,
    c4_direction_behaviour,
    c5_cart_fixed,
    c6_cart_moving,
    c7_time_scaling,
    c8_norm_observer,
    c9_determinism,
)


def run_all(overrides=(), report: Callable[[str], None] | None = None) -> list[CriterionResult]:
    results = []
    for crit in CRITERIA:
        res = crit(overrides)
        results.append(res)
        if report:
            report(res.line())
    return results
