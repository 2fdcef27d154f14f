"""Fixed-step explicit Euler engine.

Each sample follows the same order: read the output, let the monitoring
function decide on a switch, compute rho and u, record the row, then advance
plant, observer and reference model together from the current values.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .config import ScenarioConfig, parse_matrix, resolve
from .controller import (
    ReferenceModel,
    control_output,
    flip_direction,
    modulation_rd1,
    modulation_scaled,
    reference_step,
    reset_pi,
)
from .monitoring import detect_switch, envelope
from .observer import observer_step
from .plants import (
    LinearSensorPlant,
    eval_map,
    linear_normal_form,
    source_output,
    step_linear_sensor,
    step_normal_form,
)

log = logging.getLogger(__name__)

COLUMNS = ("t", "z", "y", "y_m", "e", "phi_m", "u", "v", "rho", "k", "sigma", "eta_bar", "src")


class SimulationFault(RuntimeError):
    def __init__(self, message: str, index: int | None = None):
        super().__init__(message if index is None else f"{message} at sample {index}")
        self.index = index


class TrajectoryDiverged(SimulationFault):
    """Raised when |z| or |e| leaves the divergence bound; carries the partial trace."""

    def __init__(self, message: str, index: int, trace: "SimTrace"):
        super().__init__(message, index)
        self.trace = trace


@dataclass(frozen=True)
class TimeGrid:
    step_size: float
    horizon: float

    def __post_init__(self) -> None:
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if not self.horizon >= self.step_size:
            raise ValueError("horizon must be at least one step")

    @property
    def n_samples(self) -> int:
        # the small slack keeps T/h = 15000.000000000002 from losing a sample
        return int(math.floor(self.horizon / self.step_size + 1e-9)) + 1

    def times(self) -> np.ndarray:
        return np.arange(self.n_samples) * self.step_size


@dataclass(frozen=True)
class SimTrace:
    """Per-sample record of a run. Arrays are read-only.

    ``v`` and ``src`` are None when the plant has no integrator or no moving
    source. ``eta_norm`` holds the true internal-state norm for diagnostics
    and is never written to CSV.
    """

    t: np.ndarray
    z: np.ndarray
    y: np.ndarray
    y_m: np.ndarray
    e: np.ndarray
    phi_m: np.ndarray
    u: np.ndarray
    rho: np.ndarray
    k: np.ndarray
    sigma: np.ndarray
    eta_bar: np.ndarray
    v: np.ndarray | None = None
    src: np.ndarray | None = None
    eta_norm: np.ndarray | None = None
    step_size: float = 1e-3
    info: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in ("t", "z", "y", "y_m", "e", "phi_m", "u", "rho", "k", "sigma", "eta_bar", "v", "src", "eta_norm"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.asarray(arr)
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return len(self.t)

    def column(self, name: str):
        return getattr(self, name)

    def is_finite(self) -> bool:
        return all(
            np.all(np.isfinite(getattr(self, c))) for c in COLUMNS if getattr(self, c) is not None
        )


def euler_step(state, derivative, h: float, index: int | None = None) -> np.ndarray:
    """state + h * derivative, rejecting non-finite input."""
    s = np.asarray(state, dtype=float)
    d = np.asarray(derivative, dtype=float)
    if not h > 0:
        raise ValueError("h must be positive")
    if s.shape != d.shape:
        raise ValueError("state and derivative must have equal dimension")
    if not (np.all(np.isfinite(s)) and np.all(np.isfinite(d)) and math.isfinite(h)):
        raise SimulationFault("non-finite value in Euler step", index)
    return s + h * d


def _initial_linear_plant(cfg: ScenarioConfig, mu: float) -> LinearSensorPlant:
    c = np.asarray(cfg.plant.c, dtype=float)
    if cfg.init.x0:
        x0 = np.asarray(cfg.init.x0, dtype=float)
    else:
        x0 = cfg.init.z0 * c / float(c @ c)
    return LinearSensorPlant(parse_matrix(cfg.plant.a), np.asarray(cfg.plant.b), c, x0, cfg.init.v0, mu)


def run_simulation(cfg: ScenarioConfig) -> SimTrace:
    """Simulate a validated scenario and return its trace.

    Raises TrajectoryDiverged (with the partial trace) when |z| or |e| exceeds
    ``diagnostics.divergence_bound``, and SimulationFault on non-finite state.
    """
    res = resolve(cfg)
    grid = TimeGrid(cfg.grid.h, cfg.grid.T)
    n = grid.n_samples
    h = grid.step_size
    scale = res.scale
    fault = cfg.diagnostics.fault
    bound = cfg.diagnostics.divergence_bound
    source = res.source
    cmap = res.cost_map

    normal = cfg.plant.kind == "normal-form"
    if normal:
        p = cfg.plant
        plant = linear_normal_form(
            parse_matrix(p.eta_a), p.eta_z, p.z_eta, p.z_z, p.hfg, p.hfg_z, p.hfg_min, cfg.init.eta0, cfg.init.z0
        )
    else:
        plant = _initial_linear_plant(cfg, res.mu)

    obs = res.observer
    use_observer = cfg.observer.enabled
    cs = res.controller
    ms = res.monitor
    monitoring_on = cfg.monitoring.enabled
    ref = ReferenceModel(cfg.controller.ym0, res.km_eff, cfg.controller.ysat)
    rng = np.random.default_rng(cfg.noise.seed)
    noise = cfg.noise.amplitude

    cols = {c: np.empty(n) for c in ("t", "z", "y", "y_m", "e", "phi_m", "u", "rho", "eta_bar")}
    k_col = np.empty(n, dtype=np.int64)
    s_col = np.empty(n, dtype=np.int64)
    v_col = None if normal else np.empty(n)
    src_col = np.empty(n) if source is not None else None
    eta_col = np.empty(n) if normal else None

    def measure(z: float, t: float) -> float:
        y = source_output(source, z, t) if source is not None else eval_map(cmap, z)
        if noise > 0:
            y += noise * rng.standard_normal()
        return y

    def partial(i: int) -> SimTrace:
        sl = slice(0, i)
        return SimTrace(
            **{c: cols[c][sl].copy() for c in cols},
            k=k_col[sl].copy(),
            sigma=s_col[sl].copy(),
            v=None if v_col is None else v_col[sl].copy(),
            src=None if src_col is None else src_col[sl].copy(),
            eta_norm=None if eta_col is None else eta_col[sl].copy(),
            step_size=h,
            info=info,
        )

    info = {
        "lam0": obs.lam0,
        "clock": cfg.grid.clock,
        "time_scale": scale,
        "pi_resets": 0,
        "hfg_breaches": 0,
        "flips": 0,
        "completed": False,
    }

    flips = 0
    for i in range(n):
        s_time = i * h
        t = scale * s_time
        z = plant.z
        y = measure(z, t)
        e = y - ref.y_m
        if i == 0:
            ms = replace(ms, t_k=t, e_k=abs(e))
        if monitoring_on:
            ms_new, switched = detect_switch(ms, e, t)
            if switched and fault != "skip-switch":
                ms = ms_new
                cs = flip_direction(cs)
                flips += 1
        phi_m = envelope(ms, t)
        if cs.mode == "rd1":
            cs = reset_pi(cs, t, ms.t_k)
            rho = modulation_rd1(cs, e, obs.eta_bar, z, t, res.bounds)
        else:
            rho = modulation_scaled(cs, e)
        if fault == "zero-gain":
            rho = 0.0
        cs = replace(cs, rho=rho)
        u = control_output(cs, e)

        cols["t"][i] = s_time
        cols["z"][i] = z
        cols["y"][i] = y
        cols["y_m"][i] = ref.y_m
        cols["e"][i] = e
        cols["phi_m"][i] = phi_m
        cols["u"][i] = u
        cols["rho"][i] = rho
        cols["eta_bar"][i] = obs.eta_bar
        k_col[i] = ms.k
        s_col[i] = cs.sigma
        if v_col is not None:
            v_col[i] = plant.v
        if src_col is not None:
            src_col[i] = source.position(t)
        if eta_col is not None:
            eta_col[i] = float(np.linalg.norm(plant.eta))

        if not (math.isfinite(z) and math.isfinite(e) and math.isfinite(u)):
            info.update(pi_resets=cs.resets, flips=flips)
            raise TrajectoryDiverged("trajectory diverged (non-finite state)", i, partial(i + 1))
        if abs(z) > bound or abs(e) > bound:
            info.update(pi_resets=cs.resets, flips=flips)
            raise TrajectoryDiverged(f"trajectory diverged: |z|={abs(z):.3g}, |e|={abs(e):.3g}", i, partial(i + 1))

        if i == n - 1:
            break
        if normal:
            plant = step_normal_form(plant, u, t, h * scale)
        else:
            plant = step_linear_sensor(plant, u, h, scale)
        if use_observer:
            obs = observer_step(obs, z, t, h * scale)
        ref = reference_step(ref, h, scale)

    info.update(
        pi_resets=cs.resets,
        hfg_breaches=getattr(plant, "breaches", 0),
        flips=flips,
        completed=True,
    )
    trace = partial(n)
    if not trace.is_finite():
        raise SimulationFault("non-finite value in accepted trace")
    log.debug("run %s finished: %d samples, %d switches", cfg.name, n, flips)
    return trace
