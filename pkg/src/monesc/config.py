"""Scenario configuration: INI-style file format, overrides and validation.

A scenario file is a set of ``[section]`` blocks of ``key = value`` lines.
Sections: plant, map, controller, observer, monitoring, grid, init, noise,
diagnostics. Every key has a default, unknown keys are rejected, and
``section.key=value`` overrides use the same value syntax as the file.

Value syntax:
    number          1.5, 1e-3
    list            1, 2.5, 3
    matrix          -1 1; 1 1      (rows separated by ';')
    optional        empty or ``none`` for "not set"
    schedule        0:1.0, 15:1.0, 30:2.0   (time:position knots)
"""

from __future__ import annotations

import configparser
import dataclasses
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import numpy as np

from .controller import ControllerState, DominationBounds
from .monitoring import MonitorState
from .observer import ObserverState
from .plants import (
    CostMap,
    LinearSensorPlant,
    MapDiagnostics,
    SourceField,
    delta_vicinity,
    gaussian_mixture,
)


class ConfigError(ValueError):
    """Raised for unreadable files, unknown keys and malformed values."""


def _f(default, kind="float", doc=""):
    return field(default=default, metadata={"kind": kind, "doc": doc})


@dataclass(frozen=True)
class PlantSection:
    kind: str = _f("normal-form", "str", "normal-form or linear-sensor")
    eta_a: str = _f("-1", "matrix", "eta' = eta_a eta + eta_z z")
    eta_z: tuple = _f((1.0,), "list")
    z_eta: tuple = _f((1.0,), "list", "z' = z_eta.eta + z_z z + (hfg + hfg_z z) u")
    z_z: float = _f(1.0)
    hfg: float = _f(1.0)
    hfg_z: float = _f(0.0)
    hfg_min: float = _f(1.0, doc="lower bound on |phi2|")
    a: str = _f("-1", "matrix", "linear-sensor: x' = a x + b v, z = c x")
    b: tuple = _f((1.0,), "list")
    c: tuple = _f((1.0,), "list")
    mu: float = _f(1.0, doc="time-scale constant in (0, 1]")


@dataclass(frozen=True)
class MapSection:
    kind: str = _f("gaussian-mixture", "str")
    amplitudes: tuple = _f((1.0,), "list")
    centers: tuple = _f((0.0,), "list")
    widths: tuple = _f((1.0,), "list")
    quad_center: float = _f(0.0)
    quad_peak: float = _f(0.0)
    quad_curvature: float = _f(1.0)
    table_z: tuple = _f((), "list")
    table_y: tuple = _f((), "list")
    field: bool = _f(False, "bool", "treat the map as a moving source field over z - s(t)")
    ambient: float = _f(0.0)
    cap: float | None = _f(None, "optfloat")
    schedule: tuple = _f(((0.0, 0.0),), "schedule")
    on_time: float = _f(0.0)
    calibrated_width: float | None = _f(None, "optfloat", "informational: width chosen by calibration")


@dataclass(frozen=True)
class ControllerSection:
    mode: str = _f("rd1", "str", "rd1 or scaled")
    lam: float = _f(1.0, doc="error-dynamics gain; scaled mode multiplies it by mu")
    km: float = _f(1.0, doc="reference ramp slope; scaled mode multiplies it by mu")
    ym0: float = _f(0.0)
    ysat: float | None = _f(None, "optfloat")
    delta: float = _f(0.1)
    r: float | None = _f(None, "optfloat", "monitoring floor")
    r_coeff: float | None = _f(None, "optfloat", "scaled mode: r = r_coeff * sqrt(mu)")
    l_phi: float | None = _f(None, "optfloat")
    l_phi_per_r: float | None = _f(None, "optfloat", "L_Phi = l_phi_per_r * r")
    kp_ratio: float = _f(1.0, doc="kp_min = kp_ratio * L_Phi")
    sigma0: int = _f(1, "int")
    alpha1_gain: float = _f(1.0)
    phi1_gain: float = _f(1.0)
    phi1_offset: float = _f(0.0)
    phi_bar_const: float | None = _f(None, "optfloat", "empty: sup |Phi'| computed from the map")
    phi_bar_slope: float = _f(0.0)
    pi_enabled: bool = _f(True, "bool")
    pi_cap: float = _f(10.0)
    pi_dwell: float = _f(1.0)


@dataclass(frozen=True)
class ObserverSection:
    enabled: bool = _f(True, "bool")
    lam0: float = _f(0.8)
    gain: float = _f(2.0)
    offset: float = _f(0.0)


@dataclass(frozen=True)
class MonitoringSection:
    enabled: bool = _f(True, "bool", "false freezes the direction at sigma0")
    variant: str = _f("new", "str")
    c0: float = _f(2.0)
    a0: float = _f(1.0)


@dataclass(frozen=True)
class GridSection:
    h: float = _f(1e-3)
    T: float = _f(15.0)
    clock: str = _f("t", "str", "t or tau; tau runs the time-scaled system with t = mu tau")


@dataclass(frozen=True)
class InitSection:
    z0: float = _f(0.0)
    eta0: tuple = _f((0.0,), "list")
    eta_bar0: float = _f(0.0)
    v0: float = _f(0.0)
    x0: tuple = _f((), "list", "empty: x0 = z0 c / |c|^2")


@dataclass(frozen=True)
class NoiseSection:
    amplitude: float = _f(0.0, doc="std of additive Gaussian noise on y")
    seed: int = _f(0, "int")


@dataclass(frozen=True)
class DiagnosticsSection:
    divergence_bound: float = _f(1e6)
    fault: str = _f("none", "str", "none, skip-switch or zero-gain (test hooks)")


SECTIONS = {
    "plant": PlantSection,
    "map": MapSection,
    "controller": ControllerSection,
    "observer": ObserverSection,
    "monitoring": MonitoringSection,
    "grid": GridSection,
    "init": InitSection,
    "noise": NoiseSection,
    "diagnostics": DiagnosticsSection,
}
FAULTS = ("none", "skip-switch", "zero-gain")


@dataclass(frozen=True)
class ScenarioConfig:
    plant: PlantSection = PlantSection()
    map: MapSection = MapSection()
    controller: ControllerSection = ControllerSection()
    observer: ObserverSection = ObserverSection()
    monitoring: MonitoringSection = MonitoringSection()
    grid: GridSection = GridSection()
    init: InitSection = InitSection()
    noise: NoiseSection = NoiseSection()
    diagnostics: DiagnosticsSection = DiagnosticsSection()
    name: str = "custom"


# ---------------------------------------------------------------------------
# value parsing


def _parse_float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"not a number: {text!r}") from None


def _parse_value(kind: str, text: str):
    text = text.strip()
    if kind == "float":
        return _parse_float(text)
    if kind == "optfloat":
        return None if text.lower() in ("", "none") else _parse_float(text)
    if kind == "int":
        try:
            return int(text)
        except ValueError:
            raise ConfigError(f"not an integer: {text!r}") from None
    if kind == "bool":
        low = text.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ConfigError(f"not a boolean: {text!r}")
    if kind == "str":
        return text
    if kind == "list":
        return tuple(_parse_float(p) for p in text.replace(",", " ").split())
    if kind == "matrix":
        rows = [r.replace(",", " ").split() for r in text.split(";")]
        if not rows or any(len(r) != len(rows[0]) or not r for r in rows):
            raise ConfigError(f"malformed matrix: {text!r}")
        for r in rows:
            for p in r:
                _parse_float(p)
        return text
    if kind == "schedule":
        knots = []
        for part in text.split(","):
            if not part.strip():
                continue
            try:
                t, s = part.split(":")
            except ValueError:
                raise ConfigError(f"schedule knot must be time:position, got {part!r}") from None
            knots.append((_parse_float(t), _parse_float(s)))
        if not knots:
            raise ConfigError("schedule needs at least one knot")
        return tuple(knots)
    raise ConfigError(f"unknown value kind {kind}")


def _format_value(kind: str, value) -> str:
    if value is None:
        return ""
    if kind in ("float", "optfloat"):
        return repr(float(value))
    if kind == "bool":
        return "true" if value else "false"
    if kind == "list":
        return ", ".join(repr(float(v)) for v in value)
    if kind == "schedule":
        return ", ".join(f"{t!r}:{s!r}" for t, s in value)
    return str(value)


def parse_matrix(text: str) -> np.ndarray:
    rows = [[float(p) for p in r.replace(",", " ").split()] for r in text.split(";")]
    return np.array(rows, dtype=float)


def _field_kinds(section_cls) -> dict[str, str]:
    return {f.name: f.metadata["kind"] for f in fields(section_cls)}


def set_value(cfg: ScenarioConfig, dotted: str, text: str) -> ScenarioConfig:
    """Return a copy of ``cfg`` with ``section.key`` set from its text form."""
    if "." not in dotted:
        raise ConfigError(f"override key must look like section.key, got {dotted!r}")
    section, key = dotted.split(".", 1)
    section, key = section.strip(), key.strip()
    if section not in SECTIONS:
        raise ConfigError(f"unknown section [{section}]")
    kinds = _field_kinds(SECTIONS[section])
    if key not in kinds:
        raise ConfigError(f"unknown key {key!r} in [{section}]")
    value = _parse_value(kinds[key], text)
    return replace(cfg, **{section: replace(getattr(cfg, section), **{key: value})})


def apply_overrides(cfg: ScenarioConfig, overrides) -> ScenarioConfig:
    """Apply ``section.key=value`` strings in order."""
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override must be key=value, got {item!r}")
        key, text = item.split("=", 1)
        cfg = set_value(cfg, key, text)
    return cfg


def loads_config(text: str, base: ScenarioConfig | None = None, name: str = "custom") -> ScenarioConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str  # keep key case (grid.T)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    cfg = replace(base or ScenarioConfig(), name=name)
    for section in parser.sections():
        for key, value in parser.items(section):
            cfg = set_value(cfg, f"{section}.{key}", value)
    return cfg


def load_config(path) -> ScenarioConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return loads_config(text, name=Path(path).stem)


def dumps_config(cfg: ScenarioConfig) -> str:
    lines = []
    for section, cls in SECTIONS.items():
        lines.append(f"[{section}]")
        sec = getattr(cfg, section)
        for f in fields(cls):
            lines.append(f"{f.name} = {_format_value(f.metadata['kind'], getattr(sec, f.name))}")
        lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# resolution of derived quantities


@dataclass(frozen=True)
class Resolved:
    """Everything the simulator needs, derived from a config."""

    cost_map: CostMap
    source: SourceField | None
    diagnostics: MapDiagnostics
    mu: float
    scale: float  # derivative multiplier: mu on the tau clock, else 1
    r: float
    l_phi: float
    kp_min: float
    lam_eff: float
    km_eff: float
    bounds: DominationBounds
    monitor: MonitorState
    controller: ControllerState
    observer: ObserverState
    y_star: float

    def effective(self) -> dict[str, Any]:
        d = self.diagnostics
        return {
            "mu": self.mu,
            "r": self.r,
            "l_phi": self.l_phi,
            "kp_min": self.kp_min,
            "lam_effective": self.lam_eff,
            "km_effective": self.km_eff,
            "phi_bar_const": self.bounds.phi_bar_const,
            "z_star": d.z_star,
            "y_star": self.y_star,
            "vicinity_width": d.delta,
            "delta_lower_edge": d.lower,
            "delta_upper_edge": d.upper,
            "sup_slope": d.sup_slope,
            "time_scale": self.scale,
        }


def build_map(m: MapSection) -> CostMap:
    if m.kind == "gaussian-mixture":
        return gaussian_mixture(m.amplitudes, m.centers, m.widths)
    if m.kind == "quadratic":
        return CostMap(kind="quadratic", center=m.quad_center, peak=m.quad_peak, curvature=m.quad_curvature)
    return CostMap(kind=m.kind, table_z=tuple(m.table_z), table_y=tuple(m.table_y))


def _resolve_or_problems(cfg: ScenarioConfig) -> tuple[Resolved | None, list[str]]:
    p: list[str] = []
    c = cfg.controller
    if cfg.plant.kind not in ("normal-form", "linear-sensor"):
        p.append("plant.kind must be normal-form or linear-sensor")
    if c.mode == "scaled" and cfg.plant.kind != "linear-sensor":
        p.append("scaled mode requires a linear-sensor plant")
    if c.mode == "rd1" and cfg.plant.kind != "normal-form":
        p.append("rd1 mode requires a normal-form plant")
    if cfg.grid.clock not in ("t", "tau"):
        p.append("grid.clock must be t or tau")
    if cfg.grid.clock == "tau" and c.mode != "scaled":
        p.append("grid.clock = tau requires scaled mode")
    if not cfg.grid.h > 0:
        p.append("grid.h must be positive")
    elif not cfg.grid.T >= cfg.grid.h:
        p.append("grid.T must be at least grid.h")
    if cfg.diagnostics.fault not in FAULTS:
        p.append(f"diagnostics.fault must be one of {', '.join(FAULTS)}")
    if not cfg.diagnostics.divergence_bound > 0:
        p.append("diagnostics.divergence_bound must be positive")
    if cfg.noise.amplitude < 0:
        p.append("noise.amplitude must be nonnegative")
    if c.ysat is not None and c.ysat < c.ym0:
        p.append("controller.ysat must be at least controller.ym0")

    mu = cfg.plant.mu if cfg.plant.kind == "linear-sensor" else 1.0
    if not 0 < cfg.plant.mu <= 1:
        p.append("plant.mu must lie in (0, 1]")
        mu = 1.0
    if cfg.plant.kind == "linear-sensor" and c.mode == "rd1" and cfg.plant.mu != 1.0:
        p.append("plant.mu only applies in scaled mode")

    if (c.r is None) == (c.r_coeff is None):
        p.append("set exactly one of controller.r and controller.r_coeff")
        r = math.nan
    elif c.r is not None:
        r = c.r
    else:
        if c.mode != "scaled":
            p.append("controller.r_coeff needs scaled mode")
        r = c.r_coeff * math.sqrt(mu)
    if not r > 0 and not math.isnan(r):
        p.append("r must be positive")

    if (c.l_phi is None) == (c.l_phi_per_r is None):
        p.append("set exactly one of controller.l_phi and controller.l_phi_per_r")
        l_phi = math.nan
    else:
        l_phi = c.l_phi if c.l_phi is not None else c.l_phi_per_r * r
    if not l_phi > 0 and not math.isnan(l_phi):
        p.append("L_Phi must be positive")

    try:
        cmap = build_map(cfg.map)
    except ValueError as exc:
        p.append(str(exc))
        cmap = None
    source = None
    if cfg.map.field:
        try:
            source = SourceField(cmap, tuple(cfg.map.schedule), cfg.map.ambient, cfg.map.cap, cfg.map.on_time) if cmap else None
        except ValueError as exc:
            p.append(str(exc))

    diag = None
    if cmap is not None and l_phi > 0:
        try:
            diag = delta_vicinity(cmap, l_phi)
        except ValueError as exc:
            p.append(str(exc))

    if cfg.plant.kind == "normal-form":
        try:
            A = parse_matrix(cfg.plant.eta_a)
            n = A.shape[0]
            if A.shape != (n, n) or len(cfg.plant.eta_z) != n or len(cfg.plant.z_eta) != n:
                p.append("plant.eta_a, eta_z and z_eta have inconsistent dimensions")
            if len(cfg.init.eta0) != n:
                p.append(f"init.eta0 must have {n} entries")
        except ValueError:
            p.append("plant.eta_a is not a numeric matrix")
        if not cfg.plant.hfg_min > 0:
            p.append("plant.hfg_min must be positive")
        elif abs(cfg.plant.hfg) < cfg.plant.hfg_min and cfg.plant.hfg_z == 0:
            p.append("|plant.hfg| is below plant.hfg_min")
    elif cfg.plant.kind == "linear-sensor":
        try:
            A = parse_matrix(cfg.plant.a)
            x0 = cfg.init.x0 or tuple(np.asarray(cfg.plant.c) * 0.0)
            LinearSensorPlant(A, np.asarray(cfg.plant.b), np.asarray(cfg.plant.c), np.asarray(x0), 0.0, mu)
        except (ValueError, np.linalg.LinAlgError) as exc:
            p.append(str(exc))

    if c.phi_bar_const is None:
        phi_bar = diag.sup_slope if diag is not None else math.nan
    else:
        phi_bar = c.phi_bar_const
    bounds = DominationBounds(
        c.alpha1_gain, c.phi1_gain, c.phi1_offset, 0.0 if math.isnan(phi_bar) else phi_bar, c.phi_bar_slope
    )
    p.extend(bounds.problems())

    scale = mu if cfg.grid.clock == "tau" else 1.0
    lam_eff = c.lam * mu if c.mode == "scaled" else c.lam
    km_eff = c.km * mu if c.mode == "scaled" else c.km
    kp_min = c.kp_ratio * l_phi

    ctrl = ControllerState(
        sigma=c.sigma0,
        mode=c.mode,
        lam=lam_eff,
        km=km_eff,
        kp_min=1.0 if math.isnan(kp_min) else kp_min,
        delta=c.delta,
        mu=mu,
        pi_enabled=c.pi_enabled and c.mode == "rd1",
        pi_cap=c.pi_cap,
        pi_dwell=c.pi_dwell,
        a0=cfg.monitoring.a0,
    )
    p.extend(ctrl.problems())

    mon = MonitorState(
        variant=cfg.monitoring.variant,
        lam=lam_eff,
        r=1.0 if math.isnan(r) else r,
        c0=cfg.monitoring.c0,
        a0=cfg.monitoring.a0,
    )
    p.extend(q for q in mon.problems() if q not in p)

    obs = ObserverState(cfg.init.eta_bar0, cfg.observer.lam0, cfg.observer.gain, cfg.observer.offset)
    if cfg.observer.enabled:
        p.extend(obs.problems())
        if cfg.grid.h * scale * obs.lam0 >= 1.0:
            p.append("grid.h must be below 1/observer.lam0")

    if p:
        return None, list(dict.fromkeys(p))
    y_star = source.peak() if source is not None else diag.y_star
    return (
        Resolved(cmap, source, diag, mu, scale, r, l_phi, kp_min, lam_eff, km_eff, bounds, mon, ctrl, obs, y_star),
        [],
    )


def validate(cfg: ScenarioConfig) -> list[str]:
    """Return every violated rule; an empty list means the config is usable."""
    return _resolve_or_problems(cfg)[1]


def resolve(cfg: ScenarioConfig) -> Resolved:
    res, problems = _resolve_or_problems(cfg)
    if problems:
        raise ConfigError("; ".join(problems))
    return res


def config_dict(cfg: ScenarioConfig) -> dict[str, Any]:
    return dataclasses.asdict(cfg)
