"""Preset scenarios, run metrics and trace files.

Two presets ship with the package:

* ``preset_example1``: a second-order plant in normal form (eta' = -eta + z,
  z' = eta + z + u) climbing a two-bump map, with its global maximum near
  z = 5 and a local one near z = 3.
* ``preset_cart``: a servo cart carrying a light sensor along a track. The
  motor is z' = -17.2 z + 3.9 v behind an input integrator v' = u. The light
  field is a calibrated Gaussian that saturates at 5 V on top of 0.5 V of
  ambient light.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .config import (
    ControllerSection,
    DiagnosticsSection,
    GridSection,
    InitSection,
    MapSection,
    MonitoringSection,
    NoiseSection,
    ObserverSection,
    PlantSection,
    ScenarioConfig,
    dumps_config,
    resolve,
    validate,
)
from .plants import calibrate_field_width, slope_band
from .simcore import COLUMNS, SimTrace

EXAMPLE1_Z0 = (2.0, 4.0, 7.0)

# Reference start for Example 1. Starting the ramp above every value the map
# can reach keeps the early error one-signed, which lets the global-seek
# offset c(0) = 2 be cleared within the first fraction of a second.
EXAMPLE1_YM0 = 5.0

CART_AMBIENT = 0.5
CART_AMPLITUDE = 4.5
CART_CAP = 5.0
CART_WIDTHS = tuple(round(0.2 + 0.05 * i, 2) for i in range(33))


def preset_example1(z0: float = 4.0) -> ScenarioConfig:
    return ScenarioConfig(
        name=f"example1-z0={z0:g}",
        plant=PlantSection(kind="normal-form", eta_a="-1", eta_z=(1.0,), z_eta=(1.0,), z_z=1.0, hfg=1.0, hfg_min=1.0),
        map=MapSection(kind="gaussian-mixture", amplitudes=(1.0, 1.5), centers=(3.0, 5.0), widths=(0.5, 1.5)),
        controller=ControllerSection(
            mode="rd1",
            lam=2.0,
            km=1.0,
            ym0=EXAMPLE1_YM0,
            delta=0.1,
            r=0.1,
            l_phi=2.0 / 3.0,
            kp_ratio=1.0,
            sigma0=1,
            alpha1_gain=1.0,
            phi1_gain=1.0,
            phi_bar_const=None,
            phi_bar_slope=0.0,
            pi_enabled=True,
            pi_cap=10.0,
            pi_dwell=0.0,
        ),
        observer=ObserverSection(enabled=True, lam0=0.8, gain=2.0),
        monitoring=MonitoringSection(enabled=True, variant="global-seek", c0=2.0, a0=1.0),
        grid=GridSection(h=1e-3, T=15.0),
        init=InitSection(z0=float(z0), eta0=(0.0,), eta_bar0=0.0),
        noise=NoiseSection(),
        diagnostics=DiagnosticsSection(),
    )


CART_MU = 0.5


def cart_field_width() -> float:
    """Gaussian width giving the widest region with |Phi'| >= L_Phi = 20 r.

    Calibrated once at the nominal mu = 0.5. The field is a physical object, so
    sweeps over mu keep this width.
    """
    l_phi = 20.0 * 0.2 * math.sqrt(CART_MU)
    return calibrate_field_width(CART_AMPLITUDE, l_phi, CART_WIDTHS)


def preset_cart(moving: bool = False) -> ScenarioConfig:
    width = cart_field_width()
    if moving:
        schedule = ((0.0, 1.0), (15.0, 1.0), (30.0, 2.0))
        on_time = 4.0
    else:
        schedule = ((0.0, 1.0),)
        on_time = 0.0
    return ScenarioConfig(
        name="cart-moving" if moving else "cart-fixed",
        plant=PlantSection(kind="linear-sensor", a="-17.2", b=(3.9,), c=(1.0,), mu=CART_MU),
        map=MapSection(
            kind="gaussian-mixture",
            amplitudes=(CART_AMPLITUDE,),
            centers=(0.0,),
            widths=(width,),
            field=True,
            ambient=CART_AMBIENT,
            cap=CART_CAP,
            schedule=schedule,
            on_time=on_time,
            calibrated_width=width,
        ),
        controller=ControllerSection(
            mode="scaled",
            lam=1.0,
            km=2.0,
            ym0=0.0,
            ysat=5.0,
            delta=0.1,
            r_coeff=0.2,
            l_phi_per_r=20.0,
            kp_ratio=0.2,
            sigma0=1,
            pi_enabled=False,
        ),
        observer=ObserverSection(enabled=False),
        monitoring=MonitoringSection(enabled=True, variant="new"),
        grid=GridSection(h=1e-3, T=30.0),
        init=InitSection(z0=0.0, eta0=(), v0=0.0),
    )


# ---------------------------------------------------------------------------
# metrics


@dataclass(frozen=True)
class RunMetrics:
    first_entry_time: float | None  # first time inside D_delta, None if never
    terminal_amplitude: float  # max |y - y*| over the final 20% of the run
    switch_count: int
    max_abs_e: float
    z_band: float  # max |z - z*| over the final 20%, relative to the source when there is one
    completed: bool

    def as_dict(self) -> dict:
        return asdict(self)


def terminal_window(trace: SimTrace, fraction: float = 0.2) -> slice:
    t = np.asarray(trace.t)
    start = t[-1] - fraction * t[-1]
    return slice(int(np.searchsorted(t, start - 1e-12)), len(t))


def relative_position(trace: SimTrace, z_star: float) -> np.ndarray:
    z = np.asarray(trace.z)
    if trace.src is not None:
        return z - np.asarray(trace.src) - z_star
    return z - z_star


def compute_metrics(trace: SimTrace, config: ScenarioConfig) -> RunMetrics:
    res = resolve(config)
    d = res.diagnostics
    rel = relative_position(trace, d.z_star)
    inside = np.abs(rel) < 0.5 * d.delta
    if trace.src is not None and config.map.on_time > 0:
        inside &= np.asarray(trace.t) * res.scale >= config.map.on_time
    hits = np.flatnonzero(inside)
    entry = float(trace.t[hits[0]]) if hits.size else None
    w = terminal_window(trace)
    amp = float(np.max(np.abs(np.asarray(trace.y)[w] - res.y_star)))
    return RunMetrics(
        first_entry_time=entry,
        terminal_amplitude=amp,
        switch_count=int(trace.k[-1]),
        max_abs_e=float(np.max(np.abs(trace.e))),
        z_band=float(np.max(np.abs(rel[w]))),
        completed=bool(trace.info.get("completed", False)),
    )


# ---------------------------------------------------------------------------
# CSV


def _fmt(x) -> str:
    return repr(float(x))


def trace_csv_text(trace: SimTrace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    n = len(trace)
    cols = {c: getattr(trace, c) for c in COLUMNS}
    for i in range(n):
        row = []
        for c in COLUMNS:
            col = cols[c]
            if col is None:
                row.append("")
            elif c in ("k", "sigma"):
                row.append(str(int(col[i])))
            else:
                row.append(_fmt(col[i]))
        w.writerow(row)
    return buf.getvalue()


def emit_csv(trace: SimTrace, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write(trace_csv_text(trace))
    return path


def read_csv(path) -> SimTrace:
    with open(path, encoding="ascii", newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if tuple(header) != COLUMNS:
        raise ValueError(f"unexpected header {header}")
    data = {}
    for j, c in enumerate(COLUMNS):
        vals = [r[j] for r in body]
        if c in ("v", "src") and all(v == "" for v in vals):
            data[c] = None
        elif c in ("k", "sigma"):
            data[c] = np.array([int(v) for v in vals], dtype=np.int64)
        else:
            data[c] = np.array([float(v) for v in vals])
    step = float(data["t"][1] - data["t"][0]) if len(body) > 1 else 0.0
    return SimTrace(**data, step_size=step)


def csv_digest(trace: SimTrace) -> str:
    return hashlib.sha256(trace_csv_text(trace).encode("ascii")).hexdigest()


# ---------------------------------------------------------------------------
# metadata and artifacts


def metadata(config: ScenarioConfig, trace: SimTrace | None = None, error: str | None = None) -> dict:
    res = resolve(config)
    c = config.controller
    meta = {
        "scenario": config.name,
        "mode": c.mode,
        "base_gains": {"lam": c.lam, "km": c.km, "delta": c.delta, "mu": config.plant.mu},
        "effective": res.effective(),
        "monitoring_variant": config.monitoring.variant,
    }
    if config.map.field:
        w = config.map.widths[0] if config.map.widths else None
        inner, outer = slope_band(config.map.amplitudes[0], w, res.l_phi) if w else (math.nan, math.nan)
        meta["field_calibration"] = {
            "width": w,
            "amplitude": config.map.amplitudes[0],
            "ambient": config.map.ambient,
            "cap": config.map.cap,
            "slope_region": [inner, outer],
            "candidates": [CART_WIDTHS[0], CART_WIDTHS[-1], len(CART_WIDTHS)],
        }
    if trace is not None:
        meta["samples"] = len(trace)
        meta["run_info"] = {k: v for k, v in trace.info.items()}
        meta["csv_sha256"] = csv_digest(trace)
    if error:
        meta["error"] = error
    return meta


def write_artifacts(out_dir, config: ScenarioConfig, trace: SimTrace, error: str | None = None) -> dict:
    """Write trace.csv, metrics.json, metadata.json and config.ini into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    emit_csv(trace, out / "trace.csv")
    metrics = compute_metrics(trace, config) if len(trace) > 1 else None
    with open(out / "metrics.json", "w", encoding="utf-8") as fh:
        json.dump(metrics.as_dict() if metrics else None, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out / "metadata.json", "w", encoding="utf-8") as fh:
        json.dump(metadata(config, trace, error), fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")
    (out / "config.ini").write_text(dumps_config(config), encoding="utf-8")
    return metrics.as_dict() if metrics else {}


__all__ = [
    "EXAMPLE1_Z0",
    "RunMetrics",
    "compute_metrics",
    "csv_digest",
    "emit_csv",
    "metadata",
    "preset_cart",
    "preset_example1",
    "read_csv",
    "trace_csv_text",
    "validate",
    "write_artifacts",
]
