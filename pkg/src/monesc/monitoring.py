"""Monitoring function: a decaying envelope on |e| whose violation flips the relay.

Variants, with e_k = |e(t_k)| frozen at the last switch:

    new          e_k exp(-lam (t - t_k)) + r
    legacy       e_k exp(-lam (t - t_k)) + a(k) exp(-t / a(k))
    global-seek  new + c(k)

Defaults are a(k) = k + a0 with a0 = 1 and c(k) = c0 / (k + 1) with c0 = 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

VARIANTS = ("new", "legacy", "global-seek")


@dataclass(frozen=True)
class MonitorState:
    variant: str = "new"
    lam: float = 1.0
    r: float = 0.1
    k: int = 0
    t_k: float = 0.0
    e_k: float = 0.0
    c0: float = 2.0
    a0: float = 1.0

    def problems(self) -> list[str]:
        out = []
        if self.variant not in VARIANTS:
            out.append(f"monitoring.variant must be one of {', '.join(VARIANTS)}")
        if not self.lam > 0:
            out.append("controller.lam must be positive")
        if not self.r > 0:
            out.append("r must be positive")
        if not self.c0 > 0:
            out.append("monitoring.c0 must be positive")
        if not self.a0 > 0:
            out.append("monitoring.a0 must be positive")
        return out


def a_seq(ms: MonitorState, k: int) -> float:
    return k + ms.a0


def c_seq(ms: MonitorState, k: int) -> float:
    return ms.c0 / (k + 1)


def envelope(ms: MonitorState, t: float) -> float:
    if t < ms.t_k - 1e-12:
        raise RuntimeError(f"envelope evaluated at t={t} before the last switch t_k={ms.t_k}")
    base = ms.e_k * math.exp(-ms.lam * (t - ms.t_k))
    if ms.variant == "new":
        return base + ms.r
    if ms.variant == "global-seek":
        return base + ms.r + c_seq(ms, ms.k)
    a = a_seq(ms, ms.k)
    return base + a * math.exp(-t / a)


def detect_switch(ms: MonitorState, e: float, t: float) -> tuple[MonitorState, bool]:
    """Register a switch when |e| >= envelope. Returns (state, switched)."""
    if abs(e) >= envelope(ms, t):
        return replace(ms, k=ms.k + 1, t_k=t, e_k=abs(e)), True
    return ms, False


@dataclass(frozen=True)
class BoundReport:
    passed: bool
    violations: int
    first_violation: int | None
    eps_step: float
    worst_excess: float  # max(|e| - phi_m) over the trace

    def line(self) -> str:
        where = "none" if self.first_violation is None else str(self.first_violation)
        return (
            f"monitor-bound {'pass' if self.passed else 'FAIL'} violations={self.violations} "
            f"eps_step={self.eps_step:.6g} worst_excess={self.worst_excess:.6g} first={where}"
        )


def bound_check(trace) -> BoundReport:
    """Check |e| <= phi_m + eps_step on every sample.

    eps_step is the largest one-sample growth of |e| found in the trace.
    """
    ae = np.abs(np.asarray(trace.e))
    phi = np.asarray(trace.phi_m)
    if ae.size == 0:
        return BoundReport(True, 0, None, 0.0, 0.0)
    eps = float(max(0.0, np.max(np.diff(ae)))) if ae.size > 1 else 0.0
    excess = ae - phi
    bad = np.flatnonzero(excess > eps)
    first = int(bad[0]) if bad.size else None
    return BoundReport(bad.size == 0, int(bad.size), first, eps, float(excess.max()))
