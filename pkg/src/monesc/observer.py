"""First-order norm observer for the unmeasured internal state.

eta_bar' = -lam0 * eta_bar + phi0(z), with phi0(z) = gain*|z| + offset.

With gain and offset nonnegative the input is nonnegative, so eta_bar stays
nonnegative under Euler whenever h < 1/lam0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class ObserverState:
    eta_bar: float = 0.0
    lam0: float = 0.8
    gain: float = 2.0
    offset: float = 0.0

    def problems(self) -> list[str]:
        out = []
        if not self.lam0 > 0:
            out.append("observer.lam0 must be positive")
        if self.gain < 0:
            out.append("observer.gain must be nonnegative")
        if self.offset < 0:
            out.append("observer.offset must be nonnegative")
        if self.eta_bar < 0:
            out.append("init.eta_bar0 must be nonnegative")
        return out


def observer_input(obs: ObserverState, z: float) -> float:
    return obs.gain * abs(z) + obs.offset


def observer_step(obs: ObserverState, z: float, t: float, h: float) -> ObserverState:
    if h * obs.lam0 >= 1.0:
        raise ValueError(f"step {h} must be below 1/lam0 = {1.0 / obs.lam0}")
    return replace(obs, eta_bar=obs.eta_bar + h * (-obs.lam0 * obs.eta_bar + observer_input(obs, z)))


@dataclass(frozen=True)
class NormBoundReport:
    passed: bool
    fitted_r: float  # smallest R with |eta| <= eta_bar + R exp(-lam0 t) on every sample
    allowed_r: float
    first_violation: int | None
    max_excess: float  # max(|eta| - eta_bar) over the trace

    def line(self) -> str:
        where = "none" if self.first_violation is None else str(self.first_violation)
        return (
            f"norm-bound {'pass' if self.passed else 'FAIL'} R_fit={self.fitted_r:.6g} "
            f"R_allowed={self.allowed_r:.6g} max_excess={self.max_excess:.6g} first_violation={where}"
        )


def check_norm_bound(trace, psi_margin: float = 1.0, tol: float = 1e-12) -> NormBoundReport:
    """Check |eta(t)| <= eta_bar(t) + R exp(-lam0 t).

    R is fitted from the trace as the smallest constant that makes the
    inequality hold. It is accepted when it does not exceed
    ``psi_margin * (|eta_bar(0)| + |eta(0)|)``, the size of the initial
    mismatch the exponential term is meant to absorb.
    """
    if trace.eta_norm is None:
        raise ValueError("trace carries no internal-state norm")
    t = np.asarray(trace.t)
    excess = np.asarray(trace.eta_norm) - np.asarray(trace.eta_bar)
    lam0 = trace.info["lam0"]
    scaled = np.where(excess > tol, excess * np.exp(lam0 * t), 0.0)
    fitted = float(scaled.max()) if scaled.size else 0.0
    allowed = psi_margin * (abs(float(trace.eta_bar[0])) + float(trace.eta_norm[0]))
    bad = np.flatnonzero(scaled > allowed * (1.0 + 1e-9) + tol)
    first = int(bad[0]) if bad.size else None
    max_excess = float(excess.max()) if excess.size else 0.0
    return NormBoundReport(first is None and math.isfinite(fitted), fitted, allowed, first, max_excess)
