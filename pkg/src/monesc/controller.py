"""Relay control law, reference model and the two modulation designs.

u = -sigma * rho * sgn(e), where sigma is the direction estimate flipped by the
monitoring function and rho is the modulation amplitude:

    rd1     rho = [phi1_bar*Phi_bar + Phi_bar^2 + k_m + lam|e|] / kp + Pi(k_pi) + delta
    scaled  rho = (mu / kp) (k_m + lam|e|) + mu*delta

with phi1_bar = alpha1(2|eta_bar|) + phi1(z), Phi_bar = Phi_bar(|z|) and
Pi(k) = a(k) exp(-t / a(k)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

MODES = ("rd1", "scaled")


@dataclass(frozen=True)
class ControllerState:
    sigma: int = 1
    mode: str = "rd1"
    lam: float = 1.0
    km: float = 1.0
    kp_min: float = 1.0
    delta: float = 0.1
    mu: float = 1.0
    rho: float = 0.0
    k_pi: int = 0
    pi_enabled: bool = True
    pi_cap: float = 10.0
    pi_dwell: float = 1.0
    a0: float = 1.0
    resets: int = 0

    def problems(self) -> list[str]:
        out = []
        if self.sigma not in (1, -1):
            out.append("controller.sigma0 must be +1 or -1")
        if self.mode not in MODES:
            out.append(f"controller.mode must be one of {', '.join(MODES)}")
        if not self.delta > 0:
            out.append("controller.delta must be positive")
        if not self.kp_min > 0:
            out.append("kp_min (kp_ratio * L_Phi) must be positive")
        if not self.lam > 0:
            out.append("controller.lam must be positive")
        if self.km < 0:
            out.append("controller.km must be nonnegative")
        if not 0 < self.mu <= 1:
            out.append("mu must lie in (0, 1]")
        if not self.pi_cap > 0:
            out.append("controller.pi_cap must be positive")
        if self.pi_dwell < 0:
            out.append("controller.pi_dwell must be nonnegative")
        return out


@dataclass(frozen=True)
class ReferenceModel:
    y_m: float = 0.0
    k_m: float = 1.0
    y_sat: float | None = None


@dataclass(frozen=True)
class DominationBounds:
    """Known bounding functions used by the rd1 modulation.

    alpha1(s) = alpha1_gain * s
    phi1(z)   = phi1_gain * |z| + phi1_offset
    Phi_bar(s) = phi_bar_const + phi_bar_slope * s
    """

    alpha1_gain: float = 1.0
    phi1_gain: float = 1.0
    phi1_offset: float = 0.0
    phi_bar_const: float = 1.0
    phi_bar_slope: float = 0.0

    def problems(self) -> list[str]:
        names = ("alpha1_gain", "phi1_gain", "phi1_offset", "phi_bar_const", "phi_bar_slope")
        return [f"controller.{n} must be nonnegative" for n in names if getattr(self, n) < 0]


def sgn(x: float) -> int:
    return (x > 0) - (x < 0)


def control_output(cs: ControllerState, e: float) -> float:
    return -cs.sigma * cs.rho * sgn(e)


def flip_direction(cs: ControllerState) -> ControllerState:
    return replace(cs, sigma=-cs.sigma, k_pi=cs.k_pi + 1)


def reference_step(rm: ReferenceModel, h: float, scale: float = 1.0) -> ReferenceModel:
    y = rm.y_m + h * scale * rm.k_m
    if rm.y_sat is not None and y > rm.y_sat:
        y = rm.y_sat
    return replace(rm, y_m=y)


def pi_term(cs: ControllerState, t: float) -> float:
    if not cs.pi_enabled:
        return 0.0
    a = cs.k_pi + cs.a0
    return a * math.exp(-t / a)


def modulation_rd1(
    cs: ControllerState, e: float, eta_bar: float, z: float, t: float, bounds: DominationBounds
) -> float:
    phi1_bar = bounds.alpha1_gain * 2.0 * abs(eta_bar) + bounds.phi1_gain * abs(z) + bounds.phi1_offset
    pb = bounds.phi_bar_const + bounds.phi_bar_slope * abs(z)
    return (phi1_bar * pb + pb * pb + cs.km + cs.lam * abs(e)) / cs.kp_min + pi_term(cs, t) + cs.delta


def modulation_scaled(cs: ControllerState, e: float) -> float:
    return cs.mu / cs.kp_min * (cs.km + cs.lam * abs(e)) + cs.mu * cs.delta


def reset_pi(cs: ControllerState, t: float, t_last_switch: float) -> ControllerState:
    """Restart the Pi sequence once it exceeds the cap after a quiet dwell.

    Quiet means no switch for ``pi_dwell`` seconds. Both conditions must hold.
    """
    if cs.pi_enabled and pi_term(cs, t) > cs.pi_cap and t - t_last_switch >= cs.pi_dwell:
        return replace(cs, k_pi=0, resets=cs.resets + 1)
    return cs
