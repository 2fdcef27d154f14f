"""Static output maps and the plant families driven by the relay controller.

Two plant shapes are supported:

* ``NormalFormPlant``: internal state eta plus a scalar z that enters the
  output map directly (eta' = phi0, z' = phi1 + phi2*u).
* ``LinearSensorPlant``: an input integrator v' = u feeding a Hurwitz linear
  system x' = Ax + Bv with z = Cx.

The output map is a ``CostMap``. ``SourceField`` wraps a map over the relative
position ``p - s(t)`` to model a light source moving along a track, including
an ambient floor and a saturating sensor.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq, minimize_scalar

MAP_KINDS = ("gaussian-mixture", "quadratic", "user-table")


@dataclass(frozen=True)
class GaussianComponent:
    amplitude: float
    center: float
    width: float


@dataclass(frozen=True)
class CostMap:
    """Scalar map y = Phi(z) with a unique global maximiser.

    ``gaussian-mixture`` evaluates sum a_i exp(-(z - c_i)^2 / w_i).
    ``quadratic`` evaluates peak - curvature (z - center)^2.
    ``user-table`` interpolates (table_z, table_y) with a monotone cubic
    (PCHIP); its derivative is the interpolant's derivative, so it is only
    piecewise smooth.
    """

    kind: str = "gaussian-mixture"
    components: tuple[GaussianComponent, ...] = ()
    center: float = 0.0
    peak: float = 0.0
    curvature: float = 1.0
    table_z: tuple[float, ...] = ()
    table_y: tuple[float, ...] = ()
    _interp: object = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        problems = self.problems()
        if problems:
            raise ValueError("; ".join(problems))
        if self.kind == "user-table":
            pchip = PchipInterpolator(np.asarray(self.table_z), np.asarray(self.table_y), extrapolate=True)
            object.__setattr__(self, "_interp", (pchip, pchip.derivative()))

    def problems(self) -> list[str]:
        out: list[str] = []
        if self.kind not in MAP_KINDS:
            out.append(f"map.kind must be one of {', '.join(MAP_KINDS)}")
        elif self.kind == "gaussian-mixture":
            if not self.components:
                out.append("map needs at least one component")
            if any(not c.width > 0 for c in self.components):
                out.append("map widths must be positive")
            if any(not math.isfinite(c.amplitude) or not math.isfinite(c.center) for c in self.components):
                out.append("map amplitudes and centers must be finite")
        elif self.kind == "quadratic":
            if not self.curvature > 0:
                out.append("map curvature must be positive")
        else:
            if len(self.table_z) < 3 or len(self.table_z) != len(self.table_y):
                out.append("map table needs at least 3 matching (z, y) points")
            elif any(b <= a for a, b in zip(self.table_z, self.table_z[1:])):
                out.append("map table_z must be strictly increasing")
        return out

    def __call__(self, z):
        return eval_map(self, z)

    def span(self) -> tuple[float, float]:
        """Interval that contains every feature of the map."""
        if self.kind == "gaussian-mixture":
            lo = min(c.center - 6.0 * math.sqrt(c.width) for c in self.components)
            hi = max(c.center + 6.0 * math.sqrt(c.width) for c in self.components)
            return lo, hi
        if self.kind == "quadratic":
            return self.center - 10.0, self.center + 10.0
        return self.table_z[0], self.table_z[-1]


def gaussian_mixture(amplitudes: Sequence[float], centers: Sequence[float], widths: Sequence[float]) -> CostMap:
    if not len(amplitudes) == len(centers) == len(widths):
        raise ValueError("amplitudes, centers and widths must have equal length")
    comps = tuple(GaussianComponent(float(a), float(c), float(w)) for a, c, w in zip(amplitudes, centers, widths))
    return CostMap(kind="gaussian-mixture", components=comps)


def example1_map() -> CostMap:
    """Two bumps: a local maximum near z=3 and the global one near z=5."""
    return gaussian_mixture([1.0, 1.5], [3.0, 5.0], [0.5, 1.5])


def eval_map(cmap: CostMap, z):
    """Phi(z) for a float or an array of points."""
    if cmap.kind == "gaussian-mixture":
        if isinstance(z, np.ndarray):
            return sum(c.amplitude * np.exp(-((z - c.center) ** 2) / c.width) for c in cmap.components)
        return sum(c.amplitude * math.exp(-((z - c.center) ** 2) / c.width) for c in cmap.components)
    if cmap.kind == "quadratic":
        return cmap.peak - cmap.curvature * (z - cmap.center) ** 2
    val = cmap._interp[0](z)
    return val if isinstance(z, np.ndarray) else float(val)


def map_derivative(cmap: CostMap, z):
    """Analytic Phi'(z). Diagnostics and bound construction only."""
    if cmap.kind == "gaussian-mixture":
        if isinstance(z, np.ndarray):
            return sum(
                -2.0 * c.amplitude * (z - c.center) / c.width * np.exp(-((z - c.center) ** 2) / c.width)
                for c in cmap.components
            )
        return sum(
            -2.0 * c.amplitude * (z - c.center) / c.width * math.exp(-((z - c.center) ** 2) / c.width)
            for c in cmap.components
        )
    if cmap.kind == "quadratic":
        return -2.0 * cmap.curvature * (z - cmap.center)
    val = cmap._interp[1](z)
    return val if isinstance(z, np.ndarray) else float(val)


# ---------------------------------------------------------------------------
# diagnostics


@dataclass(frozen=True)
class MapDiagnostics:
    z_star: float
    y_star: float
    l_phi: float
    lower: float  # first point left of z_star where |Phi'| reaches l_phi
    upper: float  # same, to the right
    delta: float  # D_delta = {|z - z_star| < delta / 2}
    sup_slope: float
    sup_slope_at: float

    def in_vicinity(self, z) -> bool:
        return abs(z - self.z_star) < 0.5 * self.delta


def _grid(cmap: CostMap, points: int) -> np.ndarray:
    lo, hi = cmap.span()
    return np.linspace(lo, hi, points)


def maximizer(cmap: CostMap, points: int = 20001) -> tuple[float, float]:
    """Global maximiser found on a grid and refined by a bounded search.

    The refined value is checked against every grid point, so y* >= Phi(z) on
    the verification grid holds by construction.
    """
    if cmap.kind == "quadratic":
        return cmap.center, cmap.peak
    zs = _grid(cmap, points)
    ys = eval_map(cmap, zs)
    i = int(np.argmax(ys))
    step = zs[1] - zs[0]
    res = minimize_scalar(
        lambda s: -eval_map(cmap, s),
        bounds=(zs[max(i - 1, 0)], zs[min(i + 1, len(zs) - 1)]),
        method="bounded",
        options={"xatol": 1e-12 * max(1.0, step)},
    )
    z_star = float(res.x)
    # the bounded search stalls near sqrt(eps) on a flat peak; polish with a root of Phi'
    a, b = z_star - step, z_star + step
    if map_derivative(cmap, a) > 0 > map_derivative(cmap, b):
        z_star = float(brentq(lambda s: map_derivative(cmap, s), a, b, xtol=1e-15, rtol=1e-15))
    y_star = float(eval_map(cmap, z_star))
    if y_star < ys[i]:
        z_star, y_star = float(zs[i]), float(ys[i])
    return z_star, y_star


def sup_slope(cmap: CostMap, points: int = 200001) -> tuple[float, float]:
    """Return (sup |Phi'|, location), grid search plus local refinement."""
    zs = _grid(cmap, points)
    d = np.abs(map_derivative(cmap, zs))
    i = int(np.argmax(d))
    if cmap.kind == "quadratic":
        return float(d[i]), float(zs[i])
    res = minimize_scalar(
        lambda s: -abs(map_derivative(cmap, s)),
        bounds=(zs[max(i - 1, 0)], zs[min(i + 1, len(zs) - 1)]),
        method="bounded",
        options={"xatol": 1e-12},
    )
    best = abs(map_derivative(cmap, float(res.x)))
    if best >= d[i]:
        return float(best), float(res.x)
    return float(d[i]), float(zs[i])


def _first_crossing(cmap: CostMap, l_phi: float, start: float, stop: float, points: int) -> float:
    """Walk from ``start`` towards ``stop`` and return where |Phi'| first reaches l_phi."""
    zs = np.linspace(start, stop, points)
    g = np.abs(map_derivative(cmap, zs)) - l_phi
    hits = np.flatnonzero(g >= 0.0)
    if hits.size == 0:
        raise ValueError(f"|Phi'| never reaches L_Phi={l_phi} between {start} and {stop}")
    j = int(hits[0])
    if j == 0:
        return float(zs[0])
    return float(brentq(lambda s: abs(map_derivative(cmap, s)) - l_phi, zs[j - 1], zs[j], xtol=1e-13))


def delta_vicinity(cmap: CostMap, l_phi: float, points: int = 400001) -> MapDiagnostics:
    """Largest symmetric interval around z* on which |Phi'| < l_phi.

    The edges are found by scanning outward from z* on each side, so nearby
    secondary bumps do not confuse a bracketing root finder.
    """
    if not l_phi > 0:
        raise ValueError("L_Phi must be positive")
    z_star, y_star = maximizer(cmap)
    lo, hi = cmap.span()
    width = hi - lo
    lower = _first_crossing(cmap, l_phi, z_star, z_star - 2.0 * width, points)
    upper = _first_crossing(cmap, l_phi, z_star, z_star + 2.0 * width, points)
    half = min(z_star - lower, upper - z_star)
    m, at = sup_slope(cmap)
    return MapDiagnostics(z_star, y_star, l_phi, lower, upper, 2.0 * half, m, at)


def slope_band(amplitude: float, width: float, l_phi: float, points: int = 20001) -> tuple[float, float]:
    """Region x >= 0 where a single Gaussian a*exp(-x^2/w) has slope >= l_phi.

    Returns (inner, outer); (nan, nan) when the slope never reaches l_phi.
    """
    xs = np.linspace(0.0, 6.0 * math.sqrt(width), points)
    slope = 2.0 * amplitude * xs / width * np.exp(-(xs**2) / width)
    ok = np.flatnonzero(slope >= l_phi)
    if ok.size == 0:
        return math.nan, math.nan
    return float(xs[ok[0]]), float(xs[ok[-1]])


def calibrate_field_width(amplitude: float, l_phi: float, candidates: Sequence[float]) -> float:
    """Pick the Gaussian width that maximises the region where |Phi'| >= l_phi."""
    best, best_len = None, -1.0
    for w in candidates:
        inner, outer = slope_band(amplitude, w, l_phi)
        length = outer - inner if math.isfinite(inner) else -1.0
        if length > best_len:
            best, best_len = float(w), length
    if best is None or best_len <= 0:
        raise ValueError("no candidate width reaches the requested slope")
    return best


# ---------------------------------------------------------------------------
# plants


@dataclass(frozen=True)
class NormalFormPlant:
    """eta' = phi0(eta, z, t), z' = phi1(eta, z, t) + phi2(eta, z, t) u."""

    eta: np.ndarray
    z: float
    phi0: Callable[[np.ndarray, float, float], np.ndarray]
    phi1: Callable[[np.ndarray, float, float], float]
    phi2: Callable[[np.ndarray, float, float], float]
    phi2_min: float
    breaches: int = 0


def linear_normal_form(
    eta_a, eta_z, z_eta, z_z: float, hfg: float, hfg_z: float, hfg_min: float, eta0, z0: float
) -> NormalFormPlant:
    """Normal form with affine right-hand sides.

    eta' = eta_a @ eta + eta_z * z
    z'   = z_eta . eta + z_z * z + (hfg + hfg_z * z) * u
    """
    A = np.atleast_2d(np.asarray(eta_a, dtype=float))
    bz = np.asarray(eta_z, dtype=float).reshape(-1)
    ce = np.asarray(z_eta, dtype=float).reshape(-1)
    n = A.shape[0]
    if A.shape != (n, n) or bz.shape != (n,) or ce.shape != (n,):
        raise ValueError("normal-form blocks have inconsistent dimensions")
    eta = np.asarray(eta0, dtype=float).reshape(-1)
    if eta.shape != (n,):
        raise ValueError(f"init.eta0 must have {n} entries")
    return NormalFormPlant(
        eta=eta,
        z=float(z0),
        phi0=lambda e, z, t: A @ e + bz * z,
        phi1=lambda e, z, t: float(ce @ e) + z_z * z,
        phi2=lambda e, z, t: hfg + hfg_z * z,
        phi2_min=hfg_min,
    )


def step_normal_form(plant: NormalFormPlant, u: float, t: float, h: float) -> NormalFormPlant:
    """One Euler step. A |phi2| below phi2_min is counted, not fatal."""
    if not h > 0:
        raise ValueError("step size must be positive")
    eta, z = plant.eta, plant.z
    g = plant.phi2(eta, z, t)
    breaches = plant.breaches + (1 if abs(g) < plant.phi2_min else 0)
    d_eta = plant.phi0(eta, z, t)
    dz = plant.phi1(eta, z, t) + g * u
    return replace(plant, eta=eta + h * d_eta, z=z + h * dz, breaches=breaches)


@dataclass(frozen=True)
class LinearSensorPlant:
    """v' = u, x' = A x + B v, z = C x, with A Hurwitz."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    x: np.ndarray
    v: float = 0.0
    mu: float = 1.0

    def __post_init__(self) -> None:
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        n = A.shape[0]
        B = np.asarray(self.B, dtype=float).reshape(-1)
        C = np.asarray(self.C, dtype=float).reshape(-1)
        x = np.asarray(self.x, dtype=float).reshape(-1)
        if A.shape != (n, n) or B.shape != (n,) or C.shape != (n,) or x.shape != (n,):
            raise ValueError("linear-sensor blocks have inconsistent dimensions")
        if not np.all(np.linalg.eigvals(A).real < 0):
            raise ValueError("plant.a must be Hurwitz (all eigenvalues with negative real part)")
        if abs(float(C @ np.linalg.solve(A, B))) < 1e-12:
            raise ValueError("C A^-1 B must be nonzero")
        if not 0 < self.mu <= 1:
            raise ValueError("plant.mu must lie in (0, 1]")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "x", x)

    @property
    def z(self) -> float:
        return float(self.C @ self.x)

    def dc_gain(self) -> float:
        """Static gain -C A^-1 B from v to z."""
        return float(-self.C @ np.linalg.solve(self.A, self.B))


def step_linear_sensor(plant: LinearSensorPlant, u: float, h: float, scale: float = 1.0) -> LinearSensorPlant:
    """One Euler step of the integrator and the linear block.

    Both derivatives are taken at the current state. ``scale`` multiplies the
    right-hand side, which is how the time-scaled (tau) system is simulated.
    """
    if not h > 0:
        raise ValueError("step size must be positive")
    hs = h * scale
    x = plant.x + hs * (plant.A @ plant.x + plant.B * plant.v)
    return replace(plant, x=x, v=plant.v + hs * u)


@dataclass(frozen=True)
class SourceField:
    """Light field seen by a sensor at position p while the source sits at s(t).

    y = min(cap, ambient + Phi(p - s(t))) once the source is on, and
    y = min(cap, ambient) before ``on_time``.
    """

    shape: CostMap
    schedule: tuple[tuple[float, float], ...] = ((0.0, 0.0),)
    ambient: float = 0.0
    cap: float | None = 5.0
    on_time: float = 0.0

    def __post_init__(self) -> None:
        if self.ambient < 0:
            raise ValueError("map.ambient must be nonnegative")
        if not self.schedule:
            raise ValueError("map.schedule needs at least one knot")
        ts = [k[0] for k in self.schedule]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("map.schedule times must be strictly increasing")
        if self.cap is not None and self.cap <= self.ambient:
            raise ValueError("map.cap must exceed the ambient level")
        object.__setattr__(self, "_ts", ts)

    def position(self, t: float) -> float:
        """Piecewise-linear source position, held constant outside the knots."""
        ts = self._ts
        if t <= ts[0]:
            return self.schedule[0][1]
        if t >= ts[-1]:
            return self.schedule[-1][1]
        j = bisect.bisect_right(ts, t)
        (t0, s0), (t1, s1) = self.schedule[j - 1], self.schedule[j]
        return s0 + (s1 - s0) * (t - t0) / (t1 - t0)

    def peak(self) -> float:
        _, y_star = maximizer(self.shape)
        y = self.ambient + y_star
        return min(y, self.cap) if self.cap is not None else y


def source_output(fld: SourceField, p: float, t: float) -> float:
    y = fld.ambient
    if t >= fld.on_time:
        y += eval_map(fld.shape, p - fld.position(t))
    if fld.cap is not None and y > fld.cap:
        y = fld.cap
    return y
