"""Phase-plane quantities of the limit problem: the homoclinic extent, the
companion turning point, the half-period time map and its center limit, and
the pointwise certification of the kinetic term's monotonicity conditions.

The half-period map for an orbit with turning points w_- < w0 < w_+ is

    T(w_-) = int_{w_-}^{w0} dw / sqrt(2 [F(w_-) - F(w)])
           + int_{w0}^{w_+} dw / sqrt(2 [F(w_+) - F(w)]),

a pair of integrals with square-root turning-point singularities.  Each is
evaluated after substituting w = w0 + theta (w_end - w0), theta = cos(psi):
the Jacobian sin(psi) cancels the endpoint singularity, leaving a bounded
integrand for adaptive Gauss-Legendre panels.

Two evaluation routes keep the potential gap F(w_end) - F(w) fully
cancellation-free:

* small orbits (|w_end - w0| <= (1 + w0)/4): the gap factors as
  Delta^2 (1 - theta^2) S(theta) with S an explicit power series around the
  center, and the singular factor cancels analytically, so the integrand is
  cos(psi/2) / sqrt((1 + cos(psi)) S(cos(psi)));
* large orbits: direct potential differences, with the integration variable
  measured from the turning point (w = w_end - Delta (1 - cos(psi)), built
  from 2 sin^2(psi/2)) so that no digit of w - w_end is lost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .model import (
    ModelParams,
    kinetic_d2f,
    kinetic_d3f,
    kinetic_df,
    kinetic_f,
    potential_F,
    potential_gap,
    w0_const,
)
from .quadrature import adaptive_gauss

__all__ = [
    "ABReport",
    "TimeMapSample",
    "ab_certify",
    "companion",
    "homoclinic_extent",
    "monotone_check",
    "time_map",
    "time_map_center",
]

# Orbits with w0 - w_minus below this fraction of w0 are ill-conditioned for
# quadrature and return the center limit directly.
CENTER_CUTOFF = 1e-8

# Largest |Delta| / (1 + w0) handled by the center series route.
_SERIES_RADIUS = 0.25


@dataclass(frozen=True)
class TimeMapSample:
    """One half-period evaluation: turning points, time, and energy level."""

    w_minus: float
    w_plus: float
    T: float
    energy_level: float


@dataclass(frozen=True)
class ABReport:
    """Pointwise certificate for the time-map monotonicity conditions.

    alpha is the unique critical point of f' in (0, w_h).  Margins are the
    worst (largest) values of the two defining expressions, so negative
    margins certify the strict inequalities on the sample.
    """

    alpha: float
    a_condition_ok: bool
    b_condition_ok: bool
    worst_margin: float
    fprime_simple_zero_ok: bool


def _require_window(p: ModelParams) -> float:
    hi = p.bmu_over_d
    if not (p.mu > 0.0 and 0.0 < p.lam < hi):
        raise DomainError(f"phase-plane analysis needs mu > 0 and lam in (0, {hi:g}); got lam = {p.lam!r}")
    return w0_const(p)


def homoclinic_extent(p: ModelParams) -> float:
    """Unique w_h > w0 with F(w_h) = 0, bounding the periodic family.

    Bracketed by geometric expansion from w0, then bisected to relative
    machine width; bisection is used for its unconditional convergence on
    the guaranteed sign change.
    """
    w0 = _require_window(p)
    target = -float(potential_F(w0, p))  # = |F(w0)| > 0
    lo = 0.0
    hi = max(w0, 1.0)
    for _ in range(1024):
        if float(potential_gap(hi, p)) > target:
            break
        lo = hi
        hi *= 2.0
    else:  # pragma: no cover - F grows without bound, cannot happen
        raise DomainError("failed to bracket the homoclinic extent")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if float(potential_gap(mid, p)) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4.0 * np.finfo(float).eps * hi:
            break
    return w0 + 0.5 * (lo + hi)


def companion(w_minus: float, p: ModelParams) -> float:
    """Turning point w_+ in (w0, w_h) on the same energy level as w_-.

    Solves F(w_+) = F(w_-) by bisection in the offset from w0, with a
    relative-width stopping rule so small-amplitude offsets keep full
    relative precision.
    """
    w0 = _require_window(p)
    if not 0.0 < w_minus < w0:
        raise DomainError(f"w_minus must lie in (0, w0) = (0, {w0:g}); got {w_minus!r}")
    target = float(potential_gap(w_minus - w0, p))
    lo = 0.0
    hi = homoclinic_extent(p) - w0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if float(potential_gap(mid, p)) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4.0 * np.finfo(float).eps * max(hi, 1e-300):
            break
    return w0 + 0.5 * (lo + hi)


def _center_series_factor(p: ModelParams, w0: float, delta: float):
    """Vectorized S(theta) with gap(theta) = delta^2 (1 - theta^2) S(theta).

    S collects the Taylor coefficients of the shifted potential:
    S = g2 + sum_{k>=3} g_k delta^{k-2} (1 + theta + ... + theta^{k-1})/(1+theta),
    g2 = F''(w0)/2,  g_k = (b mu/d) (-1)^{k+1} / (k (1+w0)^k).
    Converges geometrically for |delta| < (1 + w0).
    """
    bmu_d = p.bmu_over_d
    q = 1.0 / (1.0 + w0)
    g2 = 0.5 * (p.lam - bmu_d * q * q)

    def S(theta: np.ndarray) -> np.ndarray:
        acc = np.full_like(theta, g2)
        sigma = 1.0 + theta + theta * theta  # sum of theta^j, j < 3
        powt = theta * theta                 # theta^{k-1} at k = 3
        dp = delta                           # delta^{k-2} at k = 3
        sign = 1.0                           # (-1)^{k+1} at k = 3
        qk = q ** 3
        for k in range(3, 128):
            gk = sign * bmu_d * qk / k
            acc += gk * dp * sigma / (1.0 + theta)
            powt = powt * theta
            sigma = sigma + powt
            dp = dp * delta
            sign = -sign
            qk = qk * q
            if abs(gk * dp) * (k + 1) < 1e-20 * abs(g2):
                break
        return acc

    return S


def _half_orbit_time(p: ModelParams, w0: float, delta: float) -> float:
    """Travel time from the center ordinate to the turning point w0 + delta.

    The series route needs the turning point well inside the series radius
    and, on the left side, away from the saddle at 0 (approaching it makes
    the factored series cancel to zero and lose relative accuracy); the
    direct route is saddle-stable instead.
    """
    series_ok = abs(delta) <= _SERIES_RADIUS * (1.0 + w0)
    if delta < 0.0 and w0 + delta < 0.5 * w0:
        series_ok = False
    if series_ok:
        S = _center_series_factor(p, w0, delta)

        def integrand(psi):
            theta = np.cos(psi)
            return np.cos(0.5 * psi) / np.sqrt((1.0 + theta) * S(theta))

    else:
        w_end = w0 + delta
        pot_end = float(potential_F(w_end, p))

        def integrand(psi):
            half = np.sin(0.5 * psi)
            w = w_end - delta * (2.0 * half * half)  # w0 + cos(psi) * delta, endpoint-stable
            gap = np.maximum(pot_end - potential_F(w, p), 1e-300)
            return abs(delta) * np.sin(psi) / np.sqrt(2.0 * gap)

    return adaptive_gauss(integrand, 0.0, 0.5 * math.pi, rel_tol=1e-10, max_panels=2 ** 14)


def time_map_center(p: ModelParams) -> float:
    """Center limit pi / sqrt(lam (1 - d lam/(b mu))) of the half-period map."""
    _require_window(p)
    return math.pi / math.sqrt(p.lam * (1.0 - p.d * p.lam / (p.b * p.mu)))


def time_map(w_minus: float, p: ModelParams) -> TimeMapSample:
    """Half-period map evaluated at the left turning point w_minus in (0, w0)."""
    w0 = _require_window(p)
    if not 0.0 < w_minus < w0:
        raise DomainError(f"w_minus must lie in (0, w0) = (0, {w0:g}); got {w_minus!r}")
    level = float(potential_F(w_minus, p))
    if w0 - w_minus < CENTER_CUTOFF * w0:
        # quadrature loses significance this close to the center
        return TimeMapSample(w_minus, companion(w_minus, p), time_map_center(p), level)
    w_plus = companion(w_minus, p)
    t = _half_orbit_time(p, w0, w_minus - w0) + _half_orbit_time(p, w0, w_plus - w0)
    return TimeMapSample(w_minus, w_plus, t, level)


def ab_certify(p: ModelParams, n_samples: int = 10_000) -> ABReport:
    """Check the pointwise inequalities behind the time-map monotonicity.

    On a dense sample of [0, w_h]: f' f''' - (5/3) f''^2 < 0 past the
    critical point alpha = sqrt(b mu/(d lam)) - 1 of f', and
    f f'' - 3 f'^2 <= 0 up to alpha; also that f' has only the simple zero
    alpha in (0, w_h).  Violations are reported, never raised.
    """
    _require_window(p)
    if n_samples < 16:
        raise DomainError("need at least 16 samples")
    alpha = math.sqrt(p.b * p.mu / (p.d * p.lam)) - 1.0
    w_h = homoclinic_extent(p)
    grid = np.linspace(0.0, w_h, n_samples)

    fp = kinetic_df(grid, p)
    a_expr = fp * kinetic_d3f(grid, p) - (5.0 / 3.0) * kinetic_d2f(grid, p) ** 2
    b_expr = kinetic_f(grid, p) * kinetic_d2f(grid, p) - 3.0 * fp * fp

    above = grid > alpha
    below = grid <= alpha
    a_margin = float(np.max(a_expr[above])) if np.any(above) else -math.inf
    b_margin = float(np.max(b_expr[below])) if np.any(below) else -math.inf
    a_ok = a_margin < 0.0
    b_ok = b_margin <= 0.0

    inner = (grid > 0.0) & (grid < w_h)
    neg_side = fp[inner & (grid < alpha)]
    pos_side = fp[inner & (grid > alpha)]
    simple = (
        bool(np.all(neg_side < 0.0))
        and bool(np.all(pos_side > 0.0))
        and float(kinetic_d2f(alpha, p)) > 0.0
    )
    return ABReport(alpha, a_ok, b_ok, max(a_margin, b_margin), simple)


def monotone_check(p: ModelParams, grid) -> bool:
    """True iff T strictly decreases along the ascending grid in (0, w0)."""
    w0 = _require_window(p)
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise DomainError("grid must be a 1-d array with at least two points")
    if np.any(np.diff(grid) <= 0.0):
        raise DomainError("grid must ascend strictly")
    if not (grid[0] > 0.0 and grid[-1] < w0):
        raise DomainError(f"grid must lie inside (0, w0) = (0, {w0:g})")
    times = np.asarray([time_map(w, p).T for w in grid])
    return bool(np.all(np.diff(times) < 0.0))
