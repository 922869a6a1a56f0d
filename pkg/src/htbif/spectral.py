"""Eigencurves of the linearization at the constant state, their real roots,
mode thresholds in mu, and the Morse index of the constant state.

The linearization at w0 has the explicit eigenvalue curves

    tau0(ell, lam) = (d/(b*mu)) lam^2 - lam + (ell*pi)^2,

quadratics in lam whose real roots lam_ell^- <= lam_ell^+ open the existence
windows of ell-crossing solutions.  Roots are real exactly when mu reaches
the threshold mu_ell = (d/b)(2 ell pi)^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .model import ModelParams

__all__ = [
    "EigencurveRoot",
    "MorseIndexTable",
    "eigencurve_table",
    "lambda_roots",
    "morse_index_table",
    "morse_index_w0",
    "mu_threshold",
    "tau0",
    "tau0_dot",
]


@dataclass(frozen=True)
class EigencurveRoot:
    """Real roots of one eigencurve; NaN lambdas when the pair is complex."""

    ell: int
    mu: float
    lambda_minus: float
    lambda_plus: float
    is_real: bool


@dataclass(frozen=True, eq=False)
class MorseIndexTable:
    """Staircase of the constant-state Morse index over (0, b*mu/d).

    ``breakpoints`` are the ascending real roots lam_ell^-, lam_ell^+;
    ``indices[i]`` is the index on the open cell between consecutive
    breakpoints (cells include the window ends (0, .) and (., b*mu/d)).
    """

    mu: float
    breakpoints: np.ndarray
    indices: np.ndarray


def _check_mode(ell: int) -> int:
    if int(ell) != ell or ell < 0:
        raise DomainError(f"mode number must be an integer >= 0, got {ell!r}")
    return int(ell)


def tau0(ell: int, lam: float, p: ModelParams) -> float:
    """Eigencurve value (d/(b*mu)) lam^2 - lam + (ell*pi)^2."""
    ell = _check_mode(ell)
    if not p.mu > 0.0:
        raise DomainError(f"eigencurves require mu > 0, got mu = {p.mu!r}")
    return (p.d / (p.b * p.mu)) * lam * lam - lam + (ell * math.pi) ** 2


def tau0_dot(lam: float, p: ModelParams) -> float:
    """d tau0 / d lam = 2 d lam/(b mu) - 1 (mode independent)."""
    if not p.mu > 0.0:
        raise DomainError(f"eigencurves require mu > 0, got mu = {p.mu!r}")
    return 2.0 * p.d * lam / (p.b * p.mu) - 1.0


def mu_threshold(kappa: int, p: ModelParams) -> float:
    """Threshold mu_kappa = (d/b)(2 kappa pi)^2 where the kappa-th root pair turns real."""
    kappa = _check_mode(kappa)
    return (p.d / p.b) * (2.0 * kappa * math.pi) ** 2


def lambda_roots(ell: int, p: ModelParams) -> EigencurveRoot:
    """Real roots of tau0(ell, .), or is_real=False when they are complex.

    The minus root is computed in conjugate form 2(ell*pi)^2 / (1 + sqrt(disc))
    to avoid cancellation for large mu; Vieta then gives
    sum = b*mu/d and product = (b*mu/d)(ell*pi)^2.
    """
    ell = _check_mode(ell)
    if not p.mu > 0.0:
        raise DomainError(f"eigencurve roots require mu > 0, got mu = {p.mu!r}")
    bmu_d = p.bmu_over_d
    disc = 1.0 - 4.0 * (ell * math.pi) ** 2 / bmu_d
    if disc < 0.0:
        return EigencurveRoot(ell, p.mu, math.nan, math.nan, False)
    if disc == 0.0:
        double = 0.5 * bmu_d
        return EigencurveRoot(ell, p.mu, double, double, True)
    s = math.sqrt(disc)
    lam_plus = 0.5 * bmu_d * (1.0 + s)
    lam_minus = 2.0 * (ell * math.pi) ** 2 / (1.0 + s)
    return EigencurveRoot(ell, p.mu, lam_minus, lam_plus, True)


def default_ell_max(p: ModelParams) -> int:
    """Smallest safe mode cutoff: tau0 is positive for all modes beyond it."""
    return int(math.ceil(math.sqrt(p.bmu_over_d) / math.pi)) + 2


def morse_index_w0(lam: float, p: ModelParams, ell_max: int | None = None) -> int:
    """Number of negative eigenvalues of the linearization at the constant state."""
    hi = p.bmu_over_d
    if not (p.mu > 0.0 and 0.0 < lam < hi):
        raise DomainError(f"Morse index of w0 needs lam in (0, {hi:g}) and mu > 0; got lam = {lam!r}")
    if ell_max is None:
        ell_max = default_ell_max(p)
    return sum(1 for ell in range(ell_max + 1) if tau0(ell, lam, p) < 0.0)


def morse_index_table(p: ModelParams) -> MorseIndexTable:
    """Breakpoints and per-cell Morse indices of the constant state over (0, b*mu/d)."""
    if not p.mu > 0.0:
        raise DomainError(f"Morse table requires mu > 0, got mu = {p.mu!r}")
    minus: list[float] = []
    plus: list[float] = []
    ell = 1
    while p.mu > mu_threshold(ell, p):
        root = lambda_roots(ell, p)
        if not root.is_real or root.lambda_minus == root.lambda_plus:
            break
        minus.append(root.lambda_minus)
        plus.append(root.lambda_plus)
        ell += 1
    breakpoints = np.asarray(minus + plus[::-1], dtype=float)
    edges = np.concatenate(([0.0], breakpoints, [p.bmu_over_d]))
    mids = 0.5 * (edges[:-1] + edges[1:])
    indices = np.asarray([morse_index_w0(m, p) for m in mids], dtype=int)
    return MorseIndexTable(p.mu, breakpoints, indices)


def eigencurve_table(p: ModelParams, ell_max: int | None = None) -> list[EigencurveRoot]:
    """Root pairs for modes 0..ell_max (export helper)."""
    if ell_max is None:
        ell_max = default_ell_max(p)
    return [lambda_roots(ell, p) for ell in range(_check_mode(ell_max) + 1)]
