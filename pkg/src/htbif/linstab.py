"""Sturm-Liouville spectra of the linearizations at constant and nodal
solutions, Morse indices, detection of degenerate parameter values, and
verification of the local branch expansion at the bifurcation points.

The linearization at a solution w of the limit problem is the Neumann
operator -D^2 + V with potential V(x) = -lam + (b mu/d)/(1 + w(x))^2.  It is
discretized by centered second differences with mirror ghost nodes; a
half-weight diagonal similarity restores symmetry, so the discrete operator
is a symmetric tridiagonal matrix with O(h^2) eigenvalue error.

Near a bifurcation point lam_n^(+/-) the branch admits the expansion

    lam(s) = lam_n +/- eta1 s + eta2 s^2 + O(s^3),
    u(s)   = s [cos(n pi x) + y1 s + O(s^2)],

with eta1 = 0, closed-form y1, and eta2 from projecting the second-order
terms onto the kernel mode.  fit_expansion recovers eta1, eta2 and y1 from
computed solutions and compares them against the closed forms.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson
from scipy.linalg import eigh_tridiagonal

from .errors import (
    ConvergenceError,
    DegenerateError,
    DegeneracyWarning,
    DomainError,
    InsufficientDataError,
    IntegrationError,
    NoSolutionError,
)
from .model import ModelParams, Profile, w0_const
from .nodal import NodalSolution, nodal_pair, solve_amplitude
from .spectral import lambda_roots, mu_threshold

__all__ = [
    "ExpansionCheck",
    "Spectrum",
    "degeneracy_tolerance",
    "detect_singular_set",
    "eta2_closed_form",
    "fit_expansion",
    "morse_index_nodal",
    "nodal_potential",
    "sturm_count_below",
    "sturm_spectrum",
    "y1_closed_form",
]


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Lowest eigenvalues of -D^2 + V(x) with no-flux conditions.

    ``eigenfunctions`` holds the corresponding discrete eigenvectors
    (columns, sup-normalized); ``morse_index`` counts every negative
    eigenvalue of the full discrete operator, not only the computed ones.
    """

    eigenvalues: np.ndarray
    potential: Profile
    n_points: int
    morse_index: int
    eigenfunctions: np.ndarray


@dataclass(frozen=True)
class ExpansionCheck:
    """Fitted branch expansion near lam_n^(side) against the closed forms."""

    n: int
    side: str
    eta1_estimate: float
    eta2_estimate: float
    eta2_closed_form: float
    y1_l2_error: float


def degeneracy_tolerance(lam: float) -> float:
    return 1e-6 * (1.0 + abs(lam))


def _neumann_tridiagonal(v_values: np.ndarray, h: float):
    """Symmetric tridiagonal (diag, offdiag) for -D^2 + V with mirror ghosts.

    The ghost closure doubles the boundary off-diagonal entries; the diagonal
    similarity with weights (1/sqrt 2, 1, ..., 1, 1/sqrt 2) symmetrizes them
    to -sqrt(2)/h^2 without changing the spectrum.
    """
    n = v_values.size
    inv_h2 = 1.0 / (h * h)
    diag = 2.0 * inv_h2 + v_values
    off = np.full(n - 1, -inv_h2)
    off[0] = -math.sqrt(2.0) * inv_h2
    off[-1] = -math.sqrt(2.0) * inv_h2
    return diag, off


def sturm_count_below(diag: np.ndarray, off: np.ndarray, sigma: float) -> int:
    """Number of eigenvalues of the symmetric tridiagonal matrix below sigma.

    Classic Sturm sequence: the count of negative pivots of the shifted
    LDL^T factorization equals the count of eigenvalues < sigma.  An exactly
    zero pivot is nudged negative, so eigenvalues equal to sigma count as
    below it.
    """
    count = 0
    n = diag.size
    q = diag[0] - sigma
    for i in range(n):
        if q == 0.0:
            q = -1e-300
        if q < 0.0:
            count += 1
        if i + 1 < n:
            q = (diag[i + 1] - sigma) - off[i] * off[i] / q
    return count


def sturm_spectrum(V: Profile, m: int) -> Spectrum:
    """Lowest m eigenvalues and eigenfunctions of -D^2 + V(x), Neumann."""
    if int(m) != m or m < 1:
        raise DomainError(f"need m >= 1 eigenvalues, got {m!r}")
    m = int(m)
    if m > V.n_points:
        raise DomainError(f"m = {m} exceeds the {V.n_points}-point discretization size")
    diag, off = _neumann_tridiagonal(V.values, V.h)
    try:
        vals, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(0, m - 1))
    except np.linalg.LinAlgError as exc:  # pragma: no cover - symmetric tridiagonal
        raise ConvergenceError(f"tridiagonal eigensolver failed: {exc}") from exc
    # undo the symmetrizing similarity, then sup-normalize with positive start
    vecs = vecs.copy()
    vecs[0, :] *= math.sqrt(2.0)
    vecs[-1, :] *= math.sqrt(2.0)
    peaks = np.max(np.abs(vecs), axis=0)
    signs = np.where(vecs[0, :] >= 0.0, 1.0, -1.0)
    vecs = vecs * (signs / peaks)
    morse = sturm_count_below(diag, off, 0.0)
    return Spectrum(vals, V, V.n_points, morse, vecs)


def nodal_potential(w: Profile, p: ModelParams) -> Profile:
    """Linearization potential V(x) = -lam + (b mu/d)/(1 + w(x))^2."""
    return Profile(-p.lam + p.bmu_over_d / (1.0 + w.values) ** 2)


def morse_index_nodal(sol: NodalSolution, p: ModelParams, m: int | None = None) -> int:
    """Negative-eigenvalue count of the linearization at an n-crossing solution.

    Warns (DegeneracyWarning) when either of the eigenvalues flanking zero,
    tau_{n,n-1} or tau_{n,n}, sits within the degeneracy tolerance: such lam
    are candidates for the finite singular set inside the window.
    """
    if m is None:
        m = sol.n + 3
    spec = sturm_spectrum(nodal_potential(sol.profile, p), m)
    tol = degeneracy_tolerance(p.lam)
    lo = float(spec.eigenvalues[sol.n - 1])
    hi = float(spec.eigenvalues[sol.n])
    if abs(lo) < tol or abs(hi) < tol:
        warnings.warn(
            f"near-zero linearization eigenvalue at lam = {p.lam:g} "
            f"(tau_low = {lo:g}, tau_high = {hi:g})",
            DegeneracyWarning,
            stacklevel=2,
        )
    return spec.morse_index


def detect_singular_set(n: int, p: ModelParams, n_lambda: int = 80, n_points: int = 2001) -> list[float]:
    """lam values in the open window where tau_{n,n-1} or tau_{n,n} crosses
    or touches zero along the branch, within grid resolution.

    Scanned on the lower branch; the shifted companion has the same spectrum
    because its potential is the same even periodic extension sampled with a
    phase shift.  An empty list is a valid (and expected) outcome.
    """
    root = lambda_roots(int(n), p)
    if not root.is_real or root.lambda_minus == root.lambda_plus:
        raise NoSolutionError(f"mode {n} has no real root window at mu = {p.mu:g}")
    lam_lo, lam_hi = root.lambda_minus, root.lambda_plus
    lams: list[float] = []
    tau_pair: list[tuple[float, float]] = []
    for j in range(n_lambda):
        lam = lam_lo + (j + 1) * (lam_hi - lam_lo) / (n_lambda + 1)
        q = p.with_lam(lam)
        try:
            w_minus = solve_amplitude(n, q)
            from .nodal import _check_energy_drift, _integrate_wz  # local: avoid a public detour

            ws, zs = _integrate_wz(w_minus, q, n_points)
            _check_energy_drift(ws, zs, w_minus, q)
            spec = sturm_spectrum(nodal_potential(Profile(ws), q), int(n) + 1)
        except (NoSolutionError, ConvergenceError, IntegrationError):
            continue
        lams.append(lam)
        tau_pair.append((float(spec.eigenvalues[n - 1]), float(spec.eigenvalues[n])))

    found: list[float] = []
    for k in range(2):
        taus = np.asarray([t[k] for t in tau_pair])
        grid = np.asarray(lams)
        flips = np.nonzero(np.sign(taus[:-1]) * np.sign(taus[1:]) < 0.0)[0]
        found.extend(0.5 * (grid[i] + grid[i + 1]) for i in flips)
        tol = np.asarray([degeneracy_tolerance(l) for l in grid])
        small = np.abs(taus) < tol
        for i in np.nonzero(small)[0]:
            left = taus[i - 1] if i > 0 else None
            right = taus[i + 1] if i + 1 < taus.size else None
            is_local_min = (left is None or abs(taus[i]) <= abs(left)) and (
                right is None or abs(taus[i]) <= abs(right)
            )
            if is_local_min:
                found.append(float(grid[i]))
    if not found:
        return []
    found.sort()
    resolution = (lam_hi - lam_lo) / (n_lambda + 1)
    merged = [found[0]]
    for lam in found[1:]:
        if lam - merged[-1] > resolution:
            merged.append(lam)
    return merged


def _side_root(n: int, side: str, p: ModelParams) -> tuple[float, float]:
    """(lam_n^side, d tau/d lam there); the derivative is +/- sqrt(disc)."""
    if side not in ("minus", "plus"):
        raise DomainError(f"side must be 'minus' or 'plus', got {side!r}")
    if int(n) != n or n < 1:
        raise DomainError(f"mode must be an integer >= 1, got {n!r}")
    root = lambda_roots(int(n), p)
    if not root.is_real:
        raise DomainError(f"mode {n} roots are complex at mu = {p.mu:g} (below the threshold)")
    disc = 1.0 - 4.0 * p.d * (int(n) * math.pi) ** 2 / (p.b * p.mu)
    s = math.sqrt(max(disc, 0.0))
    if side == "minus":
        return root.lambda_minus, -s
    return root.lambda_plus, s


def y1_closed_form(n: int, side: str, p: ModelParams, n_points: int = 2001) -> Profile:
    """First profile correction of the branch expansion,
    (lam/2) (d lam/(n pi b mu))^2 [cos(2 n pi x)/3 - 1] at lam = lam_n^side.

    Orthogonal to the kernel mode cos(n pi x) by construction.
    """
    lam, _ = _side_root(n, side, p)
    x = np.linspace(0.0, 1.0, int(n_points))
    coef = 0.5 * lam * (p.d * lam / (int(n) * math.pi * p.b * p.mu)) ** 2
    return Profile(coef * (np.cos(2.0 * int(n) * math.pi * x) / 3.0 - 1.0))


def eta2_closed_form(n: int, side: str, p: ModelParams) -> float:
    """Quadratic coefficient of lam(s) at lam_n^side, from the kernel projection.

    With r = d lam/(b mu) and the two exact integrals
    int cos^2(n pi x) y1 = -(5 lam/24)(r/(n pi))^2 and int cos^4 = 3/8,

        eta2 = 2 [2 lam r^2 int(cos^2 y1) - (3/8) lam r^3] / tau0_dot(lam).

    The sign is opposite to the side: positive at the minus root, negative at
    the plus root (branches open into the window).  Degenerate exactly at the
    mode threshold, where the root is double and the derivative vanishes.
    """
    lam, taudot = _side_root(n, side, p)
    if taudot == 0.0:
        raise DegenerateError(
            f"eta2 undefined at mu = mu_{n} = {mu_threshold(int(n), p):g}: double root, zero transversality"
        )
    r = p.d * lam / (p.b * p.mu)
    int_phi2_y1 = -(5.0 * lam / 24.0) * (r / (int(n) * math.pi)) ** 2
    rhs = 2.0 * lam * r * r * int_phi2_y1 - lam * r ** 3 * (3.0 / 8.0)
    return 2.0 * rhs / taudot


_DEFAULT_LADDER = tuple(0.005 * k for k in range(1, 11))


def fit_expansion(
    n: int,
    side: str,
    p: ModelParams,
    n_points: int = 2001,
    s_ladder: tuple = _DEFAULT_LADDER,
) -> ExpansionCheck:
    """Recover eta1, eta2 and y1 from computed solutions near lam_n^side.

    For each target amplitude s the window point lam = lam_side + eta2 s^2 is
    solved for its solution pair; the signed amplitude is then re-estimated
    by projection, s_est = 2 int (w - w0) cos(n pi x) dx, which is exact to
    O(s^4) because every correction term is orthogonal to the kernel mode.
    A least-squares fit of lam(s_est) (intercept pinned at lam_side, cubic
    term as nuisance) yields the eta estimates; the y1 mismatch is the
    relative L2 error of the second-order remainder at the ladder point
    nearest s = 0.02, averaged over the two signed branches so the O(s)
    remainder cancels.
    """
    n = int(n)
    lam_side, _ = _side_root(n, side, p)
    eta2_cf = eta2_closed_form(n, side, p)
    root = lambda_roots(n, p)

    x = np.linspace(0.0, 1.0, int(n_points))
    phi = np.cos(n * math.pi * x)
    y1_ref = y1_closed_form(n, side, p, n_points).values

    s_values: list[float] = []
    lam_values: list[float] = []
    remainders: dict[float, np.ndarray] = {}
    converged_points = 0
    for s in s_ladder:
        lam = lam_side + eta2_cf * s * s
        if not root.lambda_minus < lam < root.lambda_plus:
            continue
        q = p.with_lam(lam)
        try:
            lower, upper = nodal_pair(n, q, int(n_points))
        except (NoSolutionError, ConvergenceError, IntegrationError):
            continue
        converged_points += 1
        w0 = w0_const(q)
        rem_pair = []
        for sol in (lower, upper):
            u = sol.profile.values - w0
            s_est = 2.0 * float(simpson(u * phi, x=x))
            s_values.append(s_est)
            lam_values.append(lam)
            rem_pair.append((u - s_est * phi) / (s_est * s_est))
        remainders[s] = 0.5 * (rem_pair[0] + rem_pair[1])

    if converged_points < 5:
        raise InsufficientDataError(
            f"only {converged_points} ladder points converged near lam_{n}^{side}; need 5"
        )

    s_arr = np.asarray(s_values)
    dl = np.asarray(lam_values) - lam_side
    design = np.column_stack([s_arr, s_arr ** 2, s_arr ** 3])
    coef, *_ = np.linalg.lstsq(design, dl, rcond=None)
    eta1_est, eta2_est = float(coef[0]), float(coef[1])

    s_probe = min(remainders, key=lambda s: abs(s - 0.02))
    diff = remainders[s_probe] - y1_ref
    l2 = math.sqrt(float(simpson(diff * diff, x=x)))
    l2_ref = math.sqrt(float(simpson(y1_ref * y1_ref, x=x)))
    return ExpansionCheck(n, side, eta1_est, eta2_est, eta2_cf, l2 / l2_ref)
