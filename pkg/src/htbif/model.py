"""Model parameters, coefficient functions, and the scalar kinetics of the
large-saturation limit problem.

The limit equation on (0, 1) with no-flux boundary conditions is

    -w'' = f(w),    f(w) = lam*w - (b*mu/d) * w/(1+w),

whose unique constant positive solution is w0 = b*mu/(d*lam) - 1.  The phase
plane carries the potential F with F' = f and total energy z^2/2 + F(w).
All operations are pure; values are immutable after construction.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError

__all__ = [
    "CoeffFn",
    "ModelParams",
    "PhaseState",
    "Profile",
    "energy",
    "kinetic_d2f",
    "kinetic_d3f",
    "kinetic_df",
    "kinetic_f",
    "potential_F",
    "potential_gap",
    "w0_const",
]


@dataclass(frozen=True, eq=False)
class CoeffFn:
    """Non-negative coefficient function on [0, 1].

    Either a constant or a piecewise-linear interpolant of samples.  Sampled
    form requires strictly ascending abscissae covering [0, 1] exactly and at
    least one strictly positive value.
    """

    value: float | None = None
    xs: np.ndarray | None = None
    ys: np.ndarray | None = None

    def __post_init__(self):
        if (self.value is None) == (self.xs is None):
            raise DomainError("CoeffFn must be either constant or sampled")
        if self.value is not None:
            v = float(self.value)
            if not math.isfinite(v) or v < 0.0:
                raise DomainError(f"constant coefficient must be finite and >= 0, got {v!r}")
            object.__setattr__(self, "value", v)
            return
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 2:
            raise DomainError("sampled coefficient needs matching 1-d xs, ys with >= 2 samples")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise DomainError("coefficient samples must be finite")
        if xs[0] != 0.0 or xs[-1] != 1.0 or np.any(np.diff(xs) <= 0.0):
            raise DomainError("xs must ascend strictly from 0 to 1")
        if np.any(ys < 0.0):
            raise DomainError("coefficient values must be >= 0")
        if not np.any(ys > 0.0):
            raise DomainError("coefficient must not be identically zero")
        xs.setflags(write=False)
        ys.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @classmethod
    def constant(cls, value: float) -> "CoeffFn":
        return cls(value=value)

    @classmethod
    def sampled(cls, xs, ys) -> "CoeffFn":
        return cls(xs=xs, ys=ys)

    @classmethod
    def from_csv(cls, path) -> "CoeffFn":
        """Load a sampled coefficient from two-column CSV (x, value).

        A single header row is tolerated; UTF-8, LF or CRLF line endings.
        """
        xs: list[float] = []
        ys: list[float] = []
        with open(path, "r", encoding="utf-8", newline="") as fh:
            for row in csv.reader(fh):
                if not row or all(not cell.strip() for cell in row):
                    continue
                try:
                    x, y = float(row[0]), float(row[1])
                except (ValueError, IndexError):
                    if not xs:  # header
                        continue
                    raise DomainError(f"malformed coefficient row {row!r} in {path}")
                xs.append(x)
                ys.append(y)
        if len(xs) < 2:
            raise DomainError(f"coefficient file {path} has fewer than 2 samples")
        return cls.sampled(np.asarray(xs), np.asarray(ys))

    @classmethod
    def from_spec(cls, spec: str) -> "CoeffFn":
        """Parse ``const:<v>`` or ``csv:<path>``."""
        kind, _, rest = spec.partition(":")
        if kind == "const" and rest:
            return cls.constant(float(rest))
        if kind == "csv" and rest:
            return cls.from_csv(Path(rest))
        raise DomainError(f"coefficient spec must be 'const:<v>' or 'csv:<path>', got {spec!r}")

    @property
    def is_constant(self) -> bool:
        return self.value is not None

    def __call__(self, x):
        if self.value is not None:
            x = np.asarray(x, dtype=float)
            out = np.full_like(x, self.value)
            return out if out.ndim else float(out)
        out = np.interp(np.asarray(x, dtype=float), self.xs, self.ys)
        return out if out.ndim else float(out)


@dataclass(frozen=True, eq=False)
class ModelParams:
    """All scalar model parameters plus the two spatial coefficients.

    ``eps`` is the inverse saturation rate; eps = 0 is the limit system and
    the saturation rate 1/eps is never stored separately.  b and d must be
    positive.  lam and mu are unrestricted here; operations on the limit
    problem enforce mu > 0 and lam in (0, b*mu/d) themselves.
    """

    b: float = 1.0
    d: float = 1.0
    lam: float = 25.0
    mu: float = 50.0
    eps: float = 0.0
    coeff_a: CoeffFn = CoeffFn.constant(1.0)
    coeff_c: CoeffFn = CoeffFn.constant(1.0)

    def __post_init__(self):
        for name in ("b", "d", "lam", "mu", "eps"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not (self.b > 0.0 and math.isfinite(self.b)):
            raise DomainError(f"b must be a positive real, got {self.b!r}")
        if not (self.d > 0.0 and math.isfinite(self.d)):
            raise DomainError(f"d must be a positive real, got {self.d!r}")
        if not (self.eps >= 0.0 and math.isfinite(self.eps)):
            raise DomainError(f"eps must be a finite non-negative real, got {self.eps!r}")
        if not (math.isfinite(self.lam) and math.isfinite(self.mu)):
            raise DomainError("lam and mu must be finite")
        for nm, c in (("coeff_a", self.coeff_a), ("coeff_c", self.coeff_c)):
            if not isinstance(c, CoeffFn):
                raise DomainError(f"{nm} must be a CoeffFn")

    @property
    def bmu_over_d(self) -> float:
        """Upper end b*mu/d of the admissible lam window."""
        return self.b * self.mu / self.d

    def with_lam(self, lam: float) -> "ModelParams":
        return ModelParams(self.b, self.d, lam, self.mu, self.eps, self.coeff_a, self.coeff_c)

    def with_eps(self, eps: float) -> "ModelParams":
        return ModelParams(self.b, self.d, self.lam, self.mu, eps, self.coeff_a, self.coeff_c)


@dataclass(frozen=True, eq=False)
class Profile:
    """Samples of a function on the closed uniform grid of [0, 1].

    n_points must be odd so x = 1/2 is a node and midpoint symmetry checks
    are exact at nodes.
    """

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=float, copy=True)
        if arr.ndim != 1 or arr.size < 3:
            raise DomainError("Profile needs a 1-d array with at least 3 samples")
        if arr.size % 2 == 0:
            raise DomainError(f"Profile n_points must be odd, got {arr.size}")
        if not np.all(np.isfinite(arr)):
            raise DomainError("Profile values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def constant(cls, value: float, n_points: int) -> "Profile":
        return cls(np.full(int(n_points), float(value)))

    @property
    def n_points(self) -> int:
        return self.values.size

    @property
    def h(self) -> float:
        return 1.0 / (self.values.size - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.values.size)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def sup_distance(self, other: "Profile") -> float:
        if other.n_points != self.n_points:
            raise DomainError("profiles live on different grids")
        return float(np.max(np.abs(self.values - other.values)))


@dataclass(frozen=True)
class PhaseState:
    """Point (w, w') of the phase plane; w > -1 is the domain of the potential."""

    w: float
    z: float

    def __post_init__(self):
        if not self.w > -1.0:
            raise DomainError(f"phase state needs w > -1, got w = {self.w!r}")


def _as_checked(w):
    arr = np.asarray(w, dtype=float)
    if np.any(arr <= -1.0) or not np.all(np.isfinite(arr)):
        raise DomainError("argument must satisfy w > -1")
    return arr


def _ret(arr):
    return arr if arr.ndim else float(arr)


def w0_const(p: ModelParams) -> float:
    """Constant positive steady state b*mu/(d*lam) - 1 of the limit problem."""
    if not p.mu > 0.0:
        raise DomainError(f"constant state requires mu > 0, got mu = {p.mu!r}")
    hi = p.bmu_over_d
    if not 0.0 < p.lam < hi:
        raise DomainError(
            f"constant positive state exists only for lam in (0, b*mu/d) = (0, {hi:g}); got lam = {p.lam!r}"
        )
    return p.b * p.mu / (p.d * p.lam) - 1.0


def kinetic_f(w, p: ModelParams):
    """Kinetic term f(w) = lam*w - (b*mu/d) * w/(1+w), for w > -1."""
    w = _as_checked(w)
    return _ret(p.lam * w - p.bmu_over_d * w / (1.0 + w))


def kinetic_df(w, p: ModelParams):
    """f'(w) = lam - (b*mu/d)/(1+w)^2."""
    w = _as_checked(w)
    return _ret(p.lam - p.bmu_over_d / (1.0 + w) ** 2)


def kinetic_d2f(w, p: ModelParams):
    """f''(w) = 2*(b*mu/d)/(1+w)^3."""
    w = _as_checked(w)
    return _ret(2.0 * p.bmu_over_d / (1.0 + w) ** 3)


def kinetic_d3f(w, p: ModelParams):
    """f'''(w) = -6*(b*mu/d)/(1+w)^4."""
    w = _as_checked(w)
    return _ret(-6.0 * p.bmu_over_d / (1.0 + w) ** 4)


def _w_minus_log1p(w: np.ndarray) -> np.ndarray:
    # w - log(1+w) cancels catastrophically for small w; sum the series
    # w^2/2 - w^3/3 + ... there (terms decay monotonically for |w| < 1).
    out = np.empty_like(w)
    small = np.abs(w) <= 0.25
    ws = w[small]
    if ws.size:
        acc = np.zeros_like(ws)
        term = ws * ws
        sign = 1.0
        for k in range(2, 64):
            acc += sign * term / k
            term = term * ws
            sign = -sign
            if np.max(np.abs(term)) / (k + 1) < 1e-22 * max(float(np.max(np.abs(acc))), 1e-300):
                break
        out[small] = acc
    wl = w[~small]
    out[~small] = wl - np.log1p(wl)
    return out


def potential_F(w, p: ModelParams):
    """Potential energy F(w) = (lam/2) w^2 - (b*mu/d) [w - ln(1+w)], F' = f."""
    w = _as_checked(w)
    return _ret(0.5 * p.lam * w * w - p.bmu_over_d * _w_minus_log1p(w))


def potential_gap(delta, p: ModelParams):
    """Shifted potential F(w0 + delta) - F(w0), stable for small |delta|.

    Uses lam*w0 - b*mu/d = -lam to write the gap as
    -lam*delta + (lam/2) delta^2 + (b*mu/d) log1p(delta / (1 + w0)),
    which avoids subtracting two nearly equal potential values near the
    center.  Requires lam in (0, b*mu/d).
    """
    w0 = w0_const(p)
    delta = np.asarray(delta, dtype=float)
    if np.any(delta <= -(1.0 + w0)):
        raise DomainError("delta must keep w0 + delta > -1")
    out = -p.lam * delta + 0.5 * p.lam * delta * delta + p.bmu_over_d * np.log1p(delta / (1.0 + w0))
    return _ret(out)


def energy(state: PhaseState, p: ModelParams) -> float:
    """Total phase-plane energy z^2/2 + F(w)."""
    return 0.5 * state.z * state.z + float(potential_F(state.w, p))
