"""One-dimensional symmetric laws used as perturbation noise and as encodings.

Every law here is symmetric about the origin.  Wherever the cdf F is
continuous it therefore satisfies F(z) + F(-z) = 1, and the inverse cdf
(when it exists) satisfies F^{-1}(x) = -F^{-1}(1 - x).

Three families can be named in configuration strings, see
:func:`parse_distribution`:

* ``uniform(c)``   -> :class:`UniformInterval`, uniform on [-c, c]
* ``twopoint(c)``  -> :class:`TwoPoint`, half mass on -c and half on +c
* ``bigauss(m,s)`` -> :class:`GaussianMixture`, equal-weight N(m, s^2)
  and N(-m, s^2)

The remaining families (:class:`Triangular`, :class:`HalfCosine`,
:class:`RaisedCosine`, :class:`TabulatedSymmetric`) back the encoding
side of the shipped estimator tuples and are constructed directly.

All methods accept floats or numpy arrays; scalar input yields a float.
Samplers consume a ``numpy.random.Generator`` so that streams can be
derived and replayed deterministically.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import ndtr

from .errors import (
    ConfigError,
    ConstructionError,
    DomainError,
    NoDensityError,
    NotInvertibleError,
)

__all__ = [
    "SymmetricDistribution",
    "UniformInterval",
    "TwoPoint",
    "GaussianMixture",
    "Triangular",
    "HalfCosine",
    "RaisedCosine",
    "TabulatedSymmetric",
    "parse_distribution",
    "check_calibrated_key",
]


def _maybe_scalar(out: np.ndarray, scalar: bool) -> float | np.ndarray:
    return float(out) if scalar else out


def bisect_increasing(fn, x, lo, hi, *, tol: float = 1e-12, max_iter: int = 200):
    """Invert a nondecreasing function by bisection.

    ``fn`` must satisfy fn(lo) <= x <= fn(hi) elementwise.  Returns the
    bracket midpoint once its width falls below ``tol`` (absolute, in
    the argument), or after ``max_iter`` halvings.
    """
    x = np.asarray(x, dtype=float)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), x.shape).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), x.shape).copy()
    for _ in range(max_iter):
        if np.max(hi - lo) < tol:
            break
        mid = 0.5 * (lo + hi)
        right = fn(mid) < x
        lo = np.where(right, mid, lo)
        hi = np.where(right, hi, mid)
    return 0.5 * (lo + hi)


class SymmetricDistribution:
    """Common interface: cdf, inv_cdf, density, sample, support.

    Subclasses without a closed-form sampler inherit inverse-transform
    sampling; subclasses without a density or an inverse must raise
    :class:`NoDensityError` / :class:`NotInvertibleError` instead of
    returning garbage.
    """

    has_density: bool = True

    @property
    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    def cdf(self, z):
        raise NotImplementedError

    def inv_cdf(self, x):
        raise NotImplementedError

    def density(self, z):
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size=None):
        # random() lives in [0, 1); nudge exact zeros into the open interval.
        u = np.maximum(rng.random(size), 1e-300)
        return self.inv_cdf(u)

    def _check_prob_open(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0.0) or np.any(x >= 1.0):
            raise DomainError("inv_cdf expects probabilities strictly inside (0, 1)")
        return x


@dataclass(frozen=True)
class UniformInterval(SymmetricDistribution):
    """Uniform law on [-half_width, half_width]."""

    half_width: float

    def __post_init__(self):
        if not self.half_width > 0.0:
            raise DomainError("half_width must be positive")

    @property
    def support(self) -> tuple[float, float]:
        return (-self.half_width, self.half_width)

    def cdf(self, z):
        z = np.asarray(z, dtype=float)
        c = self.half_width
        out = np.clip((z + c) / (2.0 * c), 0.0, 1.0)
        return _maybe_scalar(out, z.ndim == 0)

    def inv_cdf(self, x):
        x = self._check_prob_open(x)
        out = (2.0 * x - 1.0) * self.half_width
        return _maybe_scalar(out, x.ndim == 0)

    def density(self, z):
        z = np.asarray(z, dtype=float)
        c = self.half_width
        out = np.where(np.abs(z) <= c, 1.0 / (2.0 * c), 0.0)
        return _maybe_scalar(out, z.ndim == 0)

    def sample(self, rng: np.random.Generator, size=None):
        return self.half_width * (2.0 * rng.random(size) - 1.0)


@dataclass(frozen=True)
class TwoPoint(SymmetricDistribution):
    """Atoms of mass 1/2 at -magnitude and +magnitude."""

    magnitude: float
    has_density = False

    def __post_init__(self):
        if not self.magnitude > 0.0:
            raise DomainError("magnitude must be positive")

    @property
    def support(self) -> tuple[float, float]:
        return (-self.magnitude, self.magnitude)

    def cdf(self, z):
        # Right-continuous step function.
        z = np.asarray(z, dtype=float)
        c = self.magnitude
        out = np.where(z < -c, 0.0, np.where(z < c, 0.5, 1.0))
        return _maybe_scalar(out, z.ndim == 0)

    def inv_cdf(self, x):
        raise NotInvertibleError("a two-point law has no continuous inverse cdf")

    def density(self, z):
        raise NoDensityError("a two-point law has no density")

    def sample(self, rng: np.random.Generator, size=None):
        c = self.magnitude
        return np.where(rng.random(size) < 0.5, -c, c)


@dataclass(frozen=True)
class GaussianMixture(SymmetricDistribution):
    """Equal-weight mixture of N(center, scale^2) and N(-center, scale^2)."""

    center: float
    scale: float

    #: inv_cdf bisection runs to this absolute tolerance in z.
    INV_TOL = 1e-12
    INV_MAX_ITER = 200

    def __post_init__(self):
        if not self.scale > 0.0:
            raise DomainError("scale must be positive")
        if self.center < 0.0:
            raise DomainError("center must be nonnegative")

    @property
    def support(self) -> tuple[float, float]:
        return (-math.inf, math.inf)

    def cdf(self, z):
        z = np.asarray(z, dtype=float)
        m, s = self.center, self.scale
        out = 0.5 * (ndtr((z - m) / s) + ndtr((z + m) / s))
        return _maybe_scalar(np.asarray(out), z.ndim == 0)

    def density(self, z):
        z = np.asarray(z, dtype=float)
        m, s = self.center, self.scale
        a = np.exp(-0.5 * ((z - m) / s) ** 2)
        b = np.exp(-0.5 * ((z + m) / s) ** 2)
        out = (a + b) / (2.0 * s * math.sqrt(2.0 * math.pi))
        return _maybe_scalar(out, z.ndim == 0)

    def inv_cdf(self, x):
        x = self._check_prob_open(x)
        half = self.center + 8.0 * self.scale
        lo = np.full(x.shape, -half)
        hi = np.full(x.shape, half)
        # Widen until the bracket certainly contains every quantile.
        while np.any(self.cdf(lo) > x):
            lo = lo - 8.0 * self.scale
        while np.any(self.cdf(hi) < x):
            hi = hi + 8.0 * self.scale
        out = bisect_increasing(
            self.cdf, x, lo, hi, tol=self.INV_TOL, max_iter=self.INV_MAX_ITER
        )
        return _maybe_scalar(out, x.ndim == 0)

    def sample(self, rng: np.random.Generator, size=None):
        sign = np.where(rng.random(size) < 0.5, -1.0, 1.0)
        return sign * self.center + self.scale * rng.standard_normal(size)


@dataclass(frozen=True)
class Triangular(SymmetricDistribution):
    """Symmetric triangular law on [-half_width, half_width], peak at 0."""

    half_width: float

    def __post_init__(self):
        if not self.half_width > 0.0:
            raise DomainError("half_width must be positive")

    @property
    def support(self) -> tuple[float, float]:
        return (-self.half_width, self.half_width)

    def cdf(self, z):
        z = np.asarray(z, dtype=float)
        c = self.half_width
        t = np.clip(z, -c, c)
        left = (c + t) ** 2 / (2.0 * c * c)
        right = 1.0 - (c - t) ** 2 / (2.0 * c * c)
        out = np.where(t <= 0.0, left, right)
        return _maybe_scalar(out, z.ndim == 0)

    def inv_cdf(self, x):
        x = self._check_prob_open(x)
        c = self.half_width
        left = c * (np.sqrt(2.0 * x) - 1.0)
        right = c * (1.0 - np.sqrt(2.0 * (1.0 - x)))
        out = np.where(x <= 0.5, left, right)
        return _maybe_scalar(out, x.ndim == 0)

    def density(self, z):
        z = np.asarray(z, dtype=float)
        c = self.half_width
        out = np.where(np.abs(z) <= c, (c - np.abs(z)) / (c * c), 0.0)
        return _maybe_scalar(out, z.ndim == 0)


@dataclass(frozen=True)
class HalfCosine(SymmetricDistribution):
    """Law with density proportional to cos(pi z / (2 c)) on [-c, c]."""

    half_width: float

    def __post_init__(self):
        if not self.half_width > 0.0:
            raise DomainError("half_width must be positive")

    @property
    def support(self) -> tuple[float, float]:
        return (-self.half_width, self.half_width)

    def cdf(self, z):
        z = np.asarray(z, dtype=float)
        c = self.half_width
        t = np.clip(z, -c, c)
        out = 0.5 * (1.0 + np.sin(0.5 * math.pi * t / c))
        return _maybe_scalar(out, z.ndim == 0)

    def inv_cdf(self, x):
        x = self._check_prob_open(x)
        c = self.half_width
        out = (2.0 * c / math.pi) * np.arcsin(2.0 * x - 1.0)
        return _maybe_scalar(out, x.ndim == 0)

    def density(self, z):
        z = np.asarray(z, dtype=float)
        c = self.half_width
        inside = np.abs(z) <= c
        out = np.where(
            inside, (math.pi / (4.0 * c)) * np.cos(0.5 * math.pi * z / c), 0.0
        )
        return _maybe_scalar(out, z.ndim == 0)


@dataclass(frozen=True)
class RaisedCosine(SymmetricDistribution):
    """Law with density (1 + cos(pi z / c)) / (2 c) on [-c, c]."""

    half_width: float

    INV_TOL = 1e-13
    INV_MAX_ITER = 200

    def __post_init__(self):
        if not self.half_width > 0.0:
            raise DomainError("half_width must be positive")

    @property
    def support(self) -> tuple[float, float]:
        return (-self.half_width, self.half_width)

    def cdf(self, z):
        z = np.asarray(z, dtype=float)
        c = self.half_width
        t = np.clip(z, -c, c)
        out = 0.5 + 0.5 * t / c + np.sin(math.pi * t / c) / (2.0 * math.pi)
        return _maybe_scalar(out, z.ndim == 0)

    def inv_cdf(self, x):
        # No closed form: the cdf mixes a line and a sine.
        x = self._check_prob_open(x)
        c = self.half_width
        lo = np.full(x.shape, -c)
        hi = np.full(x.shape, c)
        out = bisect_increasing(
            self.cdf, x, lo, hi, tol=self.INV_TOL, max_iter=self.INV_MAX_ITER
        )
        return _maybe_scalar(out, x.ndim == 0)

    def density(self, z):
        z = np.asarray(z, dtype=float)
        c = self.half_width
        inside = np.abs(z) <= c
        out = np.where(inside, (1.0 + np.cos(math.pi * z / c)) / (2.0 * c), 0.0)
        return _maybe_scalar(out, z.ndim == 0)


class TabulatedSymmetric(SymmetricDistribution):
    """Law given by cdf values on a grid, interpolated monotonically.

    Intended for encodings whose cdf is only available numerically.
    The grid must be strictly increasing and the values nondecreasing
    within [0, 1]; the interpolant is monotone cubic (PCHIP), so the
    tabulated monotonicity is preserved everywhere.  Outside the grid
    the cdf saturates at its end values.

    Inversion brackets the quantile on the grid and then bisects the
    interpolated cdf; the bracket is shrunk well below the documented
    1e-10 guarantee so downstream encode/decode round-trips are tight.
    """

    INV_TOL = 1e-13
    INV_MAX_ITER = 200

    def __init__(self, grid: np.ndarray, values: np.ndarray):
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float)
        if grid.ndim != 1 or grid.size < 4 or grid.shape != values.shape:
            raise ConstructionError("grid and values must be matching 1-D arrays")
        if np.any(np.diff(grid) <= 0.0):
            raise ConstructionError("grid must be strictly increasing")
        if np.any(np.diff(values) < 0.0):
            raise ConstructionError("tabulated cdf values must be nondecreasing")
        if values[0] < -1e-12 or values[-1] > 1.0 + 1e-12:
            raise ConstructionError("tabulated cdf values must lie in [0, 1]")
        values = np.clip(values, 0.0, 1.0)
        self._grid = grid
        self._values = values
        self._interp = PchipInterpolator(grid, values, extrapolate=False)
        self._deriv = self._interp.derivative()

    @property
    def support(self) -> tuple[float, float]:
        return (-math.inf, math.inf)

    @property
    def grid(self) -> np.ndarray:
        return self._grid

    def cdf(self, z):
        z = np.asarray(z, dtype=float)
        t = np.clip(z, self._grid[0], self._grid[-1])
        out = np.asarray(self._interp(t))
        return _maybe_scalar(out, z.ndim == 0)

    def density(self, z):
        z = np.asarray(z, dtype=float)
        inside = (z >= self._grid[0]) & (z <= self._grid[-1])
        t = np.clip(z, self._grid[0], self._grid[-1])
        out = np.where(inside, np.asarray(self._deriv(t)), 0.0)
        out = np.maximum(out, 0.0)
        return _maybe_scalar(out, z.ndim == 0)

    def inv_cdf(self, x):
        x = self._check_prob_open(x)
        flat = np.atleast_1d(x)
        # Bracket on the table, then refine against the interpolant.
        j = np.clip(np.searchsorted(self._values, flat, side="left"), 1, None)
        lo = self._grid[j - 1]
        hi = self._grid[np.minimum(j, self._grid.size - 1)]
        out = bisect_increasing(
            self.cdf, flat, lo, hi, tol=self.INV_TOL, max_iter=self.INV_MAX_ITER
        )
        out = out.reshape(x.shape)
        return _maybe_scalar(out, x.ndim == 0)


_DIST_PATTERN = re.compile(r"^\s*([a-z_]+)\s*\(\s*([^)]*)\s*\)\s*$")


def parse_distribution(text: str) -> SymmetricDistribution:
    """Build a distribution from a config string.

    Accepted, case-insensitively: ``uniform(c)``, ``twopoint(c)``,
    ``bigauss(m,s)``.
    """
    m = _DIST_PATTERN.match(str(text).lower())
    if m is None:
        raise ConfigError(f"cannot parse distribution {text!r}")
    name, arg_text = m.group(1), m.group(2)
    try:
        args = [float(a) for a in arg_text.split(",")] if arg_text.strip() else []
    except ValueError as exc:
        raise ConfigError(f"bad numeric arguments in {text!r}") from exc
    try:
        if name == "uniform" and len(args) == 1:
            return UniformInterval(args[0])
        if name == "twopoint" and len(args) == 1:
            return TwoPoint(args[0])
        if name == "bigauss" and len(args) == 2:
            return GaussianMixture(args[0], args[1])
    except DomainError as exc:
        raise ConfigError(f"bad parameters in {text!r}: {exc}") from exc
    raise ConfigError(f"unknown distribution {text!r}")


def check_calibrated_key(
    dist: SymmetricDistribution,
    x: float,
    n_samples: int,
    rng: np.random.Generator,
) -> float:
    """Empirical frequency of the thresholded key 1[inv_cdf(x) + eps >= 0].

    For a symmetric law with a genuine inverse cdf the true frequency
    is exactly x, so the returned value minus x is a Monte Carlo check
    of the thresholding construction.
    """
    if not 0.0 < x < 1.0:
        raise DomainError("x must lie strictly inside (0, 1)")
    if n_samples < 1:
        raise DomainError("n_samples must be at least 1")
    e = dist.inv_cdf(x)
    eps = dist.sample(rng, n_samples)
    return float(np.mean(e + eps >= 0.0))
