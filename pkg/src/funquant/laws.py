"""Univariate laws with exact cell moments for one-dimensional quantization.

A law exposes its density, CDF, quantile function, a sampler, and partial
moments over an interval: ``cell_moments(a, b)`` returns
(P(a < Y <= b), E[Y; a < Y <= b], E[Y^2; a < Y <= b]).  Cell moments are
what the one-dimensional fixed-point solver needs: conditional means over
cells and the expected squared distance to a finite point set.

Gaussian and Student components use closed-form antiderivatives instead of
numeric quadrature, so the solver's cell means carry no integration error.
The laws of one-dimensional projections of the elliptical models in this
package are always of one of these forms: a finite mixture of centered
normals (gaussian / two-point scale mixtures) or a scaled Student t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import ConfigError, UsageError

_SQRT2PI = math.sqrt(2.0 * math.pi)


def _norm_pdf(z: float) -> float:
    if not math.isfinite(z):
        return 0.0
    return math.exp(-0.5 * z * z) / _SQRT2PI


def _norm_cdf(z: float) -> float:
    if z == -math.inf:
        return 0.0
    if z == math.inf:
        return 1.0
    return float(special.ndtr(z))


def _z_phi(z: float) -> float:
    """z * standard normal pdf, with the correct 0 limit at +-inf."""
    if not math.isfinite(z):
        return 0.0
    return z * _norm_pdf(z)


class UnivariateLaw:
    """Interface shared by the concrete laws below."""

    mean: float
    variance: float
    support: tuple[float, float]

    def pdf(self, y):
        raise NotImplementedError

    def cdf(self, y):
        raise NotImplementedError

    def quantile(self, p: float) -> float:
        raise NotImplementedError

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def cell_moments(self, a: float, b: float) -> tuple[float, float, float]:
        """Mass, first and second moment of Y restricted to (a, b]."""
        raise NotImplementedError

    def scaled(self, rho: float) -> "UnivariateLaw":
        """The law of rho * Y."""
        raise NotImplementedError

    def cell_mean(self, a: float, b: float) -> float:
        m0, m1, _ = self.cell_moments(a, b)
        if m0 <= 0.0:
            raise UsageError(f"cell ({a}, {b}] carries no mass")
        return m1 / m0

    def expected_sq_distance(self, points) -> float:
        """E[min_j (Y - y_j)^2] for a finite point set.

        Cells are delimited by midpoints of adjacent (sorted) points; the
        integral over each cell expands into the stored partial moments.
        """
        pts = np.sort(np.asarray(points, dtype=float))
        if pts.ndim != 1 or pts.size == 0:
            raise UsageError("need a non-empty 1-d point set")
        bounds = np.concatenate(([-np.inf], (pts[1:] + pts[:-1]) / 2.0, [np.inf]))
        total = 0.0
        for y, a, b in zip(pts, bounds[:-1], bounds[1:]):
            m0, m1, m2 = self.cell_moments(a, b)
            total += m2 - 2.0 * y * m1 + y * y * m0
        return total

    def integration_interval(self) -> tuple[float, float]:
        """A finite window carrying all but ~1e-10 of the law's mass."""
        lo, hi = self.support
        if math.isfinite(lo) and math.isfinite(hi):
            return lo, hi
        sd = math.sqrt(self.variance)
        if not math.isfinite(lo):
            lo = min(self.mean - 10.0 * sd, self.quantile(1e-10))
        if not math.isfinite(hi):
            hi = max(self.mean + 10.0 * sd, self.quantile(1.0 - 1e-10))
        return lo, hi

    def quadrature_grid(self, m: int = 4001) -> np.ndarray:
        lo, hi = self.integration_interval()
        return np.linspace(lo, hi, m)


@dataclass(frozen=True)
class NormalMixtureLaw(UnivariateLaw):
    """Finite mixture of normals sharing a common center.

    This is the law of ``loc + S * xi`` with xi standard normal and S a
    positive random scale taking value ``scales[i]`` with probability
    ``weights[i]``.
    """

    weights: tuple[float, ...]
    scales: tuple[float, ...]
    loc: float = 0.0

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        s = tuple(float(x) for x in self.scales)
        if len(w) != len(s) or not w:
            raise ConfigError("weights and scales must be non-empty and of equal length")
        if any(x < 0 for x in w) or abs(sum(w) - 1.0) > 1e-12:
            raise ConfigError("weights must be nonnegative and sum to 1")
        if any(x <= 0 for x in s):
            raise ConfigError("component scales must be positive")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "scales", s)
        object.__setattr__(self, "loc", float(self.loc))

    @property
    def mean(self) -> float:
        return self.loc

    @property
    def variance(self) -> float:
        return sum(w * s * s for w, s in zip(self.weights, self.scales))

    @property
    def support(self) -> tuple[float, float]:
        return (-math.inf, math.inf)

    def pdf(self, y):
        z = (np.asarray(y, dtype=float) - self.loc)
        out = sum(
            w * np.exp(-0.5 * (z / s) ** 2) / (_SQRT2PI * s)
            for w, s in zip(self.weights, self.scales)
        )
        return out if np.ndim(y) else float(out)

    def cdf(self, y):
        z = (np.asarray(y, dtype=float) - self.loc)
        out = sum(w * special.ndtr(z / s) for w, s in zip(self.weights, self.scales))
        return out if np.ndim(y) else float(out)

    def quantile(self, p: float) -> float:
        if not 0.0 < p < 1.0:
            raise UsageError(f"quantile level must be in (0, 1), got {p}")
        if len(self.scales) == 1:
            return self.loc + self.scales[0] * float(special.ndtri(p))
        qs = [self.loc + s * float(special.ndtri(p)) for s in self.scales]
        lo, hi = min(qs), max(qs)
        if hi - lo < 1e-300:
            return lo
        from scipy.optimize import brentq

        return float(brentq(lambda y: self.cdf(y) - p, lo, hi, xtol=1e-13, rtol=1e-14))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        idx = rng.choice(len(self.weights), size=n, p=np.asarray(self.weights))
        s = np.asarray(self.scales)[idx]
        return self.loc + s * rng.standard_normal(n)

    def cell_moments(self, a: float, b: float) -> tuple[float, float, float]:
        m0 = m1c = m2c = 0.0
        for w, s in zip(self.weights, self.scales):
            za, zb = (a - self.loc) / s, (b - self.loc) / s
            p = _norm_cdf(zb) - _norm_cdf(za)
            c1 = s * (_norm_pdf(za) - _norm_pdf(zb))
            c2 = s * s * (p + _z_phi(za) - _z_phi(zb))
            m0 += w * p
            m1c += w * c1
            m2c += w * c2
        return m0, self.loc * m0 + m1c, self.loc**2 * m0 + 2.0 * self.loc * m1c + m2c

    def scaled(self, rho: float) -> "NormalMixtureLaw":
        if rho == 0.0:
            raise UsageError("scale factor must be nonzero")
        return NormalMixtureLaw(
            weights=self.weights,
            scales=tuple(abs(rho) * s for s in self.scales),
            loc=rho * self.loc,
        )


@dataclass(frozen=True)
class StudentTLaw(UnivariateLaw):
    """Scaled and shifted Student t with ``nu > 2`` degrees of freedom.

    Equals the law of ``loc + scale * Z * xi`` for the inverse-chi scale
    variable Z = sqrt(nu / chi2_nu) and independent standard normal xi.
    Partial moments use the closed-form antiderivatives of y f(y) and
    y^2 f(y) for the t density.
    """

    nu: float
    scale: float = 1.0
    loc: float = 0.0

    def __post_init__(self):
        if not self.nu > 2:
            raise ConfigError(f"degrees of freedom must exceed 2, got {self.nu}")
        if not self.scale > 0:
            raise ConfigError(f"scale must be positive, got {self.scale}")

    @property
    def mean(self) -> float:
        return self.loc

    @property
    def variance(self) -> float:
        return self.scale**2 * self.nu / (self.nu - 2.0)

    @property
    def support(self) -> tuple[float, float]:
        return (-math.inf, math.inf)

    def _std_pdf(self, x):
        nu = self.nu
        logc = special.gammaln((nu + 1) / 2) - special.gammaln(nu / 2) - 0.5 * math.log(nu * math.pi)
        return np.exp(logc - 0.5 * (nu + 1) * np.log1p(np.asarray(x, dtype=float) ** 2 / nu))

    def pdf(self, y):
        x = (np.asarray(y, dtype=float) - self.loc) / self.scale
        out = self._std_pdf(x) / self.scale
        return out if np.ndim(y) else float(out)

    def cdf(self, y):
        x = (np.asarray(y, dtype=float) - self.loc) / self.scale
        out = special.stdtr(self.nu, x)
        return out if np.ndim(y) else float(out)

    def quantile(self, p: float) -> float:
        if not 0.0 < p < 1.0:
            raise UsageError(f"quantile level must be in (0, 1), got {p}")
        return self.loc + self.scale * float(special.stdtrit(self.nu, p))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.loc + self.scale * rng.standard_t(self.nu, size=n)

    def _g1(self, x: float) -> float:
        # antiderivative of t f(t): -(nu + x^2) f(x) / (nu - 1)
        if not math.isfinite(x):
            return 0.0
        return (self.nu + x * x) * float(self._std_pdf(x)) / (self.nu - 1.0)

    def _h2(self, x: float) -> float:
        # antiderivative piece for t^2 f(t): x (nu + x^2) f(x) / (2 - nu)
        if not math.isfinite(x):
            return 0.0
        return x * (self.nu + x * x) * float(self._std_pdf(x)) / (2.0 - self.nu)

    def cell_moments(self, a: float, b: float) -> tuple[float, float, float]:
        nu, s, loc = self.nu, self.scale, self.loc
        xa, xb = (a - loc) / s, (b - loc) / s
        fa = float(special.stdtr(nu, xa)) if math.isfinite(xa) else (0.0 if xa < 0 else 1.0)
        fb = float(special.stdtr(nu, xb)) if math.isfinite(xb) else (0.0 if xb < 0 else 1.0)
        i0 = fb - fa
        i1 = self._g1(xa) - self._g1(xb)
        i2 = self._h2(xb) - self._h2(xa) - nu / (2.0 - nu) * i0
        return i0, loc * i0 + s * i1, loc**2 * i0 + 2.0 * loc * s * i1 + s * s * i2

    def scaled(self, rho: float) -> "StudentTLaw":
        if rho == 0.0:
            raise UsageError("scale factor must be nonzero")
        return StudentTLaw(nu=self.nu, scale=abs(rho) * self.scale, loc=rho * self.loc)


@dataclass(frozen=True)
class UniformLaw(UnivariateLaw):
    """Uniform law on the interval [lo, hi]."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ConfigError(f"need lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def mean(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def variance(self) -> float:
        return (self.hi - self.lo) ** 2 / 12.0

    @property
    def support(self) -> tuple[float, float]:
        return (self.lo, self.hi)

    def pdf(self, y):
        y = np.asarray(y, dtype=float)
        out = np.where((y >= self.lo) & (y <= self.hi), 1.0 / (self.hi - self.lo), 0.0)
        return out if out.ndim else float(out)

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        out = np.clip((y - self.lo) / (self.hi - self.lo), 0.0, 1.0)
        return out if out.ndim else float(out)

    def quantile(self, p: float) -> float:
        if not 0.0 <= p <= 1.0:
            raise UsageError(f"quantile level must be in [0, 1], got {p}")
        return self.lo + p * (self.hi - self.lo)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size=n)

    def cell_moments(self, a: float, b: float) -> tuple[float, float, float]:
        a = max(a, self.lo)
        b = min(b, self.hi)
        if b <= a:
            return 0.0, 0.0, 0.0
        length = self.hi - self.lo
        return (
            (b - a) / length,
            (b * b - a * a) / (2.0 * length),
            (b**3 - a**3) / (3.0 * length),
        )

    def scaled(self, rho: float) -> "UniformLaw":
        if rho == 0.0:
            raise UsageError("scale factor must be nonzero")
        ends = sorted((rho * self.lo, rho * self.hi))
        return UniformLaw(lo=ends[0], hi=ends[1])


def normal_law(mean: float = 0.0, sd: float = 1.0) -> NormalMixtureLaw:
    """Convenience constructor for a single normal component."""
    return NormalMixtureLaw(weights=(1.0,), scales=(sd,), loc=mean)
