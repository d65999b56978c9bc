"""Seeded random streams, elementary samplers, quadrature, and diagnostics.

The diagnostics compare a set of posterior draws, standardized by a declared
center and scale, against a Gaussian target:

* ``ks_distance`` -- sup-distance between the empirical CDF and the target CDF,
* ``wasserstein1_to_gauss`` -- the exact area between the two CDFs, which on
  the real line dominates the bounded-Lipschitz distance,
* ``laplace_gap`` -- discrepancy of the empirical Laplace transform from the
  Gaussian one on a grid of exponents.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri
from scipy.special import logsumexp as _logsumexp

from .grids import GridFunction, GridError, trapezoid


class DegenerateTargetError(ValueError):
    """Raised when a diagnostic is asked to compare against N(m, 0)."""


# ---------------------------------------------------------------------------
# reproducible streams


@dataclass(frozen=True)
class RngStream:
    """A counter-based random stream keyed by (seed, stream_id).

    Identical keys give bit-identical sequences on any platform and under any
    execution order; distinct stream ids give independent streams, so
    replicates can be farmed out to workers without coordination.
    """

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed & 0xFFFFFFFFFFFFFFFF,
                        self.stream_id & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def substream(self, index: int) -> "RngStream":
        """Derived stream for a subtask; ``index`` must be below 2**20."""
        if not 0 <= index < (1 << 20):
            raise ValueError("substream index out of range")
        return RngStream(self.seed, (self.stream_id << 20) | index)


# ---------------------------------------------------------------------------
# scalar normal helpers


def normal_cdf(x):
    """Standard normal CDF."""
    return ndtr(x)


def normal_quantile(p):
    """Standard normal quantile function."""
    return ndtri(p)


def normal_pdf(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)


# ---------------------------------------------------------------------------
# draw sets and Gaussian targets


@dataclass(frozen=True)
class DrawSet:
    """Posterior draws of a scalar along with the standardization to apply."""

    values: np.ndarray
    center: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("DrawSet needs a non-empty 1-d value array")
        if not self.scale > 0:
            raise ValueError("DrawSet scale must be positive")

    def standardized(self) -> np.ndarray:
        return (self.values - self.center) / self.scale


@dataclass(frozen=True)
class GaussTarget:
    """Gaussian law the standardized draws are compared against."""

    mean: float = 0.0
    variance: float = 1.0

    def __post_init__(self):
        if self.variance < 0:
            raise ValueError("variance must be non-negative")

    @property
    def sd(self) -> float:
        return float(np.sqrt(self.variance))


def _standardized_sorted(draws: DrawSet, target: GaussTarget) -> np.ndarray:
    if target.variance == 0:
        raise DegenerateTargetError("target variance is zero")
    z = np.sort(draws.standardized())
    return (z - target.mean) / target.sd


def ks_distance(draws: DrawSet, target: GaussTarget) -> float:
    """sup_s |empirical CDF - target CDF| over the standardized draws.

    Both one-sided limits of the empirical CDF are evaluated at every jump.
    """
    z = _standardized_sorted(draws, target)
    m = z.size
    cdf = ndtr(z)
    upper = np.arange(1, m + 1) / m
    lower = np.arange(0, m) / m
    return float(max(np.max(np.abs(upper - cdf)), np.max(np.abs(cdf - lower))))


def _cdf_area_lower_tail(z: np.ndarray) -> float:
    # integral of Phi over (-inf, z]
    return float(z * ndtr(z) + normal_pdf(z))


def _cdf_area_upper_tail(z: np.ndarray) -> float:
    # integral of (1 - Phi) over [z, inf)
    return float(normal_pdf(z) - z * (1.0 - ndtr(z)))


def wasserstein1_to_gauss(draws: DrawSet, target: GaussTarget) -> float:
    """Exact integral of |empirical CDF - Gaussian CDF| after standardization.

    Between consecutive order statistics the Gaussian CDF crosses the constant
    empirical level at most once; each piece is integrated in closed form via
    the antiderivative z*Phi(z) + phi(z).
    """
    z = _standardized_sorted(draws, target)
    m = z.size
    total = _cdf_area_lower_tail(z[0]) + _cdf_area_upper_tail(z[-1])
    if m == 1:
        return total
    levels = np.arange(1, m) / m
    zl, zr = z[:-1], z[1:]
    anti = lambda t: t * ndtr(t) + normal_pdf(t)
    crossings = ndtri(levels)
    s = np.clip(crossings, zl, zr)
    # area of |level - Phi| = (below crossing: level - Phi) + (above: Phi - level)
    left = levels * (s - zl) - (anti(s) - anti(zl))
    right = (anti(zr) - anti(s)) - levels * (zr - s)
    total += float(np.sum(left + right))
    return total


def wasserstein1_two_sample(x: np.ndarray, y: np.ndarray) -> float:
    """Exact 1-Wasserstein distance between two empirical distributions."""
    x = np.sort(np.asarray(x, dtype=float))
    y = np.sort(np.asarray(y, dtype=float))
    if x.size == 0 or y.size == 0:
        raise ValueError("empty sample")
    pooled = np.sort(np.concatenate([x, y]))
    fx = np.searchsorted(x, pooled[:-1], side="right") / x.size
    fy = np.searchsorted(y, pooled[:-1], side="right") / y.size
    return float(np.sum(np.abs(fx - fy) * np.diff(pooled)))


def laplace_gap(draws: DrawSet, target: GaussTarget, t_grid) -> np.ndarray:
    """|log E e^{t z} - t^2/2| on a grid of t, for standardized draws z.

    Computed through log-sum-exp so that moderately large |t| stays stable.
    A variance-zero target is accepted only when every standardized draw
    equals the target mean exactly (the gap is then zero for every t).
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size == 0:
        return np.zeros(0)
    z = draws.standardized()
    if target.variance == 0:
        if np.all(z == target.mean):
            return np.zeros(t_grid.size)
        raise DegenerateTargetError(
            "variance-zero target with non-degenerate draws")
    z = (z - target.mean) / target.sd
    m = z.size
    gaps = np.empty(t_grid.size)
    for i, t in enumerate(t_grid):
        log_mean = _logsumexp(t * z) - np.log(m)
        gaps[i] = abs(log_mean - 0.5 * t * t)
    return gaps


# ---------------------------------------------------------------------------
# samplers


def sample_dirichlet(rng: RngStream | np.random.Generator, alpha,
                     size: int | None = None) -> np.ndarray:
    """Dirichlet draws with the given concentration vector.

    Gamma-ratio construction; rows whose gamma variates all underflow (tiny
    concentrations) are redrawn in log space, so the output always sums to 1.
    """
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    alpha = np.asarray(alpha, dtype=float)
    if alpha.ndim != 1 or alpha.size == 0:
        raise ValueError("alpha must be a non-empty vector")
    if np.any(alpha <= 0):
        raise ValueError("Dirichlet concentrations must be positive")
    squeeze = size is None
    n = 1 if size is None else int(size)
    g = gen.standard_gamma(alpha, size=(n, alpha.size))
    totals = g.sum(axis=1)
    bad = np.nonzero(totals == 0.0)[0]
    for i in bad:
        # Marsaglia-Tsang boost: log G(a) = log G(a+1) + log(U)/a
        logg = np.log(gen.standard_gamma(alpha + 1.0)) + \
            np.log(gen.uniform(size=alpha.size)) / alpha
        logg -= logg.max()
        g[i] = np.exp(logg)
        totals[i] = g[i].sum()
    out = g / totals[:, None]
    return out[0] if squeeze else out


def _trunc_normal_tail(gen, a, b, size):
    # one-sided exponential rejection on [a, b] with 0 < a (Robert's sampler)
    lam = 0.5 * (a + np.sqrt(a * a + 4.0))
    out = np.empty(size)
    filled = 0
    while filled < size:
        m = max(size - filled, 32)
        z = a - np.log(gen.uniform(size=m)) / lam
        accept = gen.uniform(size=m) <= np.exp(-0.5 * (z - lam) ** 2)
        z = z[accept & (z <= b)]
        take = min(z.size, size - filled)
        out[filled : filled + take] = z[:take]
        filled += take
    return out


def sample_trunc_normal(rng: RngStream | np.random.Generator, mu: float,
                        sigma: float, lo: float, hi: float,
                        size: int | None = None) -> np.ndarray:
    """N(mu, sigma^2) conditioned to [lo, hi].

    Inverse-CDF transform while the window keeps at least 1e-10 of the mass;
    far in a tail that difference of Phi values cancels catastrophically, so
    a shifted-exponential rejection sampler takes over.
    """
    if not lo < hi:
        raise ValueError("truncation window must satisfy lo < hi")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    squeeze = size is None
    n = 1 if size is None else int(size)
    a = (lo - mu) / sigma
    b = (hi - mu) / sigma
    flip = b <= 0.0
    if flip:
        # mirror a lower-tail window into the upper tail
        a, b = -b, -a
    if a >= 0:
        mass = float(ndtr(-a) - ndtr(-b))
    else:
        mass = float(ndtr(b) - ndtr(a))
    if mass >= 1e-10:
        u = gen.uniform(size=n)
        if a >= 0:
            z = -ndtri(ndtr(-a) - u * mass)
        else:
            z = ndtri(ndtr(a) + u * mass)
    else:
        if a <= 0:
            raise ValueError("window mass underflows on a central window")
        z = _trunc_normal_tail(gen, a, b, n)
    z = np.clip(z, a, b)
    if flip:
        z = -z
    x = mu + sigma * z
    x = np.clip(x, lo, hi)
    return float(x[0]) if squeeze else x


def trunc_normal_moments(mu: float, sigma: float, lo: float, hi: float):
    """Mean and variance of N(mu, sigma^2) restricted to [lo, hi].

    The window mass is evaluated on the complementary side when the window
    sits in a tail, which keeps the Phi difference from cancelling.
    """
    a = (lo - mu) / sigma
    b = (hi - mu) / sigma
    flip = b <= 0.0
    if flip:
        a, b = -b, -a
    mass = float(ndtr(-a) - ndtr(-b)) if a >= 0 else float(ndtr(b) - ndtr(a))
    if mass <= 0:
        raise ValueError("window carries no mass")
    pa, pb = normal_pdf(a), normal_pdf(b)
    mean_std = (pa - pb) / mass
    var_std = 1.0 + (a * pa - b * pb) / mass - mean_std ** 2
    if flip:
        mean_std = -mean_std
    return float(mu + sigma * mean_std), float(sigma ** 2 * var_std)


# ---------------------------------------------------------------------------
# quadrature


def quadrature(f, x=None) -> float:
    """Composite trapezoid integral.

    Accepts a ``GridFunction`` or a pair of arrays ``(values, nodes)``; node
    spacings must be uniform, otherwise the call is rejected.
    """
    if isinstance(f, GridFunction):
        return trapezoid(f)
    values = np.asarray(f, dtype=float)
    if x is None:
        raise GridError("raw-array quadrature needs explicit nodes")
    x = np.asarray(x, dtype=float)
    if x.size != values.size or x.size < 2:
        raise GridError("nodes and values must align with >= 2 points")
    dx = np.diff(x)
    if not np.allclose(dx, dx[0], rtol=1e-10, atol=0.0):
        raise GridError("quadrature requires a uniform grid")
    return trapezoid(GridFunction(float(x[0]), float(x[-1]), values))
