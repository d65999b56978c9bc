"""Catalogue of density functionals with influence functions and remainders.

Each functional psi acting on densities over [0, 1] comes with

* its efficient influence function (the derivative representer, centered so
  that its integral against the base density vanishes),
* an exact value on piecewise-constant densities,
* the second-order remainder of the expansion
  ``psi(f) = psi(f0) + <(f - f0), influence> + remainder(f, f0)``.

The linear kinds (``linear``, ``cdf``, ``haar_series``) have remainder zero by
construction; the nonlinear kinds carry their closed-form remainders.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .grids import (
    GridFunction,
    GridError,
    StepFunction,
    bin_integrals,
    integrate_between,
    trapezoid,
)

KINDS = ("linear", "cdf", "entropy", "square_root", "power", "haar_series")


@dataclass(frozen=True)
class FunctionalSpec:
    """A functional of a density on [0, 1], identified by kind and parameters."""

    kind: str
    a: GridFunction | None = None        # linear: psi(f) = int a f
    z: float | None = None               # cdf: psi(f) = F(z)
    q: int | None = None                 # power: psi(f) = int f^q
    alpha: float | None = None           # haar_series decay exponent
    max_level: int | None = None         # haar_series truncation level
    description: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown functional kind {self.kind!r}")
        if self.kind == "linear" and self.a is None:
            raise ValueError("linear functional needs a weight function")
        if self.kind == "cdf":
            if self.z is None or not 0.0 <= self.z <= 1.0:
                raise ValueError("cdf functional needs z in [0, 1]")
        if self.kind == "power":
            if self.q is None or self.q < 2:
                raise ValueError("power functional needs integer q >= 2")
        if self.kind == "haar_series":
            if self.alpha is None or self.alpha <= 0:
                raise ValueError("haar_series needs alpha > 0")
            if self.max_level is None or self.max_level < 0:
                raise ValueError("haar_series needs max_level >= 0")

    # convenience constructors -------------------------------------------------

    @staticmethod
    def linear(a: GridFunction, description="linear"):
        return FunctionalSpec("linear", a=a, description=description)

    @staticmethod
    def cdf(z: float):
        return FunctionalSpec("cdf", z=z, description=f"cdf at {z}")

    @staticmethod
    def entropy():
        return FunctionalSpec("entropy", description="entropy")

    @staticmethod
    def square_root():
        return FunctionalSpec("square_root", description="integral of sqrt(f)")

    @staticmethod
    def power(q: int):
        return FunctionalSpec("power", q=q, description=f"integral of f^{q}")

    @staticmethod
    def haar_series(alpha: float, max_level: int = 14):
        return FunctionalSpec(
            "haar_series", alpha=alpha, max_level=max_level,
            description=f"haar series, decay {alpha}, levels <= {max_level}")


@dataclass(frozen=True)
class InfluenceFunction:
    """Tabulated influence function and its squared weighted-L2 norm."""

    values: GridFunction
    l2_norm_sq: float
    _exact: object = None  # optional exact evaluator for discontinuous kinds

    def __call__(self, x) -> np.ndarray:
        if self._exact is not None:
            return self._exact(np.asarray(x, dtype=float))
        return self.values(x)


def _require_density(f0: GridFunction, positive: bool):
    total = trapezoid(f0)
    if abs(total - 1.0) > 1e-8:
        raise ValueError(f"density integrates to {total}, expected 1")
    if positive and np.any(f0.values <= 0):
        raise ValueError("density must be strictly positive for this kind")


def _linear_weight(spec: FunctionalSpec, like: GridFunction) -> GridFunction:
    """The weight function of the linearization, tabulated on f0's grid."""
    if spec.kind == "linear":
        if (spec.a.a, spec.a.b, spec.a.size) == (like.a, like.b, like.size):
            return spec.a
        return GridFunction(like.a, like.b, spec.a(like.nodes()))
    if spec.kind == "haar_series":
        step = haar_cell_heights(spec.alpha, spec.max_level)
        return GridFunction(like.a, like.b, step(np.clip(like.nodes(), 0, 1)))
    raise ValueError("no linear weight for this kind")


def influence(spec: FunctionalSpec, f0: GridFunction) -> InfluenceFunction:
    """Efficient influence function of ``spec`` at the density ``f0``.

    The raw representer is recentered by its f0-average so the tabulated
    function integrates against f0 to zero up to rounding.
    """
    _require_density(f0, positive=spec.kind in ("entropy", "square_root", "power"))
    exact = None
    if spec.kind in ("linear", "haar_series"):
        raw = _linear_weight(spec, f0)
        if spec.kind == "haar_series":
            step = haar_cell_heights(spec.alpha, spec.max_level)
            exact_raw = lambda x: step(np.clip(x, 0.0, 1.0))
    elif spec.kind == "cdf":
        nodes = f0.nodes()
        raw = GridFunction(f0.a, f0.b, (nodes <= spec.z).astype(float))
        exact_raw = lambda x: (x <= spec.z).astype(float)
    elif spec.kind == "entropy":
        raw = f0.map(np.log)
    elif spec.kind == "square_root":
        raw = f0.map(lambda v: 0.5 / np.sqrt(v))
    elif spec.kind == "power":
        raw = f0.map(lambda v: spec.q * v ** (spec.q - 1))
    total = trapezoid(f0)
    if spec.kind == "cdf":
        # exact bin-free integral of the indicator against f0
        center = integrate_between(f0, f0.a, spec.z) / total
        norm_sq = center * (1.0 - center)
    elif spec.kind == "haar_series":
        # cell-exact integrals: trapezoid across the jumps would bias the norm
        step = haar_cell_heights(spec.alpha, spec.max_level)
        masses = bin_integrals(f0, step.k)
        cell_total = masses.sum()
        center = float(np.dot(step.heights, masses)) / cell_total
        norm_sq = float(np.dot((step.heights - center) ** 2, masses))
    else:
        center = trapezoid(f0.with_values(raw.values * f0.values)) / total
    values = raw.with_values(raw.values - center)
    if spec.kind in ("cdf", "haar_series"):
        exact = lambda x, e=exact_raw, c=center: e(x) - c
    if spec.kind not in ("cdf", "haar_series"):
        norm_sq = trapezoid(f0.with_values(values.values ** 2 * f0.values))
    return InfluenceFunction(values, float(norm_sq), exact)


def value_on_grid(spec: FunctionalSpec, f: GridFunction) -> float:
    """psi(f) for a tabulated density, by quadrature (exact where possible)."""
    if spec.kind == "linear":
        a = _linear_weight(spec, f)
        return trapezoid(f.with_values(a.values * f.values))
    if spec.kind == "cdf":
        return integrate_between(f, f.a, spec.z)
    if spec.kind == "haar_series":
        step = haar_cell_heights(spec.alpha, spec.max_level)
        return float(np.dot(step.heights, bin_integrals(f, step.k)))
    if spec.kind == "entropy":
        return trapezoid(f.map(lambda v: v * np.log(v)))
    if spec.kind == "square_root":
        return trapezoid(f.map(np.sqrt))
    if spec.kind == "power":
        return trapezoid(f.map(lambda v: v ** spec.q))
    raise AssertionError(spec.kind)


def value_on_histogram(spec: FunctionalSpec, k: int, omega: np.ndarray) -> float:
    """Exact psi on the histogram density with bin weights ``omega``.

    ``omega`` may also be a matrix of draws (one simplex point per row), in
    which case a vector of values is returned.
    """
    omega = np.asarray(omega, dtype=float)
    single = omega.ndim == 1
    w = omega[None, :] if single else omega
    if spec.kind == "linear":
        a_bins = bin_integrals(spec.a, k)
        vals = k * w @ a_bins
    elif spec.kind == "haar_series":
        vals = k * w @ _haar_bin_integrals(spec, k)
    elif spec.kind == "cdf":
        z = spec.z
        jz = min(int(np.floor(k * z)), k - 1) if z < 1.0 else k
        vals = w[:, :jz].sum(axis=1)
        if jz < k:
            vals = vals + (k * z - jz) * w[:, jz]
    elif spec.kind == "entropy":
        t = k * w
        vals = np.where(w > 0, w * np.log(np.maximum(t, 1e-300)), 0.0).sum(axis=1)
    elif spec.kind == "square_root":
        vals = np.sqrt(w / k).sum(axis=1)
    elif spec.kind == "power":
        vals = k ** (spec.q - 1) * (w ** spec.q).sum(axis=1)
    else:
        raise AssertionError(spec.kind)
    return float(vals[0]) if single else vals


def _haar_bin_integrals(spec: FunctionalSpec, k: int) -> np.ndarray:
    step = haar_cell_heights(spec.alpha, spec.max_level)
    if step.k % k == 0:
        r = step.k // k
        return step.heights.reshape(k, r).sum(axis=1) / step.k
    grid = step.to_grid(size=step.k + 1)
    return bin_integrals(grid, k)


def _binwise(f0: GridFunction, k: int, heights: np.ndarray, integrand) -> float:
    """Sum over bins of the trapezoid integral of integrand(height_j, f0)."""
    cells = f0.size - 1
    if cells % k != 0:
        raise GridError("binwise integration needs an aligned grid")
    stepn = cells // k
    v = f0.values
    total = 0.0
    for j in range(k):
        seg = v[j * stepn : (j + 1) * stepn + 1]
        g = integrand(heights[j], seg)
        total += (g.sum() - 0.5 * (g[0] + g[-1])) * f0.dx
    return total


def remainder(spec: FunctionalSpec, f, f0: GridFunction) -> float:
    """Second-order remainder of the functional expansion at f0.

    ``f`` is either a tabulated density (GridFunction) or a histogram given as
    ``(k, omega)``; histogram remainders are evaluated bin by bin so that the
    expansion identity holds to rounding on aligned grids.
    """
    if spec.kind in ("linear", "cdf", "haar_series"):
        return 0.0
    if isinstance(f, tuple):
        k, omega = f
        heights = k * np.asarray(omega, dtype=float)
        if spec.kind == "entropy":
            if np.any(heights <= 0) or np.any(f0.values <= 0):
                raise ValueError("entropy remainder needs positive densities")
            val = float(np.where(heights > 0,
                                 (heights / k) * np.log(heights), 0.0).sum())
            val -= _binwise(f0, k, heights, lambda u, s: u * np.log(s))
            return val
        if spec.kind == "square_root":
            return -_binwise(
                f0, k, heights,
                lambda u, s: (np.sqrt(s) - np.sqrt(u)) ** 2 / (2.0 * np.sqrt(s)))
        if spec.kind == "power":
            q = spec.q
            total = 0.0
            for s_exp in range(q - 1):
                c = comb(q, s_exp + 2)
                total += c * _binwise(
                    f0, k, heights,
                    lambda u, s, e=s_exp: (u - s) ** (2 + e) * s ** (q - 2 - e))
            return total
        raise AssertionError(spec.kind)
    fv, f0v = f.values, f0.values
    if spec.kind == "entropy":
        if np.any(fv <= 0) or np.any(f0v <= 0):
            raise ValueError("entropy remainder needs positive densities")
        return trapezoid(f.with_values(fv * np.log(fv / f0v)))
    if spec.kind == "square_root":
        if np.any(f0v <= 0) or np.any(fv < 0):
            raise ValueError("square-root remainder needs positive base density")
        return -trapezoid(
            f.with_values((np.sqrt(f0v) - np.sqrt(fv)) ** 2 / (2 * np.sqrt(f0v))))
    if spec.kind == "power":
        q = spec.q
        d = fv - f0v
        total = 0.0
        for s_exp in range(q - 1):
            total += comb(q, s_exp + 2) * trapezoid(
                f.with_values(d ** (2 + s_exp) * f0v ** (q - 2 - s_exp)))
        return total
    raise AssertionError(spec.kind)


# ---------------------------------------------------------------------------
# Haar series


def haar_cell_heights(alpha: float, max_level: int) -> StepFunction:
    """The truncated Haar series as an exact step function.

    The partial sum through ``max_level`` is constant on the 2**(max_level+1)
    dyadic cells; level l contributes +-2**(-l*alpha) on alternating half
    cells of width 2**(-l-1).  The constant (scaling) term is omitted.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    n_cells = 1 << (max_level + 1)
    heights = np.zeros(n_cells)
    for level in range(max_level + 1):
        block = n_cells >> (level + 1)  # cells per half-support
        pattern = np.repeat(
            np.tile(np.array([-1.0, 1.0]), 1 << level), block)
        heights += 2.0 ** (-level * alpha) * pattern
    return StepFunction(heights)


def haar_functional(alpha: float, max_level: int,
                    x_grid: GridFunction | np.ndarray) -> GridFunction:
    """Tabulate the truncated Haar series on the given grid."""
    step = haar_cell_heights(alpha, max_level)
    if isinstance(x_grid, GridFunction):
        nodes, a, b = x_grid.nodes(), x_grid.a, x_grid.b
    else:
        nodes = np.asarray(x_grid, dtype=float)
        a, b = float(nodes[0]), float(nodes[-1])
    return GridFunction(a, b, step(np.clip(nodes, 0.0, 1.0)))


def counterexample_bias(f0: GridFunction, alpha: float, k_bins: int,
                        n: int, max_level: int = 14) -> float:
    """Centering bias of the truncated Haar functional under a k-bin projection.

    Returns ``-sqrt(n) * sum_{levels above log2(k)} coeff_l * int f0 * haar_l``,
    the exact finite-sum analogue of the geometric tail; negative whenever f0
    is increasing, zero for constant f0.
    """
    p = int(round(np.log2(k_bins)))
    if (1 << p) != k_bins:
        raise ValueError("bin count must be a power of two")
    if max_level <= p:
        return 0.0
    n_cells = 1 << (max_level + 1)
    masses = bin_integrals(f0, n_cells)
    total = 0.0
    level_masses = masses
    size = n_cells
    # walk levels from finest to coarsest, halving the mass array each time
    contributions = {}
    for level in range(max_level, -1, -1):
        # at this level, wavelet j covers cells [2j, 2j+1] of the current array
        pairs = level_masses.reshape(size // 2, 2)
        diffs = pairs[:, 1] - pairs[:, 0]  # right half minus left half
        contributions[level] = 2.0 ** (level / 2.0) * diffs
        level_masses = pairs.sum(axis=1)
        size //= 2
    for level in range(p + 1, max_level + 1):
        coeff = 2.0 ** (-level * (0.5 + alpha))
        total += coeff * contributions[level].sum()
    return -np.sqrt(n) * total


def counterexample_bias_tail_bound(alpha: float, max_level: int) -> float:
    """Sup-norm bound on the discarded levels of the truncated Haar series."""
    return 2.0 ** (-(max_level + 1) * alpha) / (1.0 - 2.0 ** (-alpha))
