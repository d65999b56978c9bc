"""Tabulated functions on uniform grids and piecewise-constant step functions.

Two representations are used throughout:

* ``GridFunction`` -- values on a uniform grid, integrated by the composite
  trapezoid rule.  Used for densities, latent paths, influence functions.
* ``StepFunction`` -- constant on ``k`` equal bins of ``[0, 1]``.  Histogram
  densities and bin projections live here; integrals against step functions
  are computed per bin in closed form, never by trapezoid across a jump.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class GridError(ValueError):
    """Raised for malformed or misaligned grids."""


@dataclass(frozen=True)
class GridFunction:
    """A real function tabulated on a uniform grid over [a, b]."""

    a: float
    b: float
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.ndim != 1 or v.size < 2:
            raise GridError("grid needs at least 2 nodes")
        if not np.all(np.isfinite(v)):
            raise GridError("non-finite grid values")
        if not self.b > self.a:
            raise GridError("empty interval")

    @property
    def size(self) -> int:
        return self.values.size

    @property
    def dx(self) -> float:
        return (self.b - self.a) / (self.size - 1)

    def nodes(self) -> np.ndarray:
        return np.linspace(self.a, self.b, self.size)

    def __call__(self, x) -> np.ndarray:
        """Linear interpolation at ``x`` (clamped to [a, b])."""
        return np.interp(x, self.nodes(), self.values)

    def map(self, fn) -> "GridFunction":
        return GridFunction(self.a, self.b, fn(self.values))

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.a, self.b, values)


def from_callable(fn, a=0.0, b=1.0, size=1025) -> GridFunction:
    x = np.linspace(a, b, size)
    return GridFunction(a, b, np.asarray(fn(x), dtype=float))


def trapezoid(g: GridFunction) -> float:
    """Composite trapezoid integral of ``g`` over its domain."""
    w = np.ones(g.size)
    w[0] = w[-1] = 0.5
    return float(np.dot(w, g.values) * g.dx)


def cumulative(g: GridFunction) -> np.ndarray:
    """Cumulative trapezoid integral evaluated at the grid nodes."""
    mids = 0.5 * (g.values[1:] + g.values[:-1]) * g.dx
    out = np.empty(g.size)
    out[0] = 0.0
    np.cumsum(mids, out=out[1:])
    return out


def integrate_between(g: GridFunction, lo: float, hi: float) -> float:
    """Trapezoid integral of ``g`` over [lo, hi] with fractional end cells."""
    if hi < lo:
        raise GridError("integrate_between needs lo <= hi")
    lo = max(lo, g.a)
    hi = min(hi, g.b)
    if hi <= lo:
        return 0.0
    cum = cumulative(g)
    xs = g.nodes()

    def cum_at(t):
        i = min(int((t - g.a) / g.dx), g.size - 2)
        u = t - xs[i]
        # exact integral of the linear interpolant over the partial cell
        slope = (g.values[i + 1] - g.values[i]) / g.dx
        return cum[i] + g.values[i] * u + 0.5 * slope * u * u

    return float(cum_at(hi) - cum_at(lo))


def normalize_density(g: GridFunction) -> GridFunction:
    total = trapezoid(g)
    if total <= 0:
        raise GridError("cannot normalize a function with non-positive mass")
    return g.with_values(g.values / total)


def sample_from_density(g: GridFunction, u: np.ndarray) -> np.ndarray:
    """Map uniforms ``u`` through the exact inverse CDF of the interpolant.

    The tabulated density is piecewise linear, so its CDF is piecewise
    quadratic and inverts in closed form cell by cell; no interpolation bias
    is introduced beyond the tabulation itself.
    """
    u = np.asarray(u, dtype=float)
    cum = cumulative(g)
    total = cum[-1]
    target = u * total
    idx = np.clip(np.searchsorted(cum, target, side="right") - 1, 0, g.size - 2)
    xs = g.nodes()
    f0 = g.values[idx]
    slope = (g.values[idx + 1] - g.values[idx]) / g.dx
    resid = target - cum[idx]
    # solve 0.5*slope*t^2 + f0*t = resid on each cell; the quadratic root
    # below is valid for either sign of the slope
    lin = np.abs(slope) * g.dx < 1e-12 * np.maximum(f0, 1e-300)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_lin = resid / np.maximum(f0, 1e-300)
        disc = np.maximum(f0 * f0 + 2.0 * slope * resid, 0.0)
        t_quad = (-f0 + np.sqrt(disc)) / np.where(lin, 1.0, slope)
    out = np.where(lin, t_lin, t_quad)
    out = np.clip(out, 0.0, g.dx)
    return xs[idx] + out


# ---------------------------------------------------------------------------
# step functions on [0, 1]


@dataclass(frozen=True)
class StepFunction:
    """Piecewise-constant function on k equal bins of [0, 1].

    Bin j (0-based) is [j/k, (j+1)/k), with the last bin closed at 1.
    """

    heights: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.heights, dtype=float)
        object.__setattr__(self, "heights", h)
        if h.ndim != 1 or h.size < 1:
            raise GridError("step function needs at least one bin")

    @property
    def k(self) -> int:
        return self.heights.size

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        j = np.clip((x * self.k).astype(int), 0, self.k - 1)
        return self.heights[j]

    def integral(self) -> float:
        return float(np.sum(self.heights)) / self.k

    def to_grid(self, size=1025, a=0.0, b=1.0) -> GridFunction:
        x = np.linspace(a, b, size)
        return GridFunction(a, b, self(np.clip(x, 0.0, 1.0)))


def bin_edges(k: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, k + 1)


def bin_integrals(g: GridFunction, k: int) -> np.ndarray:
    """Integrals of ``g`` over each of the k equal bins of [0, 1].

    When the grid cells align with the bin partition the result is the plain
    trapezoid value restricted to each bin; otherwise a fractional-cell
    fallback is used.
    """
    if not (abs(g.a) < 1e-12 and abs(g.b - 1.0) < 1e-12):
        raise GridError("bin projection requires domain [0, 1]")
    cells = g.size - 1
    if cells % k == 0:
        step = cells // k
        v = g.values
        cell_areas = 0.5 * (v[1:] + v[:-1]) * g.dx
        return cell_areas.reshape(k, step).sum(axis=1)
    edges = bin_edges(k)
    cum = cumulative(g)
    xs = g.nodes()
    idx = np.clip(((edges - g.a) / g.dx).astype(int), 0, g.size - 2)
    u = edges - xs[idx]
    slope = (g.values[idx + 1] - g.values[idx]) / g.dx
    cum_at_edges = cum[idx] + g.values[idx] * u + 0.5 * slope * u * u
    return np.diff(cum_at_edges)


def project_step(g: GridFunction, k: int) -> StepFunction:
    """L2 projection of ``g`` onto piecewise-constant functions with k bins."""
    return StepFunction(k * bin_integrals(g, k))


def dot_step_grid(s: StepFunction, g: GridFunction) -> float:
    """Exact integral of ``s * g`` computed bin by bin."""
    return float(np.dot(s.heights, bin_integrals(g, s.k)))


def dot_step_step(s: StepFunction, t: StepFunction) -> float:
    """Integral of ``s * t`` for step functions with nested bin counts."""
    if s.k == t.k:
        return float(np.dot(s.heights, t.heights)) / s.k
    fine, coarse = (s, t) if s.k > t.k else (t, s)
    if fine.k % coarse.k != 0:
        raise GridError("step products need nested bin counts")
    r = fine.k // coarse.k
    blocks = fine.heights.reshape(coarse.k, r).sum(axis=1) / fine.k
    return float(np.dot(coarse.heights, blocks))
