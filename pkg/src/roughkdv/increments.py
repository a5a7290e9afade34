"""Increment calculus on time grids.

Two- and three-index fields over a grid, the difference operators between
them, Holder-type norms, the sewing construction on dyadic grids, and a
Besov-style double-integral functional. The value type is anything that
supports +, -, scalar multiplication and a caller-supplied norm (floats,
complex numbers, SpectralCoeffs).
"""

from __future__ import annotations

import numbers
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TimeGrid",
    "TwoIndexField",
    "ThreeIndexField",
    "delta_path",
    "delta2",
    "holder_norm",
    "holder_norm_3",
    "sew",
    "grr_functional",
    "SewingError",
]

DEFAULT_MAX_LEVEL = 16


class SewingError(RuntimeError):
    """Sewing precondition failed: non-dyadic grid or no contraction."""


def _abs_norm(v):
    if isinstance(v, numbers.Number):
        return abs(v)
    if isinstance(v, np.ndarray):
        return float(np.max(np.abs(v)))
    # SpectralCoeffs and anything array-backed
    return float(np.max(np.abs(v.coeffs)))


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing time points t_0 < ... < t_M in [0, T]."""

    points: np.ndarray
    dyadic_level: int | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise ValueError("a time grid needs at least 2 points")
        if not np.all(np.diff(pts) > 0):
            raise ValueError("grid points must be strictly increasing")
        if self.dyadic_level is not None:
            if pts.size != 2**self.dyadic_level + 1:
                raise ValueError("dyadic level inconsistent with point count")
            h = (pts[-1] - pts[0]) / 2**self.dyadic_level
            if not np.allclose(np.diff(pts), h):
                raise ValueError("dyadic grids must be uniform")
        object.__setattr__(self, "points", pts)

    @classmethod
    def dyadic(cls, horizon: float, level: int, start: float = 0.0) -> "TimeGrid":
        pts = start + np.linspace(0.0, horizon, 2**level + 1)
        return cls(pts, dyadic_level=level)

    @classmethod
    def uniform(cls, horizon: float, steps: int, start: float = 0.0) -> "TimeGrid":
        lvl = int(np.log2(steps)) if steps > 0 and (steps & (steps - 1)) == 0 else None
        return cls(start + np.linspace(0.0, horizon, steps + 1), dyadic_level=lvl)

    @property
    def is_dyadic(self) -> bool:
        return self.dyadic_level is not None

    def __len__(self):
        return self.points.size


class TwoIndexField:
    """Values a_{ts} on ordered grid pairs s < t; a vanishes on the diagonal."""

    def __init__(self, grid: TimeGrid, values: dict):
        self.grid = grid
        self.values = values

    @classmethod
    def from_function(cls, grid: TimeGrid, fn) -> "TwoIndexField":
        """Materialise fn(s, t) on every ordered pair of grid points."""
        pts = grid.points
        vals = {}
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                vals[(i, j)] = fn(pts[i], pts[j])
        return cls(grid, vals)

    def value(self, i: int, j: int):
        if i == j:
            return None
        return self.values[(i, j)]

    def pairs(self):
        return self.values.items()

    def _zipped(self, other, op):
        if other.grid is not self.grid and not np.array_equal(other.grid.points, self.grid.points):
            raise ValueError("fields live on different grids")
        return TwoIndexField(self.grid, {ij: op(v, other.values[ij]) for ij, v in self.values.items()})

    def __add__(self, other):
        return self._zipped(other, lambda a, b: a + b)

    def __sub__(self, other):
        return self._zipped(other, lambda a, b: a - b)

    def __mul__(self, scalar):
        return TwoIndexField(self.grid, {ij: v * scalar for ij, v in self.values.items()})

    __rmul__ = __mul__


class ThreeIndexField:
    """Values h_{tus} on grid triples s < u < t, evaluated lazily.

    Fields produced by delta2 keep a reference to their base two-index
    field, which enables a vectorised norm path for scalar values.
    """

    def __init__(self, grid: TimeGrid, fn, base: TwoIndexField | None = None):
        self.grid = grid
        self._fn = fn
        self.base = base

    def value(self, i: int, u: int, j: int):
        if i == u or u == j:
            return None
        return self._fn(i, u, j)

    def triples(self):
        m = len(self.grid)
        for i in range(m):
            for u in range(i + 1, m):
                for j in range(u + 1, m):
                    yield (i, u, j), self._fn(i, u, j)


def delta_path(path, grid: TimeGrid) -> TwoIndexField:
    """First difference: (delta f)_{ts} = f_t - f_s."""
    if len(path) != len(grid):
        raise ValueError("path length must match the grid")
    vals = {}
    for i in range(len(path)):
        for j in range(i + 1, len(path)):
            vals[(i, j)] = path[j] - path[i]
    return TwoIndexField(grid, vals)


def delta2(a: TwoIndexField) -> ThreeIndexField:
    """Second difference: (delta a)_{tus} = a_{ts} - a_{tu} - a_{us}."""

    def fn(i, u, j):
        return a.values[(i, j)] - a.values[(u, j)] - a.values[(i, u)]

    return ThreeIndexField(a.grid, fn, base=a)


def holder_norm(a: TwoIndexField, mu: float, norm=_abs_norm) -> float:
    """sup over grid pairs of |a_{ts}| / (t - s)^mu (a lower bound of the true sup)."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    pts = a.grid.points
    best = 0.0
    for (i, j), v in a.values.items():
        dt = pts[j] - pts[i]
        best = max(best, norm(v) / dt**mu)
    return best


def holder_norm_3(h: ThreeIndexField, gamma: float, rho: float, norm=_abs_norm) -> float:
    """sup over grid triples of |h_{tus}| / ((u-s)^gamma (t-u)^rho).

    This two-exponent sup is a computable upper-bound surrogate for the
    decomposition-infimum norm, which has no finite algorithm.
    """
    if gamma <= 0 or rho <= 0:
        raise ValueError("exponents must be positive")
    if h.base is not None and norm is _abs_norm:
        sample = next(iter(h.base.values.values()))
        if isinstance(sample, numbers.Number):
            return _holder_norm_3_scalar(h.base, gamma, rho)
    pts = h.grid.points
    best = 0.0
    for (i, u, j), v in h.triples():
        den = (pts[u] - pts[i]) ** gamma * (pts[j] - pts[u]) ** rho
        best = max(best, norm(v) / den)
    return best


def _holder_norm_3_scalar(a: TwoIndexField, gamma: float, rho: float) -> float:
    """Vectorised second-difference Holder sup for scalar two-index fields."""
    pts = a.grid.points
    m = len(pts)
    dense = np.zeros((m, m), dtype=complex)
    for (i, j), v in a.values.items():
        dense[i, j] = v
    best = 0.0
    for u in range(1, m - 1):
        i = np.arange(u)
        j = np.arange(u + 1, m)
        num = np.abs(dense[np.ix_(i, j)] - dense[u, j][None, :] - dense[i, u][:, None])
        den = ((pts[u] - pts[i]) ** gamma)[:, None] * ((pts[j] - pts[u]) ** rho)[None, :]
        best = max(best, float(np.max(num / den)))
    return best


def _levels_of(grid: TimeGrid):
    if not grid.is_dyadic:
        raise SewingError("sewing requires a dyadic grid")
    return grid.dyadic_level


def _delta_exponent_check(germ: TwoIndexField, norm) -> None:
    """Estimate the decay order of the germ's second difference across the
    coarsest dyadic levels; an order <= 1 means sewing cannot converge.
    Second differences at machine-noise scale (additive germs) are skipped."""
    grid = germ.grid
    lvl = _levels_of(grid)
    if lvl < 2:
        return
    m = len(grid) - 1  # = 2^lvl intervals
    scale = max(norm(v) for v in germ.values.values())
    floor = 1e-12 * max(scale, 1e-300)
    levels, sups = [], []
    for ell in range(1, min(4, lvl) + 1):
        stride = m // 2**ell
        sup = 0.0
        idx = list(range(0, m + 1, stride))
        for a_i in range(len(idx) - 2):
            i, u, j = idx[a_i], idx[a_i + 1], idx[a_i + 2]
            v = germ.values[(i, j)] - germ.values[(u, j)] - germ.values[(i, u)]
            sup = max(sup, norm(v))
        if sup > floor:
            levels.append(ell)
            sups.append(sup)
    if len(levels) < 2:
        return
    # coarse levels can suffer accidental cancellation, so take the most
    # favorable consecutive-level slope; this only screens clearly bad germs
    orders = [np.log2(sups[i] / sups[i + 1]) / (levels[i + 1] - levels[i])
              for i in range(len(levels) - 1)]
    order = max(orders)
    if order <= 1.0 + 1e-9:
        raise SewingError(
            f"second-difference decay order {order:.3f} <= 1 at coarse levels; "
            "germ not sewable on this grid"
        )


def sew(germ: TwoIndexField, tol: float = 0.0, norm=_abs_norm,
        max_level: int = DEFAULT_MAX_LEVEL):
    """Sew a germ on a dyadic grid into an additive path plus a remainder.

    The path at t is the limit of Riemann sums of the germ over refining
    dyadic partitions of [0, t]; refinement proceeds level by level down to
    the grid spacing (or max_level). The remainder germ - delta(path) is the
    unique small counterpart of the germ's second difference and satisfies
    delta(remainder) = delta(germ) exactly on the grid.

    Returns (path, remainder): path is a list of values over grid points
    (path[0] = 0), remainder a TwoIndexField.
    """
    grid = germ.grid
    lvl = min(_levels_of(grid), max_level)
    _delta_exponent_check(germ, norm)
    m = len(grid) - 1

    def level_path(ell):
        stride = m // 2**ell
        idx = range(0, m + 1, stride)
        path = {0: None}
        acc = None
        prev = 0
        for j in list(idx)[1:]:
            step = germ.values[(prev, j)]
            acc = step if acc is None else acc + step
            path[j] = acc
            prev = j
        return path

    paths = [level_path(ell) for ell in range(lvl + 1)]
    diffs = []
    for ell in range(1, lvl + 1):
        coarse, fine = paths[ell - 1], paths[ell]
        d = 0.0
        for j, v in coarse.items():
            if v is None:
                continue
            d = max(d, norm(fine[j] - v))
        diffs.append(d)
    if len(diffs) >= 3 and diffs[-1] > tol:
        if diffs[-1] > diffs[-2] > diffs[-3]:
            raise SewingError(
                "successive dyadic refinements diverge "
                f"({diffs[-3]:.3e} -> {diffs[-2]:.3e} -> {diffs[-1]:.3e}); "
                "germ too rough or grid too coarse"
            )

    finest = paths[-1]
    zero = germ.values[(0, 1)] * 0.0
    path = [zero if finest[j] is None else finest[j] for j in range(m + 1)]
    remainder = TwoIndexField(
        grid, {(i, j): germ.values[(i, j)] - (path[j] - path[i]) for (i, j) in germ.values}
    )
    return path, remainder


def grr_functional(r_field: TwoIndexField, theta: float, p: float, norm=_abs_norm) -> float:
    """Double-integral size functional [iint (|R_ts| / |t-s|^theta)^p dt ds]^(1/p).

    Cell quadrature over the grid: each cell is averaged over its corners,
    skipping diagonal corners where the integrand is indeterminate (R
    vanishes there). Exact for integrands constant on each off-diagonal
    cell; diagonal cells carry an O(h^2) total bias.
    """
    if theta <= 0 or p < 1:
        raise ValueError("need theta > 0 and p >= 1")
    pts = r_field.grid.points
    mm = len(pts)

    dens = np.zeros((mm, mm))
    for (i, j), v in r_field.values.items():
        g = (norm(v) / (pts[j] - pts[i]) ** theta) ** p
        dens[i, j] = g
        dens[j, i] = g
    mask = ~np.eye(mm, dtype=bool)

    total = 0.0
    for i in range(mm - 1):
        for j in range(mm - 1):
            area = (pts[i + 1] - pts[i]) * (pts[j + 1] - pts[j])
            corners = [(i, j), (i, j + 1), (i + 1, j), (i + 1, j + 1)]
            vals = [dens[a, b] for a, b in corners if mask[a, b]]
            if vals:
                total += area * sum(vals) / len(vals)
    return total ** (1.0 / p)
