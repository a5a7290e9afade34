"""Additive white-in-time spectral forcing for the twisted flow.

The forcing is diagonal in frequency: mode k is driven by lambda_k times a
complex Brownian motion, with the negative-mode increments conjugate to the
positive ones so every sample path is a real field. The random first-order
operator applies the closed-form bilinear operator against the noise
increment plus a left-point stochastic correction sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import SpectralCoeffs, FLNormParams, fl_norm
from .increments import TimeGrid
from .operators import OperatorSpec, x_op, x2_op
from .solver import SolverConfig, Trajectory, BlowUpError, _guard

__all__ = [
    "NoiseSpec",
    "NoisePath",
    "sample_noise",
    "xw_op",
    "stochastic_euler_solve",
    "lambda_profile",
]


@dataclass(frozen=True)
class NoiseSpec:
    """Per-mode forcing weights lambda_k for k >= 1 (mode 0 unforced,
    lambda_{-k} = lambda_k) and the norm frame they are measured in."""

    lambdas: np.ndarray
    params: FLNormParams

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float)
        if lam.ndim != 1 or lam.size == 0:
            raise ValueError("lambdas must be a 1-d array for modes 1..K")
        object.__setattr__(self, "lambdas", lam)
        if not np.isfinite(self.weighted_norm()):
            raise ValueError("forcing weights have infinite weighted norm")

    @property
    def max_mode(self) -> int:
        return self.lambdas.size

    def weighted_norm(self) -> float:
        """sum over both signs of |k|^(alpha p) |lambda_k|^p (finite by construction
        at any finite cutoff; asserted anyway)."""
        k = np.arange(1, self.max_mode + 1, dtype=float)
        p = self.params.p
        if math.isinf(p):
            return float(np.max(k**self.params.alpha * np.abs(self.lambdas), initial=0.0))
        return float(2.0 * np.sum(k ** (self.params.alpha * p) * np.abs(self.lambdas) ** p))


def lambda_profile(max_mode: int, beta: float, scale: float = 1.0) -> np.ndarray:
    """Power-law weights lambda_k = scale * k^(-beta)."""
    k = np.arange(1, max_mode + 1, dtype=float)
    return scale * k ** (-beta)


class NoisePath:
    """Sampled complex Brownian mode increments on a uniform grid.

    increments[m, k-1] is the mode-k increment over [t_m, t_m+1] for k >= 1;
    negative modes are the conjugates. Increments over disjoint intervals are
    independent draws with E|increment|^2 = lambda_k^2 * dt.
    """

    def __init__(self, grid: TimeGrid, increments: np.ndarray, seed: int | None = None):
        inc = np.asarray(increments, dtype=complex)
        if inc.shape[0] != len(grid) - 1:
            raise ValueError("one increment row per grid interval required")
        self.grid = grid
        self.increments = inc
        self.seed = seed

    @property
    def max_mode(self) -> int:
        return self.increments.shape[1]

    def _index(self, t: float) -> int:
        pts = self.grid.points
        i = int(np.argmin(np.abs(pts - t)))
        if not math.isclose(pts[i], t, rel_tol=0.0, abs_tol=1e-10):
            raise KeyError(f"{t} is not a noise grid time")
        return i

    def delta(self, s: float, t: float) -> SpectralCoeffs:
        """Accumulated increment over grid-aligned [s, t]."""
        i, j = self._index(s), self._index(t)
        if j < i:
            raise ValueError("need s <= t")
        if j == i:
            return SpectralCoeffs.zeros(self.max_mode)
        return SpectralCoeffs(np.sum(self.increments[i:j], axis=0))

    def value_at(self, t: float) -> SpectralCoeffs:
        """Path value w_t with w at the grid start set to zero."""
        return self.delta(self.grid.points[0], t)

    def coarsen(self, factor: int) -> "NoisePath":
        """Sum consecutive increments in groups, halving the grid `factor`-fold
        in total; couples every resolution to the same sample path."""
        m = self.increments.shape[0]
        if factor < 1 or m % factor:
            raise ValueError("factor must divide the interval count")
        pts = self.grid.points[::factor]
        inc = self.increments.reshape(m // factor, factor, -1).sum(axis=1)
        lvl = self.grid.dyadic_level
        sub = None if lvl is None else lvl - int(round(math.log2(factor)))
        return NoisePath(TimeGrid(pts, dyadic_level=sub), inc, self.seed)


def sample_noise(spec: NoiseSpec, grid: TimeGrid, seed: int) -> NoisePath:
    """Draw the mode increments: lambda_k (g1 + i g2) sqrt(dt / 2) with g1, g2
    independent standard normals per interval. Deterministic in the seed."""
    dts = np.diff(grid.points)
    if not np.allclose(dts, dts[0]):
        raise ValueError("noise sampling requires a uniform grid")
    rng = np.random.default_rng(seed)
    m, kk = dts.size, spec.max_mode
    g = rng.standard_normal((m, kk, 2))
    inc = (g[..., 0] + 1j * g[..., 1]) * np.sqrt(dts[:, None] / 2.0) * spec.lambdas[None, :]
    return NoisePath(grid, inc, seed)


def xw_op(phi: SpectralCoeffs, w: NoisePath, s: float, t: float,
          m_out: int | None = None) -> SpectralCoeffs:
    """Random first-order operator over grid-aligned [s, t]:

        X_{ts}(phi, delta w_{ts}) - sum_j X_{tau_j s}(phi, delta w_j)

    with a left-point sum over the noise subintervals of [s, t] (the first
    term of the sum vanishes since X_{ss} = 0). Its second difference equals
    X_{tu}(phi, delta w_{us}) exactly at grid resolution.
    """
    if m_out is None:
        m_out = phi.max_mode + w.max_mode
    i, j = w._index(s), w._index(t)
    pts = w.grid.points
    out = x_op(phi, w.delta(s, t), OperatorSpec(m_out, s, t))
    for m in range(i + 1, j):
        tau = pts[m]
        step = SpectralCoeffs(w.increments[m])
        out = out - x_op(phi, step, OperatorSpec(m_out, s, tau))
    return out


def stochastic_euler_solve(v0: SpectralCoeffs, spec: NoiseSpec, cfg: SolverConfig,
                           seed: int, noise: NoisePath | None = None) -> Trajectory:
    """Rough one-step scheme with additive forcing:

        v_i = v_{i-1} + X(v_{i-1}) + delta w + X2(v_{i-1}) + X^w(v_{i-1})

    per solver step. The noise path defaults to a fresh sample on the solver
    grid; passing a finer path (whose grid refines the solver grid) puts the
    left-point correction sum of X^w to work and couples refinement studies
    to one sample. Deterministic given the seed.
    """
    from .spectral import project

    n = cfg.steps_per_unit
    steps = int(round(cfg.horizon * n))
    grid = TimeGrid.uniform(steps / n, steps)
    if noise is None:
        noise = sample_noise(spec, grid, seed)
    ratio = (len(noise.grid) - 1) / steps
    if ratio != int(ratio):
        raise ValueError("noise grid must refine the solver grid")
    npar = cfg.norm_params
    nn = cfg.max_mode
    v = project(v0, nn).padded(nn)
    ref = max(fl_norm(v, npar), fl_norm(SpectralCoeffs(spec.lambdas.astype(complex)), npar))
    states = [v]
    for i in range(1, steps + 1):
        s = (i - 1) / n
        t = i / n
        op = OperatorSpec(nn, s, t)
        hat, breve = x2_op(v, v, v, op)
        dw = project(noise.delta(s, t), nn).padded(nn)
        v = v + x_op(v, v, op) + dw + hat + breve + project(xw_op(v, noise, s, t, m_out=nn), nn)
        _guard(fl_norm(v, npar), ref, cfg.blowup_factor, t)
        states.append(v)
    return Trajectory(grid, states, "twisted")
