"""Time integrators for the twisted spectral flow.

The rough one-step scheme advances by the exact first- and second-order
operator increments; the spectrally truncated schemes integrate the
instantaneous twisted ODE with classical RK4, either bare (which fails to
converge as the cutoff grows) or with the resonant counter-term. A sewing
Picard iterator and an energy-norm window-restart driver round out the set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .spectral import SpectralCoeffs, FLNormParams, fl_norm, airy_evolve, project
from .increments import TimeGrid, TwoIndexField, holder_norm, sew
from .operators import (
    RegularityPair,
    OperatorSpec,
    in_region_d_prime,
    x_op,
    x2_op,
    xdot_op,
    gamma_correction,
)

__all__ = [
    "SolverConfig",
    "Trajectory",
    "ControlledTriple",
    "BlowUpError",
    "NonContractionError",
    "euler_solve",
    "galerkin_modified_solve",
    "galerkin_naive_solve",
    "compute_hamiltonian",
    "picard_iterate",
    "global_solve_l2",
    "l2_norm_sq",
    "write_trajectory_csv",
]

ROUGH_SCHEMES = ("euler", "picard", "stochastic_euler")


class BlowUpError(RuntimeError):
    """State norm exceeded the blow-up guard; carries the failure time."""

    def __init__(self, time, norm):
        super().__init__(f"blow-up guard tripped at t={time:.6g} (norm {norm:.3e})")
        self.time = time
        self.norm = norm


class NonContractionError(RuntimeError):
    """Picard distances grew repeatedly; the horizon exceeds the local window."""


@dataclass(frozen=True)
class SolverConfig:
    regularity: RegularityPair
    max_mode: int
    steps_per_unit: int = 128
    horizon: float = 1.0
    dt: float = 1e-2
    scheme: str = "euler"
    blowup_factor: float = 1e3

    def __post_init__(self):
        if self.max_mode < 1 or self.steps_per_unit < 1:
            raise ValueError("max_mode and steps_per_unit must be >= 1")
        if self.horizon <= 0 or self.dt <= 0:
            raise ValueError("horizon and dt must be positive")
        if self.scheme in ROUGH_SCHEMES:
            if self.regularity.gamma <= 1 / 3 or not in_region_d_prime(self.regularity):
                raise ValueError(
                    "rough schemes need gamma > 1/3 with (gamma, alpha) admissible "
                    "for the second-order operator"
                )

    @property
    def norm_params(self) -> FLNormParams:
        return self.regularity.norm_params


@dataclass(frozen=True)
class Trajectory:
    """States over a grid, tagged by frame: twisted v or physical u = U(t) v."""

    grid: TimeGrid
    states: tuple
    frame: str = "twisted"

    def __post_init__(self):
        if self.frame not in ("twisted", "physical"):
            raise ValueError("frame must be 'twisted' or 'physical'")
        if len(self.states) != len(self.grid):
            raise ValueError("one state per grid point required")
        object.__setattr__(self, "states", tuple(self.states))

    def to_physical(self) -> "Trajectory":
        if self.frame == "physical":
            return self
        states = [airy_evolve(v, t) for v, t in zip(self.states, self.grid.points)]
        return Trajectory(self.grid, states, "physical")

    def to_twisted(self) -> "Trajectory":
        if self.frame == "twisted":
            return self
        states = [airy_evolve(u, -t) for u, t in zip(self.states, self.grid.points)]
        return Trajectory(self.grid, states, "twisted")

    def state_at(self, t: float) -> SpectralCoeffs:
        i = int(np.argmin(np.abs(self.grid.points - t)))
        if not math.isclose(self.grid.points[i], t, rel_tol=0, abs_tol=1e-12):
            raise KeyError(f"{t} is not a grid time")
        return self.states[i]


def l2_norm_sq(f: SpectralCoeffs) -> float:
    """Squared spatial L2 norm: 2 pi sum over both mode signs of |f_hat|^2."""
    return float(4.0 * math.pi * np.sum(np.abs(f.coeffs) ** 2))


def write_trajectory_csv(traj: Trajectory, target) -> None:
    """Rows "t,k,re,im" for every grid time and positive mode."""
    own = isinstance(target, str)
    handle = open(target, "w") if own else target
    try:
        handle.write("t,k,re,im\n")
        for t, state in zip(traj.grid.points, traj.states):
            for k in range(1, state.max_mode + 1):
                c = state.coeffs[k - 1]
                handle.write(f"{t:.17g},{k},{c.real:.17g},{c.imag:.17g}\n")
    finally:
        if own:
            handle.close()


def _guard(norm_now: float, ref: float, factor: float, t: float):
    if ref > 0 and norm_now > factor * ref:
        raise BlowUpError(t, norm_now)


# ---------------------------------------------------------------------------
# rough one-step scheme


def euler_solve(v0: SpectralCoeffs, cfg: SolverConfig, t0: float = 0.0) -> Trajectory:
    """March v_i = v_{i-1} + X_{t_i t_{i-1}}(v_{i-1}) + X2_{t_i t_{i-1}}(v_{i-1})
    on the uniform grid t_i = t0 + i / steps_per_unit, states capped at the
    configured mode count. Raises BlowUpError past the guard threshold.
    """
    n = cfg.steps_per_unit
    steps = int(round(cfg.horizon * n))
    if steps < 1:
        raise ValueError("horizon too short for the step count")
    grid = TimeGrid.uniform(steps / n, steps, start=t0)
    npar = cfg.norm_params
    v = project(v0, cfg.max_mode).padded(cfg.max_mode)
    ref = fl_norm(v, npar)
    states = [v]
    for i in range(1, steps + 1):
        s = t0 + (i - 1) / n
        t = t0 + i / n
        spec = OperatorSpec(cfg.max_mode, s, t)
        hat, breve = x2_op(v, v, v, spec)
        v = v + x_op(v, v, spec) + hat + breve
        _guard(fl_norm(v, npar), ref, cfg.blowup_factor, t)
        states.append(v)
    return Trajectory(grid, states, "twisted")


# ---------------------------------------------------------------------------
# truncated instantaneous schemes (RK4)


def _rk4(f, v, t, dt):
    k1 = f(t, v)
    k2 = f(t + dt / 2, v + (dt / 2) * k1)
    k3 = f(t + dt / 2, v + (dt / 2) * k2)
    k4 = f(t + dt, v + dt * k3)
    return v + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def _galerkin_rhs(cfg: SolverConfig, corrected: bool):
    nn = cfg.max_mode

    def rhs(t, v):
        out = xdot_op(v, v, t, m_out=nn, truncation=nn)
        if corrected:
            u = airy_evolve(v, t)
            g = gamma_correction(u, u, u, nn, m_out=nn)
            out = out + airy_evolve(g, -t)
        return out

    return rhs


def _galerkin_solve(u0: SpectralCoeffs, cfg: SolverConfig, corrected: bool) -> Trajectory:
    steps = max(1, int(round(cfg.horizon / cfg.dt)))
    dt = cfg.horizon / steps
    grid = TimeGrid.uniform(cfg.horizon, steps)
    npar = cfg.norm_params
    v = project(u0, cfg.max_mode).padded(cfg.max_mode)
    ref = fl_norm(v, npar)
    rhs = _galerkin_rhs(cfg, corrected)
    states = [v]
    for i in range(steps):
        v = _rk4(rhs, v, i * dt, dt)
        _guard(fl_norm(v, npar), ref, cfg.blowup_factor, (i + 1) * dt)
        states.append(v)
    return Trajectory(grid, states, "twisted")


def galerkin_modified_solve(u0: SpectralCoeffs, cfg: SolverConfig) -> Trajectory:
    """RK4 integration of the twisted cutoff ODE with the resonant counter-term:
    dv/dt = Xdot^{(N)}_t(v, v) + U(-t) Gamma^{(N)}(U(t) v, U(t) v, U(t) v)."""
    return _galerkin_solve(u0, cfg, corrected=True)


def galerkin_naive_solve(u0: SpectralCoeffs, cfg: SolverConfig) -> Trajectory:
    """Bare spectral truncation: dv/dt = Xdot^{(N)}_t(v, v). Kept as the
    non-convergent baseline the counter-term repairs."""
    return _galerkin_solve(u0, cfg, corrected=False)


# ---------------------------------------------------------------------------
# Hamiltonian of the corrected truncated flow


def _hamiltonian_terms(u: SpectralCoeffs, level: int):
    """(quadratic, cubic, quartic) pieces as complex numbers."""
    full = u.full_array()
    n = u.max_mode
    ks = np.arange(1, level + 1)
    quad = complex(np.sum(ks.astype(float) ** 2 * np.abs(u.coeffs[:level]) ** 2))

    cubic = 0j
    k2 = np.arange(-level, level + 1)
    for k1 in range(-level, level + 1):
        if k1 == 0:
            continue
        k3 = -k1 - k2
        ok = (k2 != 0) & (k3 != 0) & (np.abs(k3) <= level)
        cubic += full[k1 + n] * np.sum(full[k2[ok] + n] * full[k3[ok] + n])
    cubic /= 6.0

    def rho_tilde(k):
        return full[-k + n] * full[k + n] / (1j * k)

    quart = 0j
    k1 = np.arange(-level, level + 1)
    rt1 = np.array([rho_tilde(x) if x != 0 else 0 for x in k1])
    for k in range(-level, level + 1):
        if k == 0:
            continue
        far = (k1 != 0) & (np.abs(k - k1) > level)
        # the two resonance branches coincide where k1 = -k: half weight there
        w = np.where(k1 == -k, 0.5, 1.0)
        quart += rho_tilde(k) * np.sum(np.where(far, w * rt1, 0.0))
    quart *= -1.0 / 12.0
    return quad, cubic, quart


def compute_hamiltonian(u: SpectralCoeffs, level: int) -> float:
    """Conserved energy of the counter-term-corrected truncated flow:

      sum_{k=1..N} k^2 |u(k)|^2
      + (1/6) sum_{k1+k2+k3=0, 0<|ki|<=N} u(k1) u(k2) u(k3)
      - (1/12) sum_{0<|k|,|k1|<=N, |k-k1|>N} w [u(-k)u(k)/(ik)] [u(-k1)u(k1)/(ik1)]

    with w = 1/2 on the pairs k1 = -k (where the two resonance branches of
    the counter-term coincide) and w = 1 otherwise. The state must be
    supported on modes |k| <= N.
    """
    if level < 1:
        raise ValueError("level must be >= 1")
    if u.max_mode > level and np.any(u.coeffs[level:] != 0):
        raise ValueError(f"state carries modes above the cutoff {level}")
    quad, cubic, quart = _hamiltonian_terms(u, min(level, u.max_mode))
    total = quad + cubic + quart
    if abs(total.imag) > 1e-10 * (1.0 + abs(total)):
        raise ArithmeticError(f"energy acquired an imaginary part: {total.imag:.3e}")
    return float(total.real)


# ---------------------------------------------------------------------------
# sewing Picard iterator


@dataclass(frozen=True)
class ControlledTriple:
    """Grid path y, its quadratic-germ derivative path y', and the
    second-order remainder field y_sharp with delta y = X(y', y') + y_sharp."""

    grid: TimeGrid
    y: tuple
    y_prime: tuple
    y_sharp: TwoIndexField

    def __post_init__(self):
        object.__setattr__(self, "y", tuple(self.y))
        object.__setattr__(self, "y_prime", tuple(self.y_prime))
        if len(self.y) != len(self.grid) or len(self.y_prime) != len(self.grid):
            raise ValueError("paths must match the grid")

    def defect(self) -> float:
        """Max norm of delta y - X(y', y') - y_sharp over grid pairs."""
        pts = self.grid.points
        worst = 0.0
        nmode = max(st.max_mode for st in self.y)
        for (i, j), sharp in self.y_sharp.pairs():
            spec = OperatorSpec(2 * nmode, pts[i], pts[j])
            r = (self.y[j] - self.y[i]) - x_op(self.y_prime[i], self.y_prime[i], spec) - sharp
            worst = max(worst, float(np.max(np.abs(r.coeffs))))
        return worst


def _pair_fields(y, grid, max_mode):
    """Germ X + X2 and the bare X2 field over all grid pairs, germ evaluated
    at the left state."""
    pts = grid.points
    germ, x2f = {}, {}
    for i in range(len(pts)):
        yi = y[i]
        for j in range(i + 1, len(pts)):
            spec = OperatorSpec(max_mode, pts[i], pts[j])
            hat, breve = x2_op(yi, yi, yi, spec)
            x2v = hat + breve
            germ[(i, j)] = x_op(yi, yi, spec) + x2v
            x2f[(i, j)] = x2v
    return TwoIndexField(grid, germ), TwoIndexField(grid, x2f)


def picard_iterate(v0: SpectralCoeffs, cfg: SolverConfig, iterations: int,
                   eta: float | None = None):
    """Fixed-point iteration of the sewing map on the grid.

    Each sweep sews the germ X(y, y) + X2(y, y, y) of the current path into a
    new path z (so delta z = germ - remainder), sets z' = y and
    z_sharp = X2(y, y, y) - remainder, and measures the controlled-triple
    distance to the previous sweep: |y0 - z0| + Holder(eta) norms of the path
    and derivative differences + Holder(2 eta) norm of the remainder
    difference. Raises NonContractionError after three consecutive distance
    increases. Returns (triple, distances).
    """
    steps = int(round(cfg.horizon * cfg.steps_per_unit))
    level = int(round(math.log2(steps)))
    if 2**level != steps:
        raise ValueError("picard iteration needs a dyadic step count")
    grid = TimeGrid.dyadic(cfg.horizon, level)
    if eta is None:
        eta = cfg.regularity.gamma
    npar = cfg.norm_params
    nrm = lambda f: fl_norm(f, npar)
    nn = cfg.max_mode

    v0 = project(v0, nn).padded(nn)
    y = [v0] * len(grid)
    y_prime = [v0] * len(grid)
    y_sharp = TwoIndexField(grid, {(i, j): SpectralCoeffs.zeros(nn)
                                   for i in range(len(grid)) for j in range(i + 1, len(grid))})

    distances = []
    grow_streak = 0
    for _ in range(iterations):
        germ, x2f = _pair_fields(y, grid, nn)
        path, remainder = sew(germ, tol=0.0, norm=nrm)
        z = [v0 + p for p in path]
        z_prime = list(y)
        z_sharp = x2f - remainder

        d = holder_norm(_diff_field(z, y, grid), eta, nrm) \
            + holder_norm(_diff_field(z_prime, y_prime, grid), eta, nrm) \
            + holder_norm(z_sharp - y_sharp, 2 * eta, nrm) \
            + nrm(z[0] - y[0])
        distances.append(d)
        if len(distances) >= 2 and distances[-1] > distances[-2]:
            grow_streak += 1
            if grow_streak >= 3:
                raise NonContractionError(
                    "picard distances grew three times in a row; shrink the horizon"
                )
        else:
            grow_streak = 0
        y, y_prime, y_sharp = z, z_prime, z_sharp

    return ControlledTriple(grid, y, y_prime, y_sharp), distances


def _diff_field(a, b, grid):
    vals = {}
    for i in range(len(grid)):
        for j in range(i + 1, len(grid)):
            vals[(i, j)] = (a[j] - a[i]) - (b[j] - b[i])
    return TwoIndexField(grid, vals)


# ---------------------------------------------------------------------------
# global driver with energy-frame restarts


def global_solve_l2(v0: SpectralCoeffs, cfg: SolverConfig, horizon: float,
                    min_window: float | None = None) -> Trajectory:
    """Chain the rough one-step scheme over windows, restarting from each
    endpoint; the window halves whenever the blow-up guard trips. Requires
    the flat energy frame (alpha = 0, p = 2) where the flow norm is constant.
    """
    if cfg.regularity.alpha != 0.0 or cfg.regularity.p != 2:
        raise ValueError("global continuation runs in the alpha=0, p=2 frame")
    if min_window is None:
        min_window = cfg.horizon / 256
    window = cfg.horizon
    t_cur = 0.0
    v = v0
    points = [0.0]
    states = [project(v0, cfg.max_mode).padded(cfg.max_mode)]
    while t_cur < horizon - 1e-12:
        span = min(window, horizon - t_cur)
        span = max(span, 1.0 / cfg.steps_per_unit)
        try:
            leg = euler_solve(v, _with_horizon(cfg, span), t0=t_cur)
        except BlowUpError:
            window = window / 2
            if window < min_window:
                raise
            continue
        points.extend(leg.grid.points[1:])
        states.extend(leg.states[1:])
        v = leg.states[-1]
        t_cur = float(leg.grid.points[-1])
    return Trajectory(TimeGrid(np.asarray(points)), states, "twisted")


def _with_horizon(cfg: SolverConfig, horizon: float) -> SolverConfig:
    return SolverConfig(cfg.regularity, cfg.max_mode, cfg.steps_per_unit,
                        horizon, cfg.dt, cfg.scheme, cfg.blowup_factor)
