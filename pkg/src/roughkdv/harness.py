"""Experiment harness: identity suites, convergence and conservation studies,
noise studies, order fitting, and deterministic CSV reports.

Configuration is a flat "key = value" text file (lists comma-separated) so
any tooling can parse or generate it. Every report row carries the full
parameter tuple, and identical config + seed reproduces byte-identical CSV.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import math
from dataclasses import dataclass, field, fields

import numpy as np
from scipy.stats import linregress

from .spectral import (
    SpectralCoeffs, FLNormParams, fl_norm, l2_inner, random_state, random_unit_state,
)
from .increments import TimeGrid, TwoIndexField, delta_path, holder_norm
from .operators import (
    RegularityPair, OperatorSpec, x_op, x2_op, x3a_op, x3b_op, gamma_correction,
)
from .solver import (
    SolverConfig, Trajectory, euler_solve, galerkin_modified_solve,
    galerkin_naive_solve, compute_hamiltonian, l2_norm_sq, write_trajectory_csv,
)
from .stochastic import NoiseSpec, NoisePath, sample_noise, stochastic_euler_solve, lambda_profile

__all__ = [
    "ExperimentConfig",
    "FitResult",
    "Report",
    "fit_loglog",
    "run_identity_suite",
    "run_convergence_study",
    "run_conservation_study",
    "run_noise_study",
    "run_solve",
]

CSV_COLUMNS = ("experiment", "item", "gamma", "alpha", "p", "N", "n", "dt",
               "seed", "value", "target", "passed")


@dataclass
class ExperimentConfig:
    """Flat experiment configuration; every field can be set in the config file."""

    gamma: float = 0.4
    alpha: float = 0.0
    p: float = 2.0
    max_mode: int = 32
    steps_per_unit: int = 128
    horizon: float = 1.0
    dt: float = 0.01
    trials: int = 100
    seed: int = 0
    threads: int = 1
    n_values: tuple = (64, 128, 256, 512)
    N_values: tuple = (8, 16, 32, 64)
    dt_values: tuple = (0.04, 0.02, 0.01, 0.005)
    seeds: tuple = tuple(range(8))
    noise_beta: float = 1.0
    noise_modes: int = 8
    noise_seeds: int = 1000
    out: str = "report.csv"
    # tolerances and fit targets
    tol_chen: float = 1e-12
    tol_dx2: float = 1e-10
    tol_l2_pairing: float = 1e-10
    tol_x3: float = 1e-6
    tol_gamma_identity: float = 1e-8
    tol_l2_drift_rel: float = 1e-2
    order_margin: float = 0.1
    rk4_order_window: float = 0.5

    def __post_init__(self):
        for name in ("n_values", "N_values", "dt_values", "seeds"):
            if not getattr(self, name):
                raise ValueError(f"{name} must be non-empty")
        for f_ in fields(self):
            if f_.name.startswith("tol_") and getattr(self, f_.name) <= 0:
                raise ValueError(f"{f_.name} must be positive")

    @property
    def regularity(self) -> RegularityPair:
        return RegularityPair(self.gamma, self.alpha, self.p)

    @property
    def norm_params(self) -> FLNormParams:
        return FLNormParams(self.alpha, self.p)

    def solver_config(self, **overrides) -> SolverConfig:
        kw = dict(regularity=self.regularity, max_mode=self.max_mode,
                  steps_per_unit=self.steps_per_unit, horizon=self.horizon,
                  dt=self.dt, scheme="euler")
        kw.update(overrides)
        return SolverConfig(**kw)

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        known = {f_.name: f_ for f_ in fields(cls)}
        values = {}
        with open(path) as handle:
            for lineno, raw in enumerate(handle, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{lineno}: expected 'key = value'")
                key, _, val = line.partition("=")
                key, val = key.strip(), val.strip()
                if key not in known:
                    raise ValueError(f"{path}:{lineno}: unknown key '{key}'")
                values[key] = _coerce(val, known[key])
        return cls(**values)


def _coerce(text: str, field_spec):
    default = field_spec.default
    if isinstance(default, tuple) or field_spec.name in ("n_values", "N_values", "dt_values", "seeds"):
        parts = [p.strip() for p in text.split(",") if p.strip()]
        if field_spec.name == "dt_values":
            return tuple(float(p) for p in parts)
        return tuple(int(p) if float(p) == int(float(p)) else float(p) for p in parts)
    if isinstance(default, bool):
        return text.lower() in ("1", "true", "yes")
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text) if text.lower() != "inf" else math.inf
    return text


@dataclass(frozen=True)
class FitResult:
    """Least-squares line through (log x, log y) with a pass interval."""

    slope: float
    intercept: float
    residual: float
    passed: bool
    target_lo: float
    target_hi: float
    dropped_coarsest: bool = False


def fit_loglog(xs, ys, target=(-math.inf, math.inf), drop_threshold=0.10) -> FitResult:
    """Fit log y against log x; when the relative fit residual exceeds
    `drop_threshold` and at least five points are available, the two
    coarsest points are dropped (pre-asymptotic pollution) and that is
    recorded on the result. Needs at least three points.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 3:
        raise ValueError("order fitting needs at least 3 points")
    if np.any(ys <= 0):
        ys = np.maximum(ys, 1e-300)

    def do_fit(x, y):
        r = linregress(np.log(x), np.log(y))
        pred = r.slope * np.log(x) + r.intercept
        rms = float(np.sqrt(np.mean((np.log(y) - pred) ** 2)))
        spread = max(abs(r.slope) * (np.log(x).max() - np.log(x).min()), 1e-12)
        return r, rms / spread

    order = np.argsort(xs)
    xs, ys = xs[order], ys[order]
    r, rel = do_fit(xs, ys)
    dropped = False
    if rel > drop_threshold and xs.size >= 5:
        r, rel = do_fit(xs[2:], ys[2:])
        dropped = True
    lo, hi = target
    return FitResult(float(r.slope), float(r.intercept), rel,
                     bool(lo <= r.slope <= hi), lo, hi, dropped)


@dataclass
class Report:
    experiment: str
    rows: list = field(default_factory=list)

    def add(self, item, value, target="", passed=True, *, gamma="", alpha="", p="",
            N="", n="", dt="", seed=""):
        self.rows.append({
            "experiment": self.experiment, "item": item, "gamma": gamma,
            "alpha": alpha, "p": p, "N": N, "n": n, "dt": dt, "seed": seed,
            "value": value, "target": target, "passed": bool(passed),
        })

    @property
    def passed(self) -> bool:
        return all(r["passed"] for r in self.rows)

    def write_csv(self, target) -> None:
        own = isinstance(target, str)
        handle = open(target, "w") if own else target
        try:
            handle.write(",".join(CSV_COLUMNS) + "\n")
            key = lambda r: tuple(str(r[c]) for c in CSV_COLUMNS[:9])
            for row in sorted(self.rows, key=key):
                handle.write(",".join(_fmt(row[c]) for c in CSV_COLUMNS) + "\n")
        finally:
            if own:
                handle.close()


def _fmt(v):
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def _rel_residual(got: SpectralCoeffs, want: SpectralCoeffs) -> float:
    n = max(got.max_mode, want.max_mode)
    a, b = got.padded(n).coeffs, want.padded(n).coeffs
    scale = max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-300)
    return float(np.max(np.abs(a - b)) / scale)


def _pool_map(fn, items, threads):
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# identity suite


def run_identity_suite(cfg: ExperimentConfig) -> Report:
    """Evaluate the algebraic operator identities on randomized inputs and
    report max relative residuals against the configured tolerances."""
    rep = Report("identities")
    rng = np.random.default_rng(cfg.seed)
    tags = dict(gamma=cfg.gamma, alpha=cfg.alpha, p=cfg.p, seed=cfg.seed)

    # additivity of the first-order family in its time pair
    worst = 0.0
    nn = 32
    for _ in range(cfg.trials):
        f1, f2 = random_state(nn, rng), random_state(nn, rng)
        s, u, t = np.sort(rng.uniform(0.0, 1.0, 3))
        full = x_op(f1, f2, OperatorSpec(2 * nn, s, t))
        parts = x_op(f1, f2, OperatorSpec(2 * nn, u, t)) + x_op(f1, f2, OperatorSpec(2 * nn, s, u))
        worst = max(worst, _rel_residual(full, parts))
    rep.add("chen_relation", worst, cfg.tol_chen, worst <= cfg.tol_chen, N=nn, **tags)

    # second difference of the second-order family
    worst = 0.0
    nn = 16
    for _ in range(cfg.trials):
        f1, f2, f3 = (random_state(nn, rng) for _ in range(3))
        s, u, t = np.sort(rng.uniform(0.0, 1.0, 3))
        cap = 3 * nn
        x2 = lambda a, b: sum(x2_op(f1, f2, f3, OperatorSpec(cap, a, b)))
        delta = x2(s, t) - x2(u, t) - x2(s, u)
        inner = x_op(f2, f3, OperatorSpec(2 * nn, s, u))
        want = 2.0 * x_op(f1, inner, OperatorSpec(cap, u, t))
        worst = max(worst, _rel_residual(delta, want))
    rep.add("second_order_delta", worst, cfg.tol_dx2, worst <= cfg.tol_dx2, N=nn, **tags)

    # energy pairings
    worst1 = worst2 = 0.0
    nn = 32
    for _ in range(cfg.trials):
        phi = random_state(nn, rng)
        s, t = np.sort(rng.uniform(0.0, 1.0, 2))
        xv = x_op(phi, phi, OperatorSpec(2 * nn, s, t))
        hat, breve = x2_op(phi, phi, phi, OperatorSpec(3 * nn, s, t))
        scale = max(l2_inner(xv, xv), 1e-300)
        worst1 = max(worst1, abs(l2_inner(phi, xv)) / math.sqrt(
            max(l2_norm_sq(phi) * l2_norm_sq(xv), 1e-300)))
        worst2 = max(worst2, abs(2.0 * l2_inner(phi, hat + breve) + l2_inner(xv, xv)) / scale)
    rep.add("pairing_first_order", worst1, cfg.tol_l2_pairing,
            worst1 <= cfg.tol_l2_pairing, N=nn, **tags)
    rep.add("pairing_second_order", worst2, cfg.tol_l2_pairing,
            worst2 <= cfg.tol_l2_pairing, N=nn, **tags)

    # third-order second differences (quadrature-limited)
    nn = 4
    worst_a = worst_b = 0.0
    for _ in range(max(2, cfg.trials // 25)):
        q = [random_state(nn, rng) for _ in range(4)]
        s, u, t = np.sort(rng.uniform(0.0, 0.5, 3))
        cap = 4 * nn
        a_ts = x3a_op(*q, OperatorSpec(cap, s, t))
        a_tu = x3a_op(*q, OperatorSpec(cap, u, t))
        a_us = x3a_op(*q, OperatorSpec(cap, s, u))
        x2_us = sum(x2_op(q[1], q[2], q[3], OperatorSpec(3 * nn, s, u)))
        x_us = x_op(q[2], q[3], OperatorSpec(2 * nn, s, u))
        want = x_op(q[0], x2_us, OperatorSpec(cap, u, t)) \
            + sum(x2_op(q[0], q[1], x_us, OperatorSpec(cap, u, t)))
        worst_a = max(worst_a, _rel_residual(a_ts - a_tu - a_us, want))

        b_ts = x3b_op(*q, OperatorSpec(cap, s, t))
        b_tu = x3b_op(*q, OperatorSpec(cap, u, t))
        b_us = x3b_op(*q, OperatorSpec(cap, s, u))
        pp = x_op(q[0], q[1], OperatorSpec(2 * nn, s, u))
        rr = x_op(q[2], q[3], OperatorSpec(2 * nn, s, u))
        want_b = x_op(pp, rr, OperatorSpec(cap, u, t)) \
            + 0.5 * sum(x2_op(pp, q[2], q[3], OperatorSpec(cap, u, t))) \
            + 0.5 * sum(x2_op(rr, q[0], q[1], OperatorSpec(cap, u, t)))
        worst_b = max(worst_b, _rel_residual(b_ts - b_tu - b_us, want_b))
    rep.add("third_order_delta_a", worst_a, cfg.tol_x3, worst_a <= cfg.tol_x3, N=nn, **tags)
    rep.add("third_order_delta_b", worst_b, cfg.tol_x3, worst_b <= cfg.tol_x3, N=nn, **tags)

    # counter-term identity: resonant part minus its dressing = (t-s) Gamma
    nn = 4
    worst = 0.0
    for _ in range(max(2, cfg.trials // 10)):
        f1, f2, f3 = (random_state(nn, rng) for _ in range(3))
        s, t = np.sort(rng.uniform(0.0, 1.0, 2))
        cap = 3 * nn
        _, breve_full = x2_op(f1, f2, f3, OperatorSpec(cap, s, t))
        _, breve_cut = x2_op(f1, f2, f3, OperatorSpec(cap, s, t, truncation=nn))
        want = (t - s) * gamma_correction(f1, f2, f3, nn, m_out=cap)
        worst = max(worst, _rel_residual(breve_full - breve_cut, want))
    rep.add("gamma_identity", worst, cfg.tol_gamma_identity,
            worst <= cfg.tol_gamma_identity, N=nn, **tags)
    return rep


# ---------------------------------------------------------------------------
# convergence study


def _desk_state(max_mode: int, top: int = 8) -> SpectralCoeffs:
    arr = np.zeros(max_mode, dtype=complex)
    for k in range(1, min(top, max_mode) + 1):
        arr[k - 1] = 1.0 / k
    return SpectralCoeffs(arr)


def _sup_common_diff(a: Trajectory, b: Trajectory, params: FLNormParams) -> float:
    """sup over shared grid times of the state difference norm (grids must nest)."""
    ratio = (len(b.grid) - 1) / (len(a.grid) - 1)
    r = int(round(ratio))
    if not math.isclose(ratio, r, rel_tol=1e-9) or r < 1:
        raise ValueError("grids do not nest")
    return max(fl_norm(a.states[i] - b.states[r * i], params) for i in range(len(a.grid)))


def run_convergence_study(cfg: ExperimentConfig) -> Report:
    """Step-doubling convergence of the rough one-step scheme against a fine
    reference, plus cutoff-doubling self-differences of the corrected
    truncated scheme and the cross-scheme gap as both refine."""
    rep = Report("converge")
    params = cfg.norm_params
    tags = dict(gamma=cfg.gamma, alpha=cfg.alpha, p=cfg.p, seed=cfg.seed)
    v0 = _desk_state(cfg.max_mode)

    n_values = tuple(sorted(cfg.n_values))
    n_ref = 8 * n_values[-1]
    solve = lambda n: euler_solve(v0, cfg.solver_config(steps_per_unit=n))
    runs = dict(zip(n_values, _pool_map(solve, n_values, cfg.threads)))
    reference = solve(n_ref)

    errs = []
    for n in n_values:
        err = _sup_common_diff(runs[n], reference, params)
        errs.append(err)
        rep.add("euler_error_vs_ref", err, "", True, N=cfg.max_mode, n=n, **tags)
    target_lo = 3 * cfg.gamma - 1 - cfg.order_margin
    fit = fit_loglog(n_values, errs, target=(-math.inf, math.inf))
    order = -fit.slope
    rep.add("euler_order", order, f">={target_lo:.3g}", order >= target_lo,
            N=cfg.max_mode, n=n_ref, **tags)

    for n_small in n_values[:-1]:
        if 2 * n_small in runs:
            d = _sup_common_diff(runs[n_small], runs[2 * n_small], params)
            rep.add("euler_self_diff", d, "", True, N=cfg.max_mode, n=n_small, **tags)

    # cutoff sweep of the corrected truncated scheme
    N_values = tuple(sorted(cfg.N_values))
    dt = cfg.dt
    gal = {}
    for nn in N_values:
        u0 = _desk_state(nn)
        gal[nn] = galerkin_modified_solve(u0, cfg.solver_config(max_mode=nn, dt=dt,
                                                                scheme="galerkin_modified"))
    self_diffs = []
    for nn in N_values[:-1]:
        if 2 * nn in gal:
            d = max(fl_norm(a - b, params) for a, b in zip(gal[nn].states, gal[2 * nn].states))
            self_diffs.append(d)
            rep.add("galerkin_self_diff", d, "", True, N=nn, dt=dt, **tags)
    decreasing = all(self_diffs[i + 1] < self_diffs[i] for i in range(len(self_diffs) - 1))
    rep.add("galerkin_self_diff_decreasing", int(decreasing), "strict", decreasing,
            N=N_values[-1], dt=dt, **tags)

    # cross-scheme gap with matched grids (dt = 1/n)
    gaps = []
    for nn, n in zip(N_values, n_values):
        u0 = _desk_state(min(nn, cfg.max_mode))
        g = galerkin_modified_solve(u0, cfg.solver_config(max_mode=nn, dt=1.0 / n,
                                                          scheme="galerkin_modified"))
        e = euler_solve(u0, cfg.solver_config(max_mode=nn, steps_per_unit=n))
        gap = max(fl_norm(a - b, params) for a, b in zip(g.states, e.states))
        gaps.append(gap)
        rep.add("galerkin_vs_euler_gap", gap, "", True, N=nn, n=n, **tags)
    gap_ok = all(gaps[i + 1] < gaps[i] for i in range(len(gaps) - 1))
    rep.add("galerkin_vs_euler_decreasing", int(gap_ok), "strict", gap_ok,
            N=N_values[-1], n=n_values[-1], **tags)
    return rep


# ---------------------------------------------------------------------------
# conservation study


def run_conservation_study(cfg: ExperimentConfig) -> Report:
    """Energy-norm drift of the rough scheme under step doubling and energy
    drift of the corrected truncated scheme under ODE-step halving."""
    rep = Report("conserve")
    if cfg.alpha != 0.0 or cfg.p != 2:
        raise ValueError("conservation study runs in the alpha=0, p=2 frame")
    tags = dict(gamma=cfg.gamma, alpha=cfg.alpha, p=cfg.p, seed=cfg.seed)
    v0 = _desk_state(cfg.max_mode)
    l2_init = l2_norm_sq(v0)

    n_values = tuple(sorted(cfg.n_values))
    solve = lambda n: euler_solve(v0, cfg.solver_config(steps_per_unit=n))
    drifts = []
    for n, traj in zip(n_values, _pool_map(solve, n_values, cfg.threads)):
        drift = abs(l2_norm_sq(traj.states[-1]) - l2_init)
        drifts.append(drift)
        rep.add("l2_drift", drift, "", True, N=cfg.max_mode, n=n, **tags)
    target_lo = 3 * cfg.gamma - 1 - cfg.order_margin
    fit = fit_loglog(n_values, drifts)
    order = -fit.slope
    rep.add("l2_drift_order", order, f">={target_lo:.3g}", order >= target_lo,
            N=cfg.max_mode, n=n_values[-1], **tags)
    rel_last = drifts[-1] / l2_init
    rep.add("l2_drift_rel_finest", rel_last, cfg.tol_l2_drift_rel,
            rel_last <= cfg.tol_l2_drift_rel, N=cfg.max_mode, n=n_values[-1], **tags)

    # energy drift of the corrected truncated flow, RK4 in dt
    nn = min(cfg.max_mode, 16)
    u0 = _desk_state(nn)
    h0 = compute_hamiltonian(u0, nn)
    dts = tuple(sorted(cfg.dt_values, reverse=True))
    hdrifts = []
    for dt in dts:
        traj = galerkin_modified_solve(u0, cfg.solver_config(
            max_mode=nn, dt=dt, horizon=min(cfg.horizon, 0.5), scheme="galerkin_modified"))
        u_end = traj.to_physical().states[-1]
        hdrifts.append(abs(compute_hamiltonian(u_end, nn) - h0))
        rep.add("hamiltonian_drift", hdrifts[-1], "", True, N=nn, dt=dt, **tags)
    fit = fit_loglog(dts, hdrifts)
    lo, hi = 4 - cfg.rk4_order_window, 4 + cfg.rk4_order_window
    rep.add("hamiltonian_drift_order", fit.slope, f"[{lo:.3g},{hi:.3g}]",
            lo <= fit.slope <= hi, N=nn, dt=dts[-1], **tags)
    return rep


# ---------------------------------------------------------------------------
# noise study


def run_noise_study(cfg: ExperimentConfig) -> Report:
    """Monte-Carlo covariance checks, a forcing-off equivalence check,
    frozen-path refinement, and Holder growth probes of the sampled noise."""
    rep = Report("noise")
    params = cfg.norm_params
    tags = dict(gamma=cfg.gamma, alpha=cfg.alpha, p=cfg.p)
    lam = lambda_profile(cfg.noise_modes, cfg.noise_beta)
    spec = NoiseSpec(lam, params)
    t_end = 1.0
    grid = TimeGrid.dyadic(t_end, 4)

    # per-mode variance of the path value at t_end across seeds
    n_mc = cfg.noise_seeds
    acc = np.zeros(cfg.noise_modes)
    weighted_sq = np.zeros(n_mc)
    for s_i in range(n_mc):
        path = sample_noise(spec, grid, cfg.seed + s_i)
        w_end = path.value_at(t_end)
        acc += np.abs(w_end.coeffs) ** 2
        weighted_sq[s_i] = fl_norm(w_end, FLNormParams(cfg.alpha, 2)) ** 2
    mean = acc / n_mc
    # |w|^2 is exponential with mean lambda^2 t: standard error = mean / sqrt(n)
    worst_z = 0.0
    for k in range(1, cfg.noise_modes + 1):
        expect = lam[k - 1] ** 2 * t_end
        se = expect / math.sqrt(n_mc)
        z = abs(mean[k - 1] - expect) / se
        worst_z = max(worst_z, z)
    rep.add("covariance_z_max", worst_z, "<=3", worst_z <= 3.0,
            N=cfg.noise_modes, n=n_mc, seed=cfg.seed, **tags)

    # weighted second moment of the path value, empirical standard error
    w_expect = t_end * 2.0 * np.sum((1.0 + np.arange(1, cfg.noise_modes + 1) ** 2)
                                    ** cfg.alpha * lam**2)
    se = float(np.std(weighted_sq, ddof=1)) / math.sqrt(n_mc)
    z = abs(float(np.mean(weighted_sq)) - w_expect) / se
    rep.add("weighted_moment_z", z, "<=3", z <= 3.0, N=cfg.noise_modes, n=n_mc,
            seed=cfg.seed, **tags)

    # forcing off reproduces the deterministic scheme bit for bit
    zero_spec = NoiseSpec(np.zeros(cfg.noise_modes), params)
    scfg = cfg.solver_config(steps_per_unit=32, horizon=0.25, scheme="stochastic_euler")
    v0 = _desk_state(cfg.max_mode)
    det = euler_solve(v0, cfg.solver_config(steps_per_unit=32, horizon=0.25))
    sto = stochastic_euler_solve(v0, zero_spec, scfg, seed=cfg.seed)
    identical = all(np.array_equal(a.coeffs, b.coeffs) for a, b in zip(det.states, sto.states))
    rep.add("zero_forcing_bit_identical", int(identical), "1", identical,
            N=cfg.max_mode, n=32, seed=cfg.seed, **tags)

    # frozen-path refinement: coarse solves against the finest, one sample
    fine_level = 8
    fine_grid = TimeGrid.dyadic(0.25, fine_level)
    fine_path = sample_noise(spec, fine_grid, cfg.seed)
    diffs = []
    finest_n = 2**fine_level * 4  # steps_per_unit for horizon 0.25
    ref = stochastic_euler_solve(v0, spec, cfg.solver_config(
        steps_per_unit=finest_n, horizon=0.25, scheme="stochastic_euler"),
        seed=cfg.seed, noise=fine_path)
    for lvl in (4, 5, 6):
        traj = stochastic_euler_solve(v0, spec, cfg.solver_config(
            steps_per_unit=2**lvl * 4, horizon=0.25, scheme="stochastic_euler"),
            seed=cfg.seed, noise=fine_path)
        d = _sup_common_diff(traj, ref, params)
        diffs.append(d)
        rep.add("frozen_path_diff", d, "", True, N=cfg.max_mode, n=2**lvl * 4,
                seed=cfg.seed, **tags)
    mono = all(diffs[i + 1] < diffs[i] for i in range(len(diffs) - 1))
    rep.add("frozen_path_monotone", int(mono), "1", mono, N=cfg.max_mode,
            n=finest_n, seed=cfg.seed, **tags)

    # Holder growth of the sampled increments under refinement, averaged over seeds
    for rho, factor, direction in ((0.45, 2.0, "below"), (0.55, 1.2, "above")):
        ratios = []
        for s_i in cfg.seeds:
            coarse_grid = TimeGrid.dyadic(1.0, 6)
            path = sample_noise(spec, coarse_grid, cfg.seed + 1000 + s_i)
            w_path = [path.value_at(t) for t in coarse_grid.points]
            h_fine = holder_norm(delta_path(w_path, coarse_grid), rho,
                                 lambda f: fl_norm(f, params))
            half = path.coarsen(2)
            w_half = [half.value_at(t) for t in half.grid.points]
            h_coarse = holder_norm(delta_path(w_half, half.grid), rho,
                                   lambda f: fl_norm(f, params))
            ratios.append(h_fine / h_coarse)
        avg = float(np.mean(ratios))
        ok = avg < factor if direction == "below" else avg > factor
        rep.add(f"holder_growth_rho_{rho}", avg,
                f"{'<' if direction == 'below' else '>'}{factor}", ok,
                N=cfg.noise_modes, seed=cfg.seed, **tags)
    return rep


# ---------------------------------------------------------------------------
# plain solve entry point


def run_solve(cfg: ExperimentConfig, trajectory_out: str | None = None) -> Report:
    """Run one configured solve and optionally export the trajectory CSV."""
    rep = Report("solve")
    tags = dict(gamma=cfg.gamma, alpha=cfg.alpha, p=cfg.p, seed=cfg.seed)
    v0 = _desk_state(cfg.max_mode)
    traj = euler_solve(v0, cfg.solver_config())
    params = cfg.norm_params
    rep.add("final_norm", fl_norm(traj.states[-1], params), "", True,
            N=cfg.max_mode, n=cfg.steps_per_unit, dt=cfg.dt, **tags)
    drift = abs(l2_norm_sq(traj.states[-1]) - l2_norm_sq(traj.states[0]))
    rep.add("l2_drift", drift, "", True, N=cfg.max_mode, n=cfg.steps_per_unit,
            dt=cfg.dt, **tags)
    if trajectory_out:
        write_trajectory_csv(traj, trajectory_out)
    return rep
