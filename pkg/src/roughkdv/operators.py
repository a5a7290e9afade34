"""Closed-form multiplier operators of the twisted KdV calculus.

All operators act on mean-zero Hermitian spectral states and are realised
as direct sums over integer frequencies (no transform grid), so indicator
sets and resonance conditions are exact. The first-order family x_op is
additive in its time pair; the second-order family x2_op splits into an
oscillatory part built from a closed-form double time integral and a
resonant part linear in t - s. Index conventions: output mode k, first
frequency k1, k2 = k - k1, and the inner pair (k21, k22) with
k21 + k22 = k2. The resonance set is where k*k1*k2 + k2*k21*k22 = 0,
equivalently {k21, k22} = {k, -k1}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.stats import linregress

from .spectral import SpectralCoeffs, FLNormParams, fl_norm, random_unit_state

__all__ = [
    "RegularityPair",
    "OperatorSpec",
    "alpha_star",
    "in_region_d",
    "in_region_d_prime",
    "m_integral",
    "xdot_op",
    "x_op",
    "x2_op",
    "gamma_correction",
    "x3a_op",
    "x3b_op",
    "multiplier_norm_bound",
    "operator_norm_estimate",
    "holder_growth_probe",
]


# ---------------------------------------------------------------------------
# admissible-regularity region


@dataclass(frozen=True)
class RegularityPair:
    """Holder exponent gamma in [0, 1/2], weight alpha, integrability p."""

    gamma: float
    alpha: float
    p: float

    def __post_init__(self):
        if not (0.0 <= self.gamma <= 0.5):
            raise ValueError(f"gamma must lie in [0, 1/2], got {self.gamma}")
        if not (self.p >= 1):
            raise ValueError(f"p must be >= 1, got {self.p}")

    @property
    def norm_params(self) -> FLNormParams:
        return FLNormParams(self.alpha, self.p)


def alpha_star(p: float) -> float:
    """Threshold weight below which the second-order operator is unbounded."""
    inv_p = 0.0 if math.isinf(p) else 1.0 / p
    return max(-inv_p, -0.5)


def in_region_d(r: RegularityPair) -> bool:
    """Membership in the admissible (gamma, alpha) region for the first-order
    operator, with separate branches for p <= 2 and p >= 2 (they agree at 2)."""
    g, a, p = r.gamma, r.alpha, r.p
    inv_p = 0.0 if math.isinf(p) else 1.0 / p
    if p >= 2:
        low = a >= -0.5 - inv_p + g and 0.0 <= g < 0.25
        high = a > -1.0 - inv_p + 3.0 * g and 0.25 <= g <= 0.5
    else:
        split = 1.0 / (2.0 * p)
        low = a >= -1.0 + g and 0.0 <= g < split
        high = a > -1.0 - inv_p + 3.0 * g and split <= g <= 0.5
    return bool(low or high)


def in_region_d_prime(r: RegularityPair) -> bool:
    """The smaller region where the second-order operator is also bounded."""
    return in_region_d(r) and r.alpha > alpha_star(r.p)


# ---------------------------------------------------------------------------
# closed-form time integrals


def m_integral(a, b, s: float, t: float):
    """Oscillatory double integral int_s^t int_s^sigma e^{ia sigma} e^{ib sigma1},
    minus its (t-s)/(ib) resonant linear part when a + b = 0.

    For a + b != 0:  (e^{i(a+b)s} - e^{i(a+b)t}) / (b(a+b))
                   + (e^{i(bs+at)} - e^{i(a+b)s}) / (ab).
    For a + b  = 0:  (1 - e^{ia(t-s)}) / a^2.
    Zero frequencies are rejected; callers exclude them by construction.
    """
    a_arr = np.asarray(a, dtype=float)
    b_arr = np.asarray(b, dtype=float)
    if np.any(a_arr == 0) or np.any(b_arr == 0):
        raise ValueError("m_integral requires a != 0 and b != 0")
    scalar = a_arr.ndim == 0 and b_arr.ndim == 0
    a_arr, b_arr = np.broadcast_arrays(np.atleast_1d(a_arr), np.atleast_1d(b_arr))
    out = np.empty(a_arr.shape, dtype=complex)
    apb = a_arr + b_arr
    res = apb == 0
    nr = ~res
    if nr.any():
        an, bn, pn = a_arr[nr], b_arr[nr], apb[nr]
        out[nr] = (np.exp(1j * pn * s) - np.exp(1j * pn * t)) / (bn * pn) \
            + (np.exp(1j * (bn * s + an * t)) - np.exp(1j * pn * s)) / (an * bn)
    if res.any():
        ar = a_arr[res]
        out[res] = (1.0 - np.exp(1j * ar * (t - s))) / ar**2
    return complex(out[()].item()) if scalar else out


# ---------------------------------------------------------------------------
# operator plans (index tables cached per shape)


@lru_cache(maxsize=64)
def _x_plan(n1: int, n2: int, m_out: int):
    rows = []
    k1 = np.arange(-n1, n1 + 1)
    for k in range(1, m_out + 1):
        k2 = k - k1
        ok = (k1 != 0) & (k2 != 0) & (np.abs(k2) <= n2)
        rows.append((k1[ok], k2[ok], (3 * k * k1[ok] * k2[ok]).astype(float)))
    return rows


@lru_cache(maxsize=16)
def _x2_plan(n_in: int, m_out: int):
    """Per output mode: flattened admissible (k1, k21) tables with phases,
    coefficients, gather indices and resonance / magnitude masks."""
    rows = []
    k1 = np.arange(-n_in, n_in + 1)
    k21 = np.arange(-n_in, n_in + 1)
    for k in range(1, m_out + 1):
        k2 = k - k1
        k22 = k2[:, None] - k21[None, :]
        ok = (k1[:, None] != 0) & (k2[:, None] != 0) & (k21[None, :] != 0) \
            & (k22 != 0) & (np.abs(k22) <= n_in)
        a = np.broadcast_to((-3 * k * k1 * k2)[:, None], ok.shape)
        b = -3 * k2[:, None] * k21[None, :] * k22
        coeff = np.broadcast_to((-0.5 * k * k2.astype(float))[:, None], ok.shape)
        i1 = np.broadcast_to((k1 + n_in)[:, None], ok.shape)
        i2 = np.broadcast_to((k21 + n_in)[None, :], ok.shape)
        i3 = np.clip(k22 + n_in, 0, 2 * n_in)
        mags = np.stack([
            np.broadcast_to(np.abs(k1)[:, None], ok.shape),
            np.broadcast_to(np.abs(k2)[:, None], ok.shape),
            np.broadcast_to(np.abs(k21)[None, :], ok.shape),
            np.abs(k22),
        ])
        sel = ok
        rows.append((
            a[sel].astype(float), b[sel].astype(float), coeff[sel],
            i1[sel], i2[sel], i3[sel],
            (a[sel] + b[sel] == 0),
            mags[:, sel],
        ))
    return rows


# ---------------------------------------------------------------------------
# operator surfaces


@dataclass(frozen=True)
class OperatorSpec:
    """Output mode cap, time pair, and optional spectral dressing level."""

    max_mode: int
    s: float
    t: float
    truncation: int | None = None

    def __post_init__(self):
        if self.s > self.t:
            raise ValueError("operator spec requires s <= t")
        if self.truncation is not None and self.truncation > self.max_mode:
            raise ValueError("truncation cannot exceed the output cap")


def _dressed_inputs(phis, trunc):
    if trunc is None:
        return phis
    from .spectral import project
    return [project(p, trunc) for p in phis]


def xdot_op(phi1: SpectralCoeffs, phi2: SpectralCoeffs, sigma: float,
            m_out: int | None = None, truncation: int | None = None) -> SpectralCoeffs:
    """Instantaneous twisted nonlinearity: mode k gets
    (ik/2) sum' e^{-3i k k1 k2 sigma} phi1(k1) phi2(k2), k2 = k - k1,
    the primed sum excluding k1 = 0 and k1 = k."""
    if truncation is not None:
        phi1, phi2 = _dressed_inputs((phi1, phi2), truncation)
    n1, n2 = phi1.max_mode, phi2.max_mode
    if m_out is None:
        m_out = n1 + n2
    if truncation is not None:
        m_out = min(m_out, truncation)
    f1, f2 = phi1.full_array(), phi2.full_array()
    out = np.zeros(max(m_out, 1), dtype=complex)
    for k, (k1, k2, ph) in enumerate(_x_plan(n1, n2, m_out), start=1):
        out[k - 1] = 0.5j * k * np.sum(np.exp(-1j * ph * sigma) * f1[k1 + n1] * f2[k2 + n2])
    return SpectralCoeffs(out)


def x_op(phi1: SpectralCoeffs, phi2: SpectralCoeffs, spec: OperatorSpec) -> SpectralCoeffs:
    """First-order operator: mode k gets
    sum' (e^{-3i k k1 k2 s} - e^{-3i k k1 k2 t}) / (6 k1 k2) phi1(k1) phi2(k2).

    Additive in the time pair (exact Chen relation). A finite truncation
    level dresses inputs and output with the corresponding projector.
    """
    phi1, phi2 = _dressed_inputs((phi1, phi2), spec.truncation)
    n1, n2 = phi1.max_mode, phi2.max_mode
    m_out = spec.max_mode if spec.truncation is None else min(spec.max_mode, spec.truncation)
    f1, f2 = phi1.full_array(), phi2.full_array()
    out = np.zeros(max(m_out, 1), dtype=complex)
    for k, (k1, k2, ph) in enumerate(_x_plan(n1, n2, m_out), start=1):
        mult = (np.exp(-1j * ph * spec.s) - np.exp(-1j * ph * spec.t)) / (6.0 * k1 * k2)
        out[k - 1] = np.sum(mult * f1[k1 + n1] * f2[k2 + n2])
    return SpectralCoeffs(out)


def x2_op(phi1: SpectralCoeffs, phi2: SpectralCoeffs, phi3: SpectralCoeffs,
          spec: OperatorSpec) -> tuple[SpectralCoeffs, SpectralCoeffs]:
    """Second-order operator, split into (oscillatory, resonant) parts.

    The oscillatory part sums -(k k2 / 2) m_integral(a, b, s, t) over
    admissible frequency tuples with a = -3 k k1 k2, b = -3 k2 k21 k22; the
    resonant part collects the exact (t-s)/(ib)-linear contributions on
    a + b = 0, each resonance lattice point counted once. The sum of the two
    parts equals the iterated time integral of the instantaneous
    nonlinearity; the resonant part alone has vanishing second difference.
    A finite truncation level additionally restricts every frequency
    magnitude (including the intermediate k2) to the dressing level.
    """
    n_in = max(phi1.max_mode, phi2.max_mode, phi3.max_mode)
    phi1, phi2, phi3 = (p.padded(n_in) for p in (phi1, phi2, phi3))
    m_out = spec.max_mode
    f1, f2, f3 = phi1.full_array(), phi2.full_array(), phi3.full_array()
    s, t, trunc = spec.s, spec.t, spec.truncation
    tau = t - s
    hat = np.zeros(max(m_out, 1), dtype=complex)
    breve = np.zeros(max(m_out, 1), dtype=complex)
    plan = _x2_plan(n_in, m_out)
    for k in range(1, m_out + 1):
        a, b, coeff, i1, i2, i3, res, mags = plan[k - 1]
        prod = coeff * f1[i1] * f2[i2] * f3[i3]
        if trunc is not None:
            keep = (k <= trunc) & np.all(mags <= trunc, axis=0)
            prod = np.where(keep, prod, 0.0)
        m = np.empty(len(a), dtype=complex)
        nr = ~res
        if nr.any():
            an, bn = a[nr], b[nr]
            pn = an + bn
            m[nr] = (np.exp(1j * pn * s) - np.exp(1j * pn * t)) / (bn * pn) \
                + (np.exp(1j * (bn * s + an * t)) - np.exp(1j * pn * s)) / (an * bn)
        if res.any():
            ar = a[res]
            m[res] = (1.0 - np.exp(1j * ar * tau)) / ar**2
            breve[k - 1] = np.sum(prod[res] * (tau / (1j * b[res])))
        hat[k - 1] = np.sum(prod * m)
    return SpectralCoeffs(hat), SpectralCoeffs(breve)


def gamma_correction(phi1: SpectralCoeffs, phi2: SpectralCoeffs, phi3: SpectralCoeffs,
                     level: int, m_out: int | None = None) -> SpectralCoeffs:
    """Resonant counter-term restoring the spectrally truncated flow.

    Collects exactly the resonant interactions the level-N dressing discards:
    mode k gets sum over k1 (excluding 0 and k, with k2 = k - k1) of
    (I_{all nonzero} - I_{|k|,|k1|,|k2| <= N}) * (-1/(6 i k1)) * phi1(k1) *
    [phi2(k) phi3(-k1) + phi2(-k1) phi3(k)], the bracket halved to a single
    product at k1 = -k where the two resonance branches coincide. Satisfies
    the defining identity: the resonant part of the second-order operator
    minus its level-N dressing equals the time integral of this operator
    conjugated through the free flow, which is (t-s) times this operator
    exactly (the conjugating phases cancel on the resonance set).
    """
    if level < 1:
        raise ValueError("truncation level must be >= 1")
    n1, n2, n3 = phi1.max_mode, phi2.max_mode, phi3.max_mode
    if m_out is None:
        m_out = max(n2, n3)
    f1, f2, f3 = phi1.full_array(), phi2.full_array(), phi3.full_array()
    out = np.zeros(max(m_out, 1), dtype=complex)
    k1 = np.arange(-n1, n1 + 1)
    for k in range(1, m_out + 1):
        k2 = k - k1
        admissible = (k1 != 0) & (k1 != k)
        inside = (abs(k) <= level) & (np.abs(k1) <= level) & (np.abs(k2) <= level)
        weight = admissible & ~inside
        if not weight.any():
            continue
        fa = f2[k + n2] if abs(k) <= n2 else 0.0
        fb = f3[k + n3] if abs(k) <= n3 else 0.0
        neg1_in_3 = np.abs(k1) <= n3
        neg1_in_2 = np.abs(k1) <= n2
        branch_a = np.where(neg1_in_3, f3[np.clip(-k1 + n3, 0, 2 * n3)], 0.0) * fa
        branch_b = np.where(neg1_in_2, f2[np.clip(-k1 + n2, 0, 2 * n2)], 0.0) * fb
        bracket = branch_a + np.where(k1 == -k, 0.0, branch_b)
        terms = np.where(weight, (-1.0 / (6j * k1)) * f1[k1 + n1] * bracket, 0.0)
        out[k - 1] = np.sum(terms)
    return SpectralCoeffs(out)


# ---------------------------------------------------------------------------
# third-order operators (quadrature-backed, experimental scale only)

_X3_MODE_LIMIT = 12


def _gl_nodes(s: float, t: float, n_nodes: int):
    xg, wg = leggauss(n_nodes)
    return 0.5 * (t - s) * xg + 0.5 * (t + s), 0.5 * (t - s) * wg


def _x3_nodes_default(n_in: int, m_out: int, s: float, t: float) -> int:
    # resolve the fastest phase 3*k*k1*k2 over the admissible tuples
    fmax = 3.0 * m_out * n_in * (m_out + n_in)
    return int(max(96, 1.5 * fmax * (t - s) / math.pi + 48))


def x3a_op(phi1, phi2, phi3, phi4, spec: OperatorSpec, n_nodes: int | None = None) -> SpectralCoeffs:
    """Third-order cascade operator int_s^t Xdot_sigma(phi1, X2_{sigma s}(phi2,phi3,phi4)).

    Gauss-Legendre in the outer time; the inner iterated integrals use the
    closed-form second-order operator. Normalised so that its second
    difference over s <= u <= t equals
    X_{tu}(phi1, X2_{us}(phi2,phi3,phi4)) + X2_{tu}(phi1, phi2, X_{us}(phi3,phi4)).
    Cost grows like the fourth power of the mode count; capped at small sizes.
    """
    n_in = max(p.max_mode for p in (phi1, phi2, phi3, phi4))
    if n_in > _X3_MODE_LIMIT:
        raise ValueError(f"third-order operators are limited to max_mode <= {_X3_MODE_LIMIT}")
    m_out = spec.max_mode
    if n_nodes is None:
        n_nodes = _x3_nodes_default(n_in, m_out, spec.s, spec.t)
    nodes, weights = _gl_nodes(spec.s, spec.t, n_nodes)
    acc = np.zeros(max(m_out, 1), dtype=complex)
    inner_cap = phi2.max_mode + phi3.max_mode + phi4.max_mode
    for sig, w in zip(nodes, weights):
        h, b = x2_op(phi2, phi3, phi4, OperatorSpec(inner_cap, spec.s, sig))
        acc += w * xdot_op(phi1, h + b, sig, m_out=m_out).coeffs
    return SpectralCoeffs(acc)


def x3b_op(phi1, phi2, phi3, phi4, spec: OperatorSpec, n_nodes: int | None = None) -> SpectralCoeffs:
    """Third-order pairing operator int_s^t Xdot_sigma(X_{sigma s}(phi1,phi2),
    X_{sigma s}(phi3,phi4)) with closed-form first-order factors.

    Its second difference over s <= u <= t equals
    X_{tu}(P, R) + (1/2) X2_{tu}(P, phi3, phi4) + (1/2) X2_{tu}(R, phi1, phi2)
    with P = X_{us}(phi1,phi2) and R = X_{us}(phi3,phi4).
    """
    n_in = max(p.max_mode for p in (phi1, phi2, phi3, phi4))
    if n_in > _X3_MODE_LIMIT:
        raise ValueError(f"third-order operators are limited to max_mode <= {_X3_MODE_LIMIT}")
    m_out = spec.max_mode
    if n_nodes is None:
        n_nodes = _x3_nodes_default(n_in, m_out, spec.s, spec.t)
    nodes, weights = _gl_nodes(spec.s, spec.t, n_nodes)
    acc = np.zeros(max(m_out, 1), dtype=complex)
    for sig, w in zip(nodes, weights):
        left = x_op(phi1, phi2, OperatorSpec(phi1.max_mode + phi2.max_mode, spec.s, sig))
        right = x_op(phi3, phi4, OperatorSpec(phi3.max_mode + phi4.max_mode, spec.s, sig))
        acc += w * xdot_op(left, right, sig, m_out=m_out).coeffs
    return SpectralCoeffs(acc)


# ---------------------------------------------------------------------------
# multiplier norm bounds and empirical probes


def _lq(values: np.ndarray, q: float) -> float:
    if values.size == 0:
        return 0.0
    if math.isinf(q):
        return float(np.max(np.abs(values)))
    return float(np.sum(np.abs(values) ** q) ** (1.0 / q))


def _tuples(n: int, k0: int, cutoff: int):
    """All (k1..kn) with k0 + k1 + ... + kn = 0 and 0 < |ki| <= cutoff."""
    rng_k = np.arange(-cutoff, cutoff + 1)
    if n == 1:
        k1 = np.array([-k0]) if 0 < abs(k0) <= cutoff else np.empty(0, dtype=int)
        return (k1,)
    if n == 2:
        k1 = rng_k
        k2 = -k0 - k1
        ok = (k1 != 0) & (k2 != 0) & (np.abs(k2) <= cutoff)
        return k1[ok], k2[ok]
    if n == 3:
        k1, k2 = np.meshgrid(rng_k, rng_k, indexing="ij")
        k3 = -k0 - k1 - k2
        ok = (k1 != 0) & (k2 != 0) & (k3 != 0) & (np.abs(k3) <= cutoff)
        return k1[ok], k2[ok], k3[ok]
    raise ValueError("multiplier bounds implemented for arity <= 3")


def multiplier_norm_bound(multiplier, arity: int, p: float, cutoff: int,
                          variant: int = 1) -> float:
    """Upper bound for the weighted-lp operator norm of a multiplier operator.

    The multiplier is a callable m(k0, k1, ..., kn) (vectorised over numpy
    arrays) in the zero-sum convention k0 + k1 + ... + kn = 0; sums run over
    0 < |ki| <= cutoff.

    variant 1: sup_{k0} lq-norm over tuples, 1/p + 1/q = 1.
    variant 2: lp-norm over k0 of the l-qhat-norm over tuples,
               qhat = p / (p - n/(n-1)), requiring p >= n/(n-1).
    """
    if variant == 1:
        q = math.inf if p == 1 else (1.0 if math.isinf(p) else p / (p - 1.0))
    elif variant == 2:
        if arity < 2:
            raise ValueError("variant 2 needs arity >= 2")
        crit = arity / (arity - 1.0)
        if p < crit:
            raise ValueError(f"variant 2 requires p >= {crit}")
        q = math.inf if p == crit else (1.0 if math.isinf(p) else p / (p - crit))
    else:
        raise ValueError("variant must be 1 or 2")

    per_k0 = []
    for k0 in range(-cutoff, cutoff + 1):
        if k0 == 0:
            continue
        ks = _tuples(arity, k0, cutoff)
        if ks[0].size == 0:
            per_k0.append(0.0)
            continue
        vals = np.asarray(multiplier(np.full(ks[0].shape, k0), *ks), dtype=complex)
        per_k0.append(_lq(vals, q))
    per_k0 = np.asarray(per_k0)
    if variant == 1 or math.isinf(p):
        return float(np.max(per_k0, initial=0.0))
    return float(np.sum(per_k0**p) ** (1.0 / p))


def operator_norm_estimate(apply_fn, arity: int, max_mode: int, params: FLNormParams,
                           trials: int, rng: np.random.Generator) -> float:
    """Randomised lower bound of an operator norm on the unit sphere."""
    best = 0.0
    for _ in range(trials):
        args = [random_unit_state(max_mode, params, rng) for _ in range(arity)]
        best = max(best, fl_norm(apply_fn(*args), params))
    return best


def holder_growth_probe(kind: str, reg: RegularityPair, trials: int = 200,
                        max_mode: int = 64, levels: int = 6, base_span: float = 1.0,
                        seed: int = 0):
    """Fit the decay exponent of an empirical operator norm against the span t - s.

    kind is "x" for the first-order operator or "x2_hat" for the oscillatory
    second-order part. Returns (slope, spans, norms); the slope is the
    log-log least-squares exponent over dyadic spans base_span * 2^-j.
    """
    rng = np.random.default_rng(seed)
    params = reg.norm_params
    spans = base_span * 0.5 ** np.arange(levels)
    norms = []
    for span in spans:
        if kind == "x":
            fn = lambda a, b: x_op(a, b, OperatorSpec(2 * max_mode, 0.0, span))
            norms.append(operator_norm_estimate(fn, 2, max_mode, params, trials, rng))
        elif kind == "x2_hat":
            fn = lambda a, b, c: x2_op(a, b, c, OperatorSpec(3 * max_mode, 0.0, span))[0]
            norms.append(operator_norm_estimate(fn, 3, max_mode, params, trials, rng))
        else:
            raise ValueError("kind must be 'x' or 'x2_hat'")
    fit = linregress(np.log(spans), np.log(norms))
    return float(fit.slope), spans, np.asarray(norms)
