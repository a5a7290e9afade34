import math

import numpy as np
import numpy.testing as npt
import pytest

from roughkdv import (
    SpectralCoeffs, FLNormParams, fl_norm, random_state, random_unit_state,
    RegularityPair, OperatorSpec, alpha_star, in_region_d, in_region_d_prime,
    m_integral, xdot_op, x_op, x2_op, gamma_correction, x3a_op, x3b_op,
    multiplier_norm_bound, operator_norm_estimate, holder_growth_probe,
    airy_evolve, nonlinearity, l2_inner,
)
from oracles import (
    double_oscillatory_quadrature, x2_time_quadrature, gamma_conjugated_quadrature,
    rel_residual,
)

EPS_B = 1e-9

# frozen classification table: (gamma, alpha, p, in_D, in_D')
REGION_TABLE = [
    (0.35, -0.40, 2.0, True, True),
    (0.50, -1.00, 2.0, False, False),
    (0.00, -1.00, 1.0, True, False),
    (0.35, -0.45 + EPS_B, 2.0, True, True),
    (0.35, -0.45, 2.0, False, False),
    (0.35, -0.45 - EPS_B, 2.0, False, False),
    (0.25 - EPS_B, -0.75, 2.0, True, False),
    (0.25, -0.75, 2.0, False, False),
    (0.00, -1.00 - EPS_B, 1.0, False, False),
    (0.45, -0.10, 4.0, False, False),
    (0.45, 0.15, 4.0, True, True),
    (0.10, -0.35, math.inf, True, False),
]


@pytest.mark.parametrize("gamma,alpha,p,in_d,in_dp", REGION_TABLE)
def test_region_membership_table(gamma, alpha, p, in_d, in_dp):
    r = RegularityPair(gamma, alpha, p)
    assert in_region_d(r) is in_d
    assert in_region_d_prime(r) is in_dp


def test_alpha_star_branches():
    assert alpha_star(2.0) == -0.5
    assert alpha_star(1.0) == -0.5
    assert alpha_star(4.0) == -0.25
    assert alpha_star(math.inf) == 0.0


def test_regularity_pair_validation():
    with pytest.raises(ValueError):
        RegularityPair(0.6, 0.0, 2.0)
    with pytest.raises(ValueError):
        RegularityPair(0.3, 0.0, 0.5)


# ---------------------------------------------------------------------------
# m_integral


def test_m_integral_empty_interval():
    assert m_integral(3.0, 5.0, 0.4, 0.4) == pytest.approx(0.0, abs=1e-15)
    assert m_integral(2.0, -2.0, 0.4, 0.4) == pytest.approx(0.0, abs=1e-15)


def test_m_integral_resonant_closed_form():
    # a = 1, b = -1 over [0, pi]: (1 - e^{i pi}) / 1 = 2
    assert m_integral(1.0, -1.0, 0.0, np.pi) == pytest.approx(2.0, abs=1e-13)


def test_m_integral_rejects_zero_frequencies():
    with pytest.raises(ValueError):
        m_integral(0.0, 1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        m_integral(1.0, 0.0, 0.0, 1.0)


def test_m_integral_against_quadrature():
    rng = np.random.default_rng(10)
    for _ in range(12):
        a = float(rng.integers(1, 20)) * rng.choice([-1.0, 1.0])
        b = float(rng.integers(1, 20)) * rng.choice([-1.0, 1.0])
        if a + b == 0:
            b += 1.0
        s, t = np.sort(rng.uniform(0.0, 1.0, 2))
        want = double_oscillatory_quadrature(a, b, s, t)
        assert abs(m_integral(a, b, s, t) - want) < 1e-10
    # resonant branch subtracts the (t-s)/(ib) linear part of the integral
    for a in (3.0, -7.0, 11.0):
        s, t = 0.2, 0.9
        want = double_oscillatory_quadrature(a, -a, s, t) - (t - s) / (1j * -a)
        assert abs(m_integral(a, -a, s, t) - want) < 1e-12


def test_m_integral_vectorised():
    a = np.array([1.0, 2.0, 3.0])
    b = np.array([-1.0, 5.0, -3.0])
    out = m_integral(a, b, 0.1, 0.8)
    for i in range(3):
        assert out[i] == pytest.approx(m_integral(a[i], b[i], 0.1, 0.8), abs=1e-15)


# ---------------------------------------------------------------------------
# first-order operator


def one_mode_state():
    return SpectralCoeffs(np.array([1.0 + 0j]))


def test_x_single_term_hand_value():
    phi = one_mode_state()
    s, t = 0.3, 0.9
    out = x_op(phi, phi, OperatorSpec(2, s, t))
    expect = (np.exp(-6j * s) - np.exp(-6j * t)) / 6.0
    assert out.mode(2) == pytest.approx(expect, abs=1e-15)
    assert out.mode(1) == 0
    assert out.mode(0) == 0


def test_x_vanishes_on_empty_interval():
    rng = np.random.default_rng(11)
    f, g = random_state(6, rng), random_state(6, rng)
    out = x_op(f, g, OperatorSpec(12, 0.7, 0.7))
    assert fl_norm(out, FLNormParams(0, 2)) == 0.0


def test_x_chen_relation():
    rng = np.random.default_rng(12)
    worst = 0.0
    for _ in range(40):
        f, g = random_state(16, rng), random_state(16, rng)
        s, u, t = np.sort(rng.uniform(0.0, 1.0, 3))
        whole = x_op(f, g, OperatorSpec(32, s, t))
        parts = x_op(f, g, OperatorSpec(32, u, t)) + x_op(f, g, OperatorSpec(32, s, u))
        worst = max(worst, rel_residual(whole, parts))
    assert worst < 1e-13


def test_xdot_is_conjugated_nonlinearity():
    rng = np.random.default_rng(13)
    phi = random_state(8, rng)
    for sigma in (0.0, 0.41, 1.7):
        got = xdot_op(phi, phi, sigma)
        want = airy_evolve(nonlinearity(airy_evolve(phi, sigma)), -sigma)
        assert rel_residual(got, want) < 1e-13


def test_x_truncation_dressing():
    rng = np.random.default_rng(14)
    f, g = random_state(12, rng), random_state(12, rng)
    spec = OperatorSpec(24, 0.1, 0.6, truncation=6)
    out = x_op(f, g, spec)
    from roughkdv import project
    want = project(x_op(project(f, 6), project(g, 6), OperatorSpec(24, 0.1, 0.6)), 6)
    assert rel_residual(out, want) < 1e-15


def test_truncated_x_converges_with_level():
    rng = np.random.default_rng(15)
    params = FLNormParams(-0.4, 2.0)
    full_spec = lambda trunc: OperatorSpec(32, 0.0, 0.5, truncation=trunc)
    diffs = []
    for level in (4, 8, 16):
        def gap(a, b, level=level):
            return x_op(a, b, OperatorSpec(32, 0.0, 0.5)) - x_op(a, b, full_spec(level))
        diffs.append(operator_norm_estimate(gap, 2, 16, params, 40, rng))
    assert diffs[2] < diffs[1] < diffs[0]


# ---------------------------------------------------------------------------
# second-order operator


def test_x2_symmetric_resonant_closed_form():
    rng = np.random.default_rng(16)
    phi = random_state(5, rng)
    s, t = 0.25, 0.8
    _, breve = x2_op(phi, phi, phi, OperatorSpec(15, s, t))
    for k in range(1, 6):
        expect = (t - s) / (6j * k) * phi.coeffs[k - 1] ** 2 * np.conj(phi.coeffs[k - 1])
        assert breve.mode(k) == pytest.approx(expect, abs=1e-15)
    for k in range(6, 16):
        assert breve.mode(k) == 0


def test_x2_resonant_part_has_zero_second_difference():
    rng = np.random.default_rng(17)
    f1, f2, f3 = (random_state(6, rng) for _ in range(3))
    s, u, t = 0.15, 0.42, 0.77
    b_ts = x2_op(f1, f2, f3, OperatorSpec(18, s, t))[1]
    b_tu = x2_op(f1, f2, f3, OperatorSpec(18, u, t))[1]
    b_us = x2_op(f1, f2, f3, OperatorSpec(18, s, u))[1]
    resid = b_ts - b_tu - b_us
    scale = max(np.max(np.abs(b_ts.coeffs)), 1e-300)
    assert np.max(np.abs(resid.coeffs)) / scale < 1e-14


def test_x2_second_difference_identity():
    rng = np.random.default_rng(18)
    worst = 0.0
    for _ in range(15):
        f1, f2, f3 = (random_state(8, rng) for _ in range(3))
        s, u, t = np.sort(rng.uniform(0.0, 1.0, 3))
        cap = 24
        x2 = lambda a, b: sum(x2_op(f1, f2, f3, OperatorSpec(cap, a, b)))
        delta = x2(s, t) - x2(u, t) - x2(s, u)
        inner = x_op(f2, f3, OperatorSpec(16, s, u))
        want = 2.0 * x_op(f1, inner, OperatorSpec(cap, u, t))
        worst = max(worst, rel_residual(delta, want))
    assert worst < 1e-12


def test_x2_against_time_quadrature():
    rng = np.random.default_rng(19)
    f1, f2, f3 = (random_state(4, rng) for _ in range(3))
    s, t = 0.2, 0.45
    closed = sum(x2_op(f1, f2, f3, OperatorSpec(12, s, t)))
    quad = x2_time_quadrature(f1, f2, f3, s, t, 12, n_outer=160, n_inner=160)
    assert rel_residual(closed, quad) < 1e-11


def test_x2_pairing_identity():
    rng = np.random.default_rng(20)
    for _ in range(10):
        phi = random_state(10, rng)
        s, t = np.sort(rng.uniform(0.0, 1.0, 2))
        xv = x_op(phi, phi, OperatorSpec(20, s, t))
        x2v = sum(x2_op(phi, phi, phi, OperatorSpec(30, s, t)))
        assert abs(l2_inner(phi, xv)) < 1e-12 * max(1.0, l2_inner(xv, xv))
        resid = 2.0 * l2_inner(phi, x2v) + l2_inner(xv, xv)
        assert abs(resid) < 1e-12 * max(1.0, abs(l2_inner(xv, xv)))


def test_truncated_x2_converges_with_level():
    rng = np.random.default_rng(21)
    params = FLNormParams(-0.4, 2.0)
    diffs = []
    for level in (4, 8, 16):
        def gap(a, b, c, level=level):
            full = sum(x2_op(a, b, c, OperatorSpec(24, 0.0, 0.5)))
            cut = sum(x2_op(a, b, c, OperatorSpec(24, 0.0, 0.5, truncation=level)))
            return full - cut
        diffs.append(operator_norm_estimate(gap, 3, 8, params, 25, rng))
    assert diffs[2] < diffs[1] < diffs[0]


# ---------------------------------------------------------------------------
# resonant counter-term


def test_gamma_vanishes_when_everything_inside():
    rng = np.random.default_rng(22)
    f1, f2, f3 = (random_state(2, rng) for _ in range(3))
    out = gamma_correction(f1, f2, f3, 8)
    assert np.all(out.coeffs == 0)


def test_gamma_single_surviving_term():
    # phi1 on modes +-1 only; contribution at k = 2 with N = 2 comes from
    # k1 = -1 alone (k2 = 3 exceeds the level): the coefficient is
    # -1/(6i k1) = 1/(6i), double-branch bracket
    rng = np.random.default_rng(23)
    f1 = random_state(1, rng)
    f2, f3 = random_state(2, rng), random_state(2, rng)
    out = gamma_correction(f1, f2, f3, 2, m_out=4)
    bracket = f2.mode(2) * f3.mode(1) + f2.mode(1) * f3.mode(2)
    expect = (1.0 / 6.0j) * f1.mode(-1) * bracket
    assert out.mode(2) == pytest.approx(expect, abs=1e-16)


def test_gamma_matches_resonant_truncation_defect():
    rng = np.random.default_rng(24)
    for _ in range(6):
        f1, f2, f3 = (random_state(4, rng) for _ in range(3))
        s, t = np.sort(rng.uniform(0.0, 1.0, 2))
        cap = 12
        _, b_full = x2_op(f1, f2, f3, OperatorSpec(cap, s, t))
        _, b_cut = x2_op(f1, f2, f3, OperatorSpec(cap, s, t, truncation=4))
        want = (t - s) * gamma_correction(f1, f2, f3, 4, m_out=cap)
        assert rel_residual(b_full - b_cut, want) < 1e-13


def test_gamma_identity_by_quadrature():
    rng = np.random.default_rng(25)
    f1, f2, f3 = (random_state(4, rng) for _ in range(3))
    s, t = 0.15, 0.85
    cap = 12
    _, b_full = x2_op(f1, f2, f3, OperatorSpec(cap, s, t))
    _, b_cut = x2_op(f1, f2, f3, OperatorSpec(cap, s, t, truncation=4))
    conj_integral = gamma_conjugated_quadrature(f1, f2, f3, 4, s, t, cap)
    assert rel_residual(b_full - b_cut, conj_integral) < 1e-12


# ---------------------------------------------------------------------------
# third-order operators


def test_x3_empty_interval():
    rng = np.random.default_rng(26)
    q = [random_state(3, rng) for _ in range(4)]
    a = x3a_op(*q, OperatorSpec(12, 0.5, 0.5), n_nodes=8)
    b = x3b_op(*q, OperatorSpec(12, 0.5, 0.5), n_nodes=8)
    assert np.max(np.abs(a.coeffs)) == 0
    assert np.max(np.abs(b.coeffs)) == 0


def test_x3_mode_cap():
    rng = np.random.default_rng(27)
    q = [random_state(16, rng) for _ in range(4)]
    with pytest.raises(ValueError):
        x3a_op(*q, OperatorSpec(8, 0.0, 0.5))


def test_x3a_second_difference_relation():
    rng = np.random.default_rng(28)
    q = [random_state(3, rng) for _ in range(4)]
    s, u, t = 0.1, 0.22, 0.4
    cap = 12
    d = x3a_op(*q, OperatorSpec(cap, s, t)) - x3a_op(*q, OperatorSpec(cap, u, t)) \
        - x3a_op(*q, OperatorSpec(cap, s, u))
    x2_us = sum(x2_op(q[1], q[2], q[3], OperatorSpec(9, s, u)))
    x_us = x_op(q[2], q[3], OperatorSpec(6, s, u))
    want = x_op(q[0], x2_us, OperatorSpec(cap, u, t)) \
        + sum(x2_op(q[0], q[1], x_us, OperatorSpec(cap, u, t)))
    assert rel_residual(d, want) < 1e-7


def test_x3b_second_difference_relation():
    # the product-type operator satisfies the relation with the sewn factors
    # in the outer slot and half weights on the second-order terms
    rng = np.random.default_rng(29)
    q = [random_state(3, rng) for _ in range(4)]
    s, u, t = 0.1, 0.22, 0.4
    cap = 12
    d = x3b_op(*q, OperatorSpec(cap, s, t)) - x3b_op(*q, OperatorSpec(cap, u, t)) \
        - x3b_op(*q, OperatorSpec(cap, s, u))
    pp = x_op(q[0], q[1], OperatorSpec(6, s, u))
    rr = x_op(q[2], q[3], OperatorSpec(6, s, u))
    want = x_op(pp, rr, OperatorSpec(cap, u, t)) \
        + 0.5 * sum(x2_op(pp, q[2], q[3], OperatorSpec(cap, u, t))) \
        + 0.5 * sum(x2_op(rr, q[0], q[1], OperatorSpec(cap, u, t)))
    assert rel_residual(d, want) < 1e-7


# ---------------------------------------------------------------------------
# multiplier bounds and growth probes


def test_multiplier_bound_zero():
    zero = lambda *ks: np.zeros(ks[0].shape)
    assert multiplier_norm_bound(zero, 2, 2.0, 8) == 0.0
    assert multiplier_norm_bound(zero, 2, 2.0, 8, variant=2) == 0.0


def test_multiplier_bound_counting_oracle():
    K = 9
    ind = lambda k0, k1, k2: np.ones(k0.shape)
    got = multiplier_norm_bound(ind, 2, 2.0, K)
    best = 0
    for k0 in range(-K, K + 1):
        if k0 == 0:
            continue
        cnt = sum(1 for k1 in range(-K, K + 1)
                  if k1 != 0 and -k0 - k1 != 0 and abs(-k0 - k1) <= K)
        best = max(best, cnt)
    assert got == pytest.approx(math.sqrt(best), rel=1e-12)


def test_multiplier_bound_variant2_requires_p():
    ind = lambda k0, k1, k2: np.ones(k0.shape)
    with pytest.raises(ValueError):
        multiplier_norm_bound(ind, 2, 1.5, 4, variant=2)
    assert multiplier_norm_bound(ind, 2, 2.0, 4, variant=2) > 0


def _weighted_x_multiplier(alpha, s, t):
    def m(k0, k1, k2):
        k = -k0
        phase = 3.0 * k * k1 * k2
        base = (np.exp(-1j * phase * s) - np.exp(-1j * phase * t)) / (6.0 * k1 * k2)
        w = (1.0 + k**2) ** (alpha / 2) / (
            (1.0 + k1**2) ** (alpha / 2) * (1.0 + k2**2) ** (alpha / 2))
        return w * base
    return m


@pytest.mark.parametrize("gamma,alpha,p", [(0.35, -0.40, 2.0), (0.0, 0.0, 2.0),
                                           (0.45, 0.15, 4.0)])
def test_empirical_x_norm_below_multiplier_bound(gamma, alpha, p):
    assert in_region_d(RegularityPair(gamma, alpha, p))
    rng = np.random.default_rng(30)
    s, t = 0.0, 0.5
    K = 12
    params = FLNormParams(alpha, p)
    emp = operator_norm_estimate(
        lambda a, b: x_op(a, b, OperatorSpec(2 * K, s, t)), 2, K, params, 100, rng)
    bound = multiplier_norm_bound(_weighted_x_multiplier(alpha, s, t), 2, p, 2 * K)
    assert emp <= bound * (1.0 + 1e-9)


def test_growth_probe_first_order():
    reg = RegularityPair(0.35, -0.40, 2.0)
    slope, spans, norms = holder_growth_probe("x", reg, trials=60, max_mode=64,
                                              levels=6, seed=3)
    assert slope >= 0.35 - 0.05
    assert np.all(np.diff(norms) < 0) or np.all(norms[:-1] >= norms[1:])


def test_growth_probe_second_order():
    reg = RegularityPair(0.35, -0.40, 2.0)
    slope, spans, norms = holder_growth_probe("x2_hat", reg, trials=40, max_mode=16,
                                              levels=6, seed=4)
    assert slope >= 0.70 - 0.10
    assert norms[-1] < norms[0]


def test_operator_outputs_hermitian_mean_zero():
    rng = np.random.default_rng(31)
    f = random_state(6, rng)
    outs = [
        x_op(f, f, OperatorSpec(12, 0.1, 0.8)),
        sum(x2_op(f, f, f, OperatorSpec(18, 0.1, 0.8))),
        gamma_correction(f, f, f, 3, m_out=6),
    ]
    for out in outs:
        full = out.full_array()
        n = out.max_mode
        npt.assert_array_equal(full[:n], np.conj(full[n + 1:][::-1]))
        assert full[n] == 0
