import numpy as np
import pytest

from roughkdv import (
    TimeGrid, TwoIndexField, delta_path, delta2, holder_norm, holder_norm_3,
    sew, grr_functional, SewingError,
)


def dyadic(level, horizon=1.0):
    return TimeGrid.dyadic(horizon, level)


def test_grid_validation():
    with pytest.raises(ValueError):
        TimeGrid(np.array([0.0]))
    with pytest.raises(ValueError):
        TimeGrid(np.array([0.0, 0.5, 0.25]))
    with pytest.raises(ValueError):
        TimeGrid(np.array([0.0, 0.3, 1.0]), dyadic_level=1)


def test_delta_path_basics():
    grid = dyadic(3)
    const = delta_path([1.25] * len(grid), grid)
    assert all(v == 0 for _, v in const.pairs())
    lin = delta_path(list(grid.points), grid)
    for (i, j), v in lin.pairs():
        assert v == pytest.approx(grid.points[j] - grid.points[i], abs=0)


def test_cochain_identity_exact():
    grid = dyadic(3)
    rng = np.random.default_rng(0)
    # integer-valued path: float differences are exact, so the identity is bitwise
    f = [float(x) for x in rng.integers(-50, 50, len(grid))]
    dd = delta2(delta_path(f, grid))
    assert all(v == 0.0 for _, v in dd.triples())
    # generic floats cancel to rounding only
    g = list(rng.standard_normal(len(grid)))
    ddg = delta2(delta_path(g, grid))
    assert max(abs(v) for _, v in ddg.triples()) < 1e-14


def test_delta2_of_squared_span():
    grid = dyadic(3)
    a = TwoIndexField.from_function(grid, lambda s, t: (t - s) ** 2)
    h = delta2(a)
    pts = grid.points
    for (i, u, j), v in h.triples():
        expect = 2.0 * (pts[j] - pts[u]) * (pts[u] - pts[i])
        assert v == pytest.approx(expect, rel=1e-13)


def test_holder_norm_exact_ratios():
    grid = dyadic(5)
    lin = TwoIndexField.from_function(grid, lambda s, t: t - s)
    assert holder_norm(lin, 1.0) == pytest.approx(1.0, rel=1e-13)
    root = TwoIndexField.from_function(grid, lambda s, t: np.sqrt(t - s))
    assert holder_norm(root, 0.5) == pytest.approx(1.0, rel=1e-13)
    zero = TwoIndexField.from_function(grid, lambda s, t: 0.0)
    assert holder_norm(zero, 0.7) == 0.0


def test_holder_norm_3_exact_values():
    grid = dyadic(4)
    zero = delta2(TwoIndexField.from_function(grid, lambda s, t: 0.0))
    assert holder_norm_3(zero, 1.0, 1.0) == 0.0
    sq = delta2(TwoIndexField.from_function(grid, lambda s, t: (t - s) ** 2))
    assert holder_norm_3(sq, 1.0, 1.0) == pytest.approx(2.0, rel=1e-12)

    # generic (non-second-difference) field goes through the slow path
    from roughkdv.increments import ThreeIndexField
    pts = grid.points
    prod = ThreeIndexField(grid, lambda i, u, j: (pts[j] - pts[u]) * (pts[u] - pts[i]))
    assert holder_norm_3(prod, 1.0, 1.0) == pytest.approx(1.0, rel=1e-12)


def test_sew_additive_germ_recovers_path():
    grid = dyadic(5)
    rng = np.random.default_rng(1)
    f = np.cumsum(rng.standard_normal(len(grid)))
    germ = delta_path(list(f), grid)
    path, remainder = sew(germ)
    for j in range(len(grid)):
        assert path[j] == pytest.approx(f[j] - f[0], abs=1e-12)
    assert holder_norm(remainder, 0.5) < 1e-12


def test_sew_left_point_integral_germ():
    # germ s * (t - s): the sewn endpoint is the integral of s over [0, 1]
    level = 9
    grid = dyadic(level)
    germ = TwoIndexField.from_function(grid, lambda s, t: s * (t - s))
    path, remainder = sew(germ)
    h = 1.0 / 2**level
    assert path[-1] == pytest.approx(0.5, abs=h)
    # remainder equals germ - delta(path) and shares the germ's second difference
    pts = grid.points
    d_g = germ.values[(0, len(grid) - 1)] - germ.values[(2, len(grid) - 1)] - germ.values[(0, 2)]
    d_r = remainder.values[(0, len(grid) - 1)] - remainder.values[(2, len(grid) - 1)] \
        - remainder.values[(0, 2)]
    assert d_r == pytest.approx(d_g, rel=1e-12)


def test_sew_pure_second_order_germ():
    grid = dyadic(8)
    germ = TwoIndexField.from_function(grid, lambda s, t: (t - s) ** 2)
    path, remainder = sew(germ)
    h = 2.0 ** -8
    assert max(abs(p) for p in path) <= h + 1e-15
    for (i, j), v in remainder.pairs():
        assert v == pytest.approx(germ.values[(i, j)], abs=2 * h)


def test_sew_linearity():
    grid = dyadic(6)
    a = TwoIndexField.from_function(grid, lambda s, t: np.sin(s) * (t - s) ** 1.6)
    b = TwoIndexField.from_function(grid, lambda s, t: (t - s) ** 2.1)
    pa, ra = sew(a)
    pb, rb = sew(b)
    pab, rab = sew(a + b)
    for j in range(len(grid)):
        assert pab[j] == pytest.approx(pa[j] + pb[j], abs=1e-13)
    for ij in rab.values:
        assert rab.values[ij] == pytest.approx(ra.values[ij] + rb.values[ij], abs=1e-13)


def test_sew_rejects_non_dyadic():
    grid = TimeGrid(np.array([0.0, 0.1, 0.4, 1.0]))
    germ = TwoIndexField.from_function(grid, lambda s, t: (t - s) ** 2)
    with pytest.raises(SewingError):
        sew(germ)


def test_sew_rejects_rough_germ():
    grid = dyadic(6)
    germ = TwoIndexField.from_function(grid, lambda s, t: np.sqrt(t - s))
    with pytest.raises(SewingError):
        sew(germ)


@pytest.mark.parametrize("mu", [1.2, 1.5, 2.0])
def test_sewing_bound_on_closed_form_germs(mu):
    # remainder norm <= 2 / (2^mu - 2) * two-exponent norm of the second difference
    grid = dyadic(6)
    germ = TwoIndexField.from_function(grid, lambda s, t: (1 + 0.3 * np.sin(2 * s)) * (t - s) ** mu)
    path, remainder = sew(germ)
    lhs = holder_norm(remainder, mu)
    rhs = holder_norm_3(delta2(germ), mu / 2, mu / 2)
    assert lhs <= 2.0 / (2.0**mu - 2.0) * rhs + 1e-12


def test_grr_constant_integrand_exact():
    grid = dyadic(6)
    lin = TwoIndexField.from_function(grid, lambda s, t: t - s)
    assert grr_functional(lin, 1.0, 2.0) == pytest.approx(1.0, rel=1e-12)


def test_grr_linear_kernel():
    grid = dyadic(8)
    sq = TwoIndexField.from_function(grid, lambda s, t: (t - s) ** 2)
    # iint |t - s| over the unit square = 1/3, up to the diagonal-cell bias
    assert grr_functional(sq, 1.0, 1.0) == pytest.approx(1.0 / 3.0, abs=1e-4)


def test_grr_zero():
    grid = dyadic(4)
    zero = TwoIndexField.from_function(grid, lambda s, t: 0.0)
    assert grr_functional(zero, 0.7, 1.5) == 0.0
