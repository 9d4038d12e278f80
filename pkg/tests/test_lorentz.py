import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from necklab.fields import Field, FieldError, Grid
from necklab.lorentz import (distribution_function, duality_check, norm_L1, norm_L2,
                             norm_L21, norm_L2_layercake, norm_L2weak, norm_LlogL, profile,
                             report)

DISC = Grid.disc(1.0, 200, 64)


def indicator(g, a):
    return Field(g, (g.rho < a).astype(float))


def cell_tol(g):
    # node inclusion moves a disc boundary by at most one radial cell
    return 2 * np.pi * g.spacing


def test_distribution_of_indicator():
    v = indicator(DISC, 0.5)
    assert abs(distribution_function(v, 0.5) - np.pi / 4) < cell_tol(DISC)
    assert distribution_function(v, 1.0) == 0.0
    assert distribution_function(v, 7.0) == 0.0


def test_distribution_of_inverse_radius():
    eps = 0.01
    g = Grid.log_per_decade(eps, 1.0, 400, 16)
    v = Field(g, 1.0 / g.rho)
    want = np.pi * (0.25 - eps ** 2)
    assert abs(distribution_function(v, 2.0) - want) < 0.01 * want


def test_L21_of_indicator():
    for a in (0.25, 0.5, 0.8):
        v = indicator(DISC, a)
        area = distribution_function(v, 0.5)
        assert norm_L21(v) == pytest.approx(np.sqrt(area), rel=1e-14)
        assert norm_L2weak(v) == pytest.approx(np.sqrt(area), rel=1e-14)
        assert abs(norm_L21(v) - a * np.sqrt(np.pi)) < cell_tol(DISC)


def test_zero_field():
    z = Field(DISC, np.zeros(DISC.shape))
    assert norm_L21(z) == norm_L2weak(z) == norm_L2_layercake(z) == norm_LlogL(z) == 0.0


def _oracle_L21(eps):
    # int lambda^{1/2} with lambda(s) = pi (min(1, 1/s)^2 - eps^2)^+
    f = lambda s: np.sqrt(np.pi * max(min(1.0, 1.0 / s) ** 2 - eps ** 2, 0.0))
    return quad(f, 0, 1)[0] + quad(f, 1, 1 / eps, limit=200)[0]


def test_L21_of_inverse_radius_grows_logarithmically():
    eps_list = [1e-2, 1e-3, 1e-4]
    vals = []
    for eps in eps_list:
        g = Grid.log_per_decade(eps, 1.0, 128, 8)
        vals.append(norm_L21(Field(g, 1.0 / g.rho)))
        assert vals[-1] == pytest.approx(_oracle_L21(eps), rel=0.02)
    slope = np.polyfit(np.log(1 / np.array(eps_list)), vals, 1)[0]
    assert slope == pytest.approx(np.sqrt(np.pi), rel=0.05)


def test_weak_norm_of_inverse_radius():
    eps = 1e-3
    g = Grid.log_per_decade(eps, 1.0, 128, 8)
    w = norm_L2weak(Field(g, 1.0 / g.rho))
    # the cell at rho_i reaches out to the next log-midpoint, half a step beyond rho_i
    assert w <= np.sqrt(np.pi) * np.exp(g.spacing / 2) * (1 + 1e-12)
    assert w == pytest.approx(np.sqrt(np.pi * (1 - eps ** 2)), rel=0.02)


def test_layercake_constant():
    for c in (1.0, 3.5):
        v = Field(DISC, np.full(DISC.shape, c))
        assert norm_L2_layercake(v) == pytest.approx(c * np.sqrt(np.pi), rel=1e-12)
        assert norm_L2(v) == pytest.approx(c * np.sqrt(np.pi), rel=1e-12)


def test_LlogL_examples():
    one = Field(DISC, np.ones(DISC.shape))
    assert norm_LlogL(one) == pytest.approx(np.pi * np.log(3), rel=1e-12)
    half = indicator(DISC, 0.5)
    area = distribution_function(half, 0.5)
    assert norm_LlogL(half) == pytest.approx(area * np.log(3), rel=1e-12)


def test_duality_on_indicators():
    for a in (0.3, 0.6):
        f = indicator(DISC, a)
        lhs, bound = duality_check(f, f)
        area = distribution_function(f, 0.5)
        assert lhs == pytest.approx(area, rel=1e-12)
        assert bound == pytest.approx(2 * area, rel=1e-12)


def test_duality_zero_field():
    z = Field(DISC, np.zeros(DISC.shape))
    assert duality_check(z, z) == (0.0, 0.0)


def test_duality_grid_mismatch():
    other = Grid.disc(1.0, 20, 16)
    with pytest.raises(FieldError):
        duality_check(Field(DISC, np.ones(DISC.shape)), Field(other, np.ones(other.shape)))


def test_arrays_need_weights():
    with pytest.raises(FieldError):
        norm_L21(np.ones(4))


def test_negative_level_rejected():
    with pytest.raises(ValueError):
        distribution_function(Field(DISC, np.ones(DISC.shape)), -1.0)


def test_ties_merge():
    p = profile(np.array([2.0, 1.0, 2.0, 1.0, 0.5]), np.array([1.0, 2.0, 3.0, 4.0, 5.0]))
    np.testing.assert_array_equal(p.values, [2.0, 1.0, 0.5])
    np.testing.assert_array_equal(p.measures, [4.0, 6.0, 5.0])


def test_report_keys():
    rep = report(indicator(DISC, 0.5))
    assert {"L21", "L2weak", "L2_layercake", "L2_quadrature", "LlogL", "breakpoints"} <= set(rep)


# --- properties on random step functions ------------------------------------

values = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=40)


def _pair(vals, seed):
    rng = np.random.default_rng(seed)
    v = np.array(vals)
    w = rng.uniform(0.01, 2.0, v.size)
    return v, w


@settings(max_examples=200, deadline=None)
@given(values, st.integers(0, 2 ** 16), st.floats(-50, 50, allow_nan=False))
def test_homogeneity(vals, seed, c):
    v, w = _pair(vals, seed)
    for norm in (norm_L21, norm_L2weak):
        assert norm(c * v, w) == pytest.approx(abs(c) * norm(v, w), rel=1e-12, abs=1e-300)


@settings(max_examples=200, deadline=None)
@given(values, st.integers(0, 2 ** 16))
def test_norm_chain(vals, seed):
    v, w = _pair(vals, seed)
    weak, mid, strong = norm_L2weak(v, w), norm_L2_layercake(v, w), norm_L21(v, w)
    assert weak <= mid * (1 + 1e-12) + 1e-300
    assert mid <= strong * (1 + 1e-12) + 1e-300


@settings(max_examples=200, deadline=None)
@given(values, st.integers(0, 2 ** 16))
def test_layercake_matches_quadrature(vals, seed):
    v, w = _pair(vals, seed)
    assert norm_L2_layercake(v, w) == pytest.approx(norm_L2(v, w), rel=1e-10, abs=1e-300)


@settings(max_examples=100, deadline=None)
@given(values, st.integers(0, 2 ** 16))
def test_rearrangement_invariance(vals, seed):
    v, w = _pair(vals, seed)
    perm = np.random.default_rng(seed + 1).permutation(v.size)
    for norm in (norm_L21, norm_L2weak, norm_L2_layercake):
        assert norm(v[perm], w[perm]) == pytest.approx(norm(v, w), rel=1e-12, abs=1e-300)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.0, 10.0), min_size=1, max_size=8), st.integers(0, 2 ** 16))
def test_L21_matches_integral_of_distribution(vals, seed):
    v, w = _pair(vals, seed)
    lam = lambda s: float(w[np.abs(v) > s].sum())
    top = float(np.max(np.abs(v)))
    pts = sorted(set(np.abs(v).tolist()))
    want = quad(lambda s: np.sqrt(lam(s)), 0, top, points=pts[:-1] or None, limit=100)[0] if top > 0 else 0
    assert norm_L21(v, w) == pytest.approx(want, rel=1e-8, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(values, values, st.integers(0, 2 ** 16))
def test_duality_inequality(a, b, seed):
    n = min(len(a), len(b))
    f, w = _pair(a[:n], seed)
    g = np.array(b[:n])
    lhs = abs(np.sum(f * g * w))
    assert lhs <= 2 * norm_L21(f, w) * norm_L2weak(g, w) * (1 + 1e-12) + 1e-300
