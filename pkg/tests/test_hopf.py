import numpy as np
import pytest

from necklab.bubbles import RationalMap, bubble_field
from necklab.fields import Field, Grid
from necklab.hopf import (dbar_residual, hopf_differential, hopf_parts, polar_identity_residual,
                          radial_bound_margin, random_sphere_map)
from necklab.lorentz import norm_L1

G = Grid.disc(1.0, 48, 64)


def vec(g, *comps):
    return Field(g, np.stack(comps, -1))


def rates(errs):
    e = np.asarray(errs)
    return np.log2(e[:-1] / e[1:])


def test_identity_map_is_conformal():
    phi = hopf_differential(vec(G, G.x, G.y))
    assert np.max(np.abs(phi.values)) < 1e-12


def test_projection_has_unit_phi():
    phi = hopf_differential(vec(G, G.x, 0 * G.x))
    np.testing.assert_allclose(phi.values, 1.0, atol=1e-12)


def test_holomorphic_square_is_conformal():
    for n in (16, 32, 64):
        g = Grid.disc(1.0, n, 2 * n)
        u = vec(g, g.x ** 2 - g.y ** 2, 2 * g.x * g.y)
        assert norm_L1(hopf_differential(u).magnitude()) < 1e-10


def test_polar_identity_examples():
    assert polar_identity_residual(vec(G, G.x, G.y)) < 1e-10
    const = vec(G, np.ones(G.shape), 2 * np.ones(G.shape))
    assert polar_identity_residual(const) == 0.0
    assert radial_bound_margin(const) == 0.0


def test_radial_bound_for_projection():
    u = vec(G, G.x, 0 * G.x)
    p = hopf_parts(u)
    np.testing.assert_allclose(np.abs(p.u_rho[..., 0])[1:], np.broadcast_to(np.abs(np.cos(G.theta)), (G.n_r - 1, G.n_theta)),
                               atol=1e-12)
    assert radial_bound_margin(u) >= -1e-12


def test_radial_map_is_equality_case():
    g = Grid.annulus(0.2, 1.0, 32, 32)
    u = vec(g, g.rho, 0 * g.rho, 0 * g.rho)
    p = hopf_parts(u)
    np.testing.assert_allclose(np.abs(p.phi), np.sum(p.u_rho ** 2, -1), rtol=1e-12)
    assert abs(radial_bound_margin(u)) < 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_random_maps(seed):
    u = random_sphere_map(G, np.random.default_rng(seed))
    gmax = hopf_parts(u).grad_sq_max
    assert polar_identity_residual(u) <= 1e-10 * (1 + gmax ** 2)
    assert radial_bound_margin(u) >= -1e-8 * (1 + np.sqrt(gmax))


def test_quadratic_scaling():
    u = random_sphere_map(G, np.random.default_rng(1))
    base = hopf_differential(u).values
    for c in (-2.0, 0.5, 3.0):
        scaled = hopf_differential(Field(G, c * u.values)).values
        np.testing.assert_allclose(scaled, c ** 2 * base, rtol=1e-12, atol=1e-12)


def test_rotation_invariance():
    u = random_sphere_map(G, np.random.default_rng(2))
    q, _ = np.linalg.qr(np.random.default_rng(3).normal(size=(3, 3)))
    rotated = Field(G, u.values @ q.T, unit_sphere=True)
    np.testing.assert_allclose(hopf_differential(rotated).values, hopf_differential(u).values,
                               atol=1e-10)


def test_dbar_on_bubble_second_order():
    errs = []
    for n in (32, 64, 128):
        g = Grid.disc(1.0, n, 2 * n)
        errs.append(dbar_residual(bubble_field(RationalMap.identity(), g, (0, 0), 0.5)))
    assert np.all(rates(errs) >= 1.9), rates(errs)


def test_dbar_forced_example_second_order():
    errs = []
    for n in (32, 64, 128):
        g = Grid.annulus(0.25, 1.0, n, 2 * n)
        u = vec(g, g.x ** 2, 0 * g.x)
        f = vec(g, -2 + 0 * g.x, 0 * g.x)
        errs.append(dbar_residual(u, f))
    assert np.all(rates(errs) >= 1.9), rates(errs)


def test_dbar_forcing_matters():
    g = Grid.annulus(0.25, 1.0, 64, 128)
    u = vec(g, g.x ** 2, 0 * g.x)
    assert dbar_residual(u) > 100 * dbar_residual(u, vec(g, -2 + 0 * g.x, 0 * g.x))
