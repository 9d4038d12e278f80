import numpy as np
import pytest

from necklab import scenarios
from necklab.bubbles import BubbleSpec, RationalMap, constant_body, glue, sphere_omega
from necklab.bubbletree import (Ball, PointScaleSequence, TreeConfig, ball_mass,
                                concentration_radius, decompose_domains, dyadic_table,
                                extract_all, extract_point_scales, group_strings, separation)
from necklab.fields import Field, Grid

G = Grid.disc(1.0, 200, 256)
EPS = 2.0


def blob(center, radius, mass, g=G):
    inside = np.hypot(g.x - center[0], g.y - center[1]) < radius
    area = np.sum(g.cell_measure * inside)
    return Field(g, inside * (mass / area))


def test_indicator_blob():
    dens = blob((0.3, 0.2), 0.1, EPS ** 2)
    e = concentration_radius(dens, EPS)
    assert e is not None
    assert e.radius == pytest.approx(0.1, abs=2 * G.spacing)
    assert np.hypot(e.center[0] - 0.3, e.center[1] - 0.2) < 2 * G.spacing


def test_zero_density_has_no_concentration():
    assert concentration_radius(Field(G, np.zeros(G.shape)), EPS) is None


def test_small_mass_has_no_concentration():
    assert concentration_radius(blob((0, 0), 0.2, 0.5 * EPS ** 2), EPS) is None


def test_two_blobs_with_exclusion():
    dens = Field(G, blob((0.4, 0.0), 0.08, EPS ** 2).values
                 + blob((-0.3, 0.3), 0.08, EPS ** 2).values)
    first = concentration_radius(dens, EPS)
    second = concentration_radius(dens, EPS, [Ball(first.center, first.radius)])
    centers = sorted([first.center, second.center])
    assert np.hypot(*(np.array(centers[0]) - (-0.3, 0.3))) < 0.02
    assert np.hypot(*(np.array(centers[1]) - (0.4, 0.0))) < 0.02
    assert len(extract_all(dens, TreeConfig(eps=EPS))) == 2


def test_ball_mass_and_dyadic_table():
    dens = blob((0, 0), 0.5, 1.0)
    assert ball_mass(dens, (0, 0), 0.0, 1.0) == pytest.approx(1.0, rel=1e-12)
    table = dyadic_table(dens, (0, 0), 0.6, 0.9)
    assert table and all(m == 0.0 for _, m in table)
    rhos = [r for r, _ in table]
    np.testing.assert_allclose(np.diff(np.log(rhos)), np.log(2) / 4)


@pytest.mark.parametrize("field", ["eps", "theta", "delta", "rho_decay"])
def test_tree_config_rejects_nonpositive(field):
    with pytest.raises(ValueError):
        TreeConfig(**{field: 0.0})


def test_extraction_needs_four_indices():
    with pytest.raises(ValueError):
        extract_point_scales([Field(G, np.zeros(G.shape))] * 3)


def seq(i, xs, rs):
    xs = np.asarray(xs, float)
    return PointScaleSequence(i, np.arange(len(rs)), xs, np.asarray(rs, float))


def test_separation_of_sequences():
    a = seq(0, [[0.25, 0]] * 4, [0.1, 0.05, 0.025, 0.0125])
    b = seq(1, [[-0.25, 0]] * 4, [0.1, 0.05, 0.025, 0.0125])
    np.testing.assert_allclose(separation(a, b), 1 + 0.5 / a.radii)


def test_group_strings_concentric():
    big = seq(0, [[0, 0]] * 4, [0.5, 0.25, 0.125, 0.0625])
    small = seq(1, [[0, 0]] * 4, [0.25, 0.0625, 0.015625, 0.00390625])
    tree = group_strings([small, big])
    assert tree.parent == {0: None, 1: 0}
    assert tree.roots == [0] and tree.children(0) == [1]
    assert tree.strings == [(0, [1])]


def test_group_strings_separated():
    a = seq(0, [[0.5, 0]] * 4, [0.1, 0.05, 0.02, 0.01])
    b = seq(1, [[-0.5, 0]] * 4, [0.1, 0.05, 0.02, 0.01])
    tree = group_strings([a, b])
    assert tree.parent == {0: None, 1: None}
    assert len(tree.strings) == 2


def test_group_strings_single():
    tree = group_strings([seq(0, [[0, 0]] * 4, [0.4, 0.2, 0.1, 0.05])])
    assert tree.strings == [(0, [])]


def _density(u):
    return sphere_omega(u).density()


def test_far_blobs_decompose_into_two_necks():
    g = Grid.disc(1.0, 256, 512)
    cfg = TreeConfig()
    t = 0.004
    bubbles = [BubbleSpec(RationalMap.identity(), (0.4, 0.0), [t]),
               BubbleSpec(RationalMap.identity(), (-0.4, 0.0), [t])]
    dens = _density(glue(constant_body(g), bubbles, 0))
    tree = group_strings([seq(0, [[0.4, 0]], [1.3 * t]), seq(1, [[-0.4, 0]], [1.3 * t])])
    dd = decompose_domains(dens, tree, cfg)
    assert dd.count("bubble") == 2 and dd.count("neck") == 2 and dd.count("body") == 1
    assert dd.valid


def test_small_constant_density_is_all_body():
    g = Grid.disc(1.0, 64, 64)
    dens = Field(g, np.full(g.shape, 0.1))
    cfg = TreeConfig()
    ext = extract_point_scales([dens] * 4, cfg)
    assert ext.sequences == []
    dd = decompose_domains(dens, group_strings([]), cfg)
    assert dd.count("neck") == 0 and dd.count("bubble") == 0
    assert set(r.kind for r in dd.regions) <= {"body", "empty"}


# --- planted sequences (shared with the acceptance suite) ---------------------


def test_single_sequence(single_run):
    sc, rep = single_run
    assert len(rep.tree.sequences) == 1
    s = rep.tree.sequences[0]
    ratio = s.radii / sc.bubbles[0].scales
    assert ratio.max() / ratio.min() < 1.2
    dd = rep.decompositions[-1]
    assert dd.count("bubble") == 1 and dd.count("neck") == 1 and dd.count("body") == 1
    assert all(m < rep.extraction.config.eps ** 2 for r in dd.necks for _, m in r.dyadic)


def test_separated_sequences(separated_run):
    sc, rep = separated_run
    assert len(rep.tree.sequences) == 2
    a, b = rep.tree.sequences
    s = separation(a, b)
    assert np.all(np.diff(s) > 0)
    assert s[-1] == pytest.approx(1 + 0.5 / a.radii[-1], rel=0.1)
    assert all(p is None for p in rep.tree.parent.values())


def test_concentric_sequences(concentric_run):
    sc, rep = concentric_run
    assert len(rep.tree.sequences) == 2
    big, small = sorted(rep.tree.sequences, key=lambda s: -s.final[1])
    common = np.intersect1d(big.ks, small.ks)
    ratio = np.array([small.at(k)[1] / big.at(k)[1] for k in common])
    assert len(common) >= len(rep.rows) // 2
    assert np.all(np.diff(ratio) < 0) and ratio[-1] < ratio[0] / 50
    assert rep.tree.parent[small.id] == big.id
