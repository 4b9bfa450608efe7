import math

import numpy as np
import pytest

from vmcoal.errors import SizeOverflow
from vmcoal.lambert_euler import invert
from vmcoal.model import ModelParams, gelation_time
from vmcoal.smoluchowski import (
    ClusterDistribution,
    count_sizes,
    dzeta_dt,
    enumerate_sizes,
    mse_residual,
    mse_terms,
    total_mass,
    zeta,
)

from oracles import brute_cluster_tree_weight, one_type_zeta

ONE = ModelParams([[1]], [1])
BIPARTITE = ModelParams([[0, 1], [1, 0]], [15, 2])
THREE = ModelParams([[0.5, 1.5, 0], [1.5, 0, 2], [0, 2, 1]], [0.7, 0.4, 1.1])

X_KEPT = 0.4063757399599599  # smaller root of x e^{-x} = 2 e^{-2}, bisection oracle


def test_enumerate_examples():
    assert enumerate_sizes(1, 3) == [(1,), (2,), (3,)]
    assert enumerate_sizes(2, 2) == [(0, 1), (1, 0), (0, 2), (1, 1), (2, 0)]
    assert enumerate_sizes(3, 1) == [(0, 0, 1), (0, 1, 0), (1, 0, 0)]


@pytest.mark.parametrize("k, nmax", [(1, 7), (2, 6), (3, 5), (4, 4)])
def test_enumerate_complete_unique_graded(k, nmax):
    sizes = enumerate_sizes(k, nmax)
    assert len(sizes) == len(set(sizes)) == count_sizes(k, nmax)
    brute = {x for x in np.ndindex(*([nmax + 1] * k)) if 1 <= sum(x) <= nmax}
    assert set(sizes) == brute
    keys = [(sum(x), x) for x in sizes]
    assert keys == sorted(keys)


def test_enumerate_cap():
    with pytest.raises(SizeOverflow):
        enumerate_sizes(6, 40)


def test_zeta_one_type_closed_form():
    for t in (0.3, 1.0, 2.5):
        assert zeta(ONE, (2,), t) == pytest.approx(t * math.exp(-2 * t) / 2, rel=1e-14)
        for l in range(1, 25):
            assert zeta(ONE, (l,), t) == pytest.approx(one_type_zeta(l, t), rel=1e-12)


def test_zeta_initial_condition():
    for i, a in enumerate(THREE.alpha):
        x = [0, 0, 0]
        x[i] = 1
        assert zeta(THREE, x, 0.0) == a
    assert zeta(THREE, (1, 1, 0), 0.0) == 0.0


def test_zeta_bipartite_pair():
    p = ModelParams([[0, 1], [1, 0]], [1, 1])
    for t in (0.1, 0.7, 3.0):
        assert zeta(p, (1, 1), t) == pytest.approx(t * math.exp(-2 * t), rel=1e-14)


@pytest.mark.parametrize("x", [(1, 1, 1), (2, 1, 2), (0, 2, 3), (3, 0, 2), (1, 3, 0), (0, 0, 4)])
def test_zeta_matches_expanded_tree_oracle(x):
    t = 0.8
    a, V = THREE.alpha, THREE.V
    xv = np.array(x, dtype=float)
    T = brute_cluster_tree_weight(V.tolist(), x)
    expected = (
        np.prod(a**xv) / np.prod([math.factorial(c) for c in x])
        * T * t ** (sum(x) - 1) * math.exp(-(xv @ V @ a) * t)
    )
    assert zeta(THREE, x, t) == pytest.approx(expected, rel=1e-10, abs=1e-300)


def test_zeta_underflows_to_zero():
    assert zeta(ONE, (400,), 50.0) == 0.0


def test_small_t_behaviour():
    t = 1e-6
    for i, a in enumerate(BIPARTITE.alpha):
        x = [0, 0]
        x[i] = 1
        assert zeta(BIPARTITE, x, t) == pytest.approx(a, rel=1e-4)
    # zeta_x(t) = O(t^{|x|-1})
    for x in [(1, 1), (2, 1), (2, 2)]:
        r = zeta(BIPARTITE, x, 2 * t) / zeta(BIPARTITE, x, t)
        assert r == pytest.approx(2 ** (sum(x) - 1), rel=1e-3)


@pytest.mark.parametrize("params", [ONE, BIPARTITE, THREE], ids=["one", "bipartite", "three"])
def test_derivative_matches_finite_difference(params):
    tg = gelation_time(params)
    xs = enumerate_sizes(params.k, 4)
    for t in (0.3 * tg, 0.9 * tg, 1.7 * tg, 4 * tg):
        h = 1e-6 * t
        for x in xs:
            d = dzeta_dt(params, x, t)
            fd = (zeta(params, x, t + h) - zeta(params, x, t - h)) / (2 * h)
            scale = max(abs(d), zeta(params, x, t) / t, 1e-300)
            assert abs(d - fd) <= 1e-6 * scale


def test_mse_residual_examples():
    for t in (0.1, 1.0, 5.0):
        assert mse_residual(ONE, (1,), t) == pytest.approx(0.0, abs=1e-15)
    assert abs(mse_residual(ONE, (3,), 0.7)) < 1e-10
    assert abs(mse_residual(BIPARTITE, (2, 1), 0.05)) < 1e-9 * zeta(BIPARTITE, (2, 1), 0.05)


def test_mse_one_type_against_closed_form_oracle():
    # both sides built from the direct one-type formula
    t, l = 0.7, 3
    z = lambda j: one_type_zeta(j, t)
    gain = 0.5 * sum(a * (l - a) * z(a) * z(l - a) for a in range(1, l))
    d = z(l) * ((l - 1) / t - l)
    assert d - (gain - l * z(l)) == pytest.approx(0.0, abs=1e-14)
    assert mse_residual(ONE, (l,), t) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("params", [BIPARTITE, THREE], ids=["bipartite", "three"])
def test_mse_residual_relative_grid(params):
    tg = gelation_time(params)
    for t in (0.2 * tg, tg, 2.5 * tg, 8 * tg):
        for x in enumerate_sizes(params.k, 6):
            d, loss, gain = mse_terms(params, x, t)
            scale = max(abs(d), abs(loss), abs(gain))
            assert abs(d - (gain - loss)) <= 1e-9 * scale


def test_total_mass_subcritical_one_type():
    mass, tail = total_mass(ONE, 0.5, 60)
    assert mass[0] == pytest.approx(1.0, abs=1e-6)
    assert tail < 1e-7


def test_total_mass_supercritical_one_type():
    mass, tail = total_mass(ONE, 2.0, 60)
    assert abs(mass[0] - X_KEPT / 2) <= 1e-8 + tail


def test_total_mass_one_type_termwise():
    t = 2.0
    mass, _ = total_mass(ONE, t, 60)
    direct = sum(l * one_type_zeta(l, t) for l in range(1, 61))
    assert mass[0] == pytest.approx(direct, rel=1e-12)


def test_total_mass_bipartite_subcritical():
    mass, tail = total_mass(BIPARTITE, 0.1, 160)
    assert tail < 1e-9
    assert np.all(np.abs(mass - BIPARTITE.alpha) <= 1e-6 + tail)


@pytest.mark.parametrize("params", [BIPARTITE, THREE], ids=["bipartite", "three"])
def test_total_mass_post_gel_below_alpha_and_matches_inversion(params):
    tg = gelation_time(params)
    for f in (2.0, 3.0):
        t = f * tg
        mass, tail = total_mass(params, t, 60 if params.k == 2 else 40)
        y = invert(params, t).y
        assert np.all(mass < params.alpha)
        assert np.all(np.abs(mass - y / t) <= 1e-6 + tail)


def test_cluster_distribution_iteration():
    dist = ClusterDistribution.compute(BIPARTITE, 0.1, 5)
    assert len(dist) == count_sizes(2, 5)
    items = list(dist)
    assert [x for x, _ in items] == enumerate_sizes(2, 5)
    assert all(np.isfinite(v) and v >= 0 for _, v in items)
    assert dist.entries[(1, 1)] == pytest.approx(zeta(BIPARTITE, (1, 1), 0.1), rel=1e-14)


def test_zeta_rejects_non_finite_time():
    with pytest.raises(ValueError):
        zeta(ONE, (2,), math.inf)
    with pytest.raises(ValueError):
        zeta(ONE, (2,), -0.1)
