import math

import numpy as np
import pytest

from vmcoal.census import mass_of, part_sizes, poisson_band
from vmcoal.graph_sim import (
    _triangle_pairs,
    empirical_phi,
    sample_graph,
    sample_replicas,
    skip_sample,
)
from vmcoal.lambert_euler import invert, invert_1d
from vmcoal.model import ModelParams, gelation_time
from vmcoal.smoluchowski import enumerate_sizes, zeta

ONE = ModelParams([[1]], [1])
MIXED = ModelParams([[1, 2], [2, 0.5]], [0.6, 0.4])


def test_part_sizes_largest_remainder():
    assert part_sizes([15, 2], 100).tolist() == [1500, 200]
    assert part_sizes([0.5, 0.5], 10).tolist() == [5, 5]
    assert part_sizes([1 / 3, 1 / 3, 1 / 3], 10).tolist() == [4, 3, 3]
    assert part_sizes([0.26, 0.26, 0.48], 10).tolist() == [3, 2, 5]


def test_triangle_decoding_is_a_bijection():
    m = 40
    idx = np.arange(m * (m - 1) // 2)
    r, c = _triangle_pairs(idx)
    assert np.all(c < r) and np.all(r < m) and np.all(c >= 0)
    assert len(set(zip(r.tolist(), c.tolist()))) == idx.size


def test_skip_sample_rate_and_range():
    rng = np.random.default_rng(0)
    total, p = 2_000_000, 0.01
    idx = skip_sample(rng, p, total)
    assert np.all(np.diff(idx) > 0) and idx[0] >= 0 and idx[-1] < total
    sd = math.sqrt(total * p * (1 - p))
    assert abs(idx.size - total * p) < 5 * sd
    assert skip_sample(rng, 0.0, 100).size == 0
    assert skip_sample(rng, 1.0, 5).tolist() == [0, 1, 2, 3, 4]


def test_edge_probability_small_graph_frequencies():
    # each of the 3 pairs in a 3-vertex graph appears with 1 - e^{-vt/n}
    p = ModelParams([[2.0]], [1.0])
    n, t = 3, 1.2
    q = 1 - math.exp(-2.0 * t / n)
    reps = 4000
    edges = np.array([sample_graph(p, t, n, s).n_edges for s in range(reps)])
    assert abs(edges.mean() - 3 * q) < 5 * math.sqrt(3 * q * (1 - q) / reps)


def test_t_zero_has_no_edges():
    s = sample_graph(MIXED, 0.0, 1000, seed=3)
    assert s.n_edges == 0
    assert s.giant_size == 1
    assert s.census == {(0, 1): 400, (1, 0): 599}


def test_conservation_and_giant():
    for t in (0.3, 1.0, 3.0):
        s = sample_graph(MIXED, t, 5000, seed=1)
        total = mass_of(s.census, 2) + np.array(s.giant_composition)
        assert total.tolist() == list(s.part_sizes)
        assert sum(s.giant_composition) == s.giant_size
        assert all(sum(x) <= s.giant_size for x in s.census)
        assert all(c >= 1 for c in s.census.values())


def test_deterministic_per_seed():
    a = sample_graph(MIXED, 1.3, 3000, seed=42)
    b = sample_graph(MIXED, 1.3, 3000, seed=42)
    c = sample_graph(MIXED, 1.3, 3000, seed=43)
    assert a == b
    assert a != c


def test_empirical_phi():
    s = sample_graph(ONE, 0.5, 1000, seed=0)
    phi = empirical_phi(s)
    assert phi == {x: c / 1000 for x, c in s.census.items()}


def test_dense_regime_rejected():
    with pytest.raises(ValueError):
        sample_graph(ONE, 50.0, 10, seed=0)


def _band_majority(params, t, n, seeds, nmax=8):
    passes = 0
    for seed in seeds:
        s = sample_graph(params, t, n, seed)
        res = poisson_band(s.census, lambda x: zeta(params, x, t) * n, enumerate_sizes(params.k, nmax))
        assert res, "no size had an expected count >= 50"
        passes += all(r.ok for r in res)
    return passes


def test_subcritical_census_matches_zeta_mixed():
    t = 0.5 * gelation_time(MIXED)
    assert _band_majority(MIXED, t, 100_000, [1, 2, 3]) >= 2


def test_supercritical_giant_composition():
    t = 2.0 * gelation_time(MIXED)
    n = 100_000
    y = invert(MIXED, t).y
    s = sample_graph(MIXED, t, n, seed=9)
    expected = MIXED.alpha - y / t
    got = np.array(s.giant_composition) / n
    # fluctuations of the giant are O(sqrt(n)); 5 standard-deviation-sized band
    assert np.all(np.abs(got - expected) <= 5 / math.sqrt(n) * np.sqrt(MIXED.alpha))


def test_finite_mass_deficit_one_type():
    n, t = 100_000, 2.0
    s = sample_graph(ONE, t, n, seed=4)
    finite = sum(sum(x) * c for x, c in s.census.items()) / n
    assert abs(finite - invert_1d(t) / t) < 0.01


def test_threshold_location():
    n = 100_000
    tg = gelation_time(MIXED)
    below = sample_graph(MIXED, 0.9 * tg, n, seed=1)
    above = sample_graph(MIXED, 1.5 * tg, n, seed=1)
    assert below.giant_size / below.n_vertices < 0.01
    assert above.giant_size / above.n_vertices > 0.05


def test_replicas_use_xor_seeds():
    reps = sample_replicas(ONE, 0.5, 500, seed=6, replicas=3)
    assert [r.seed for r in reps] == [6, 7, 4]
