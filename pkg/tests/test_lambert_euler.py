import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vmcoal.branching import extinction_fixed_point, mean_matrix
from vmcoal.errors import NoConvergence
from vmcoal.lambert_euler import inversion_residual, invert, invert_1d, trace_post_gel
from vmcoal.model import ModelParams, Phase, gelation_time, spectral_radius, validate

from oracles import small_lambert_root

ONE = ModelParams([[1]], [1])
BIPARTITE = ModelParams([[0, 1], [1, 0]], [15, 2])

# frozen from tests/oracles.small_lambert_root (bisection on log x - x)
X_AT_2 = 0.4063757399599599
X_AT_5 = 0.03488576825572369


def test_oracle_values_frozen():
    assert small_lambert_root(2.0) == pytest.approx(X_AT_2, abs=1e-15)
    assert small_lambert_root(5.0) == pytest.approx(X_AT_5, abs=1e-15)


def test_invert_1d_examples():
    assert invert_1d(1.0) == 1.0
    assert invert_1d(0.3) == 0.3
    assert invert_1d(2.0) == pytest.approx(X_AT_2, abs=1e-14)
    assert invert_1d(5.0) == pytest.approx(X_AT_5, abs=1e-14)


def test_invert_1d_decreasing_after_one():
    ts = np.linspace(1.01, 20, 200)
    xs = [invert_1d(t) for t in ts]
    assert all(b < a for a, b in zip(xs, xs[1:]))
    assert all(x < t for x, t in zip(xs, ts))
    for t, x in zip(ts, xs):
        assert x * math.exp(-x) == pytest.approx(t * math.exp(-t), rel=1e-12)


def test_invert_one_type():
    r = invert(ONE, 0.5)
    assert r.y[0] == 0.5 and r.region.region is Phase.SUBCRITICAL
    r = invert(ONE, 2.0)
    assert r.y[0] == pytest.approx(X_AT_2, abs=1e-12)
    assert r.residual <= 1e-12
    assert r.region.region is Phase.SUPERCRITICAL


def test_invert_at_critical_time_returns_alpha_t():
    t = 1 / math.sqrt(30)
    r = invert(BIPARTITE, t)
    assert r.region.region is Phase.CRITICAL
    assert np.allclose(r.y, [15 / math.sqrt(30), 2 / math.sqrt(30)], rtol=1e-14)


@st.composite
def supercritical_cases(draw):
    k = draw(st.integers(1, 4))
    V = np.zeros((k, k))
    for i in range(k):
        for j in range(i, k):
            V[i, j] = V[j, i] = draw(st.sampled_from([0.0, 0.3, 1.0, 2.0]))
    for i in range(k - 1):
        V[i, i + 1] = V[i + 1, i] = max(V[i, i + 1], 0.5)
    if k == 1:
        V[0, 0] = 1.0
    alpha = draw(st.lists(st.floats(0.2, 4.0), min_size=k, max_size=k))
    p = validate(ModelParams(V, alpha))
    return p, gelation_time(p) * draw(st.floats(1.05, 6.0))


@settings(max_examples=40, deadline=None)
@given(supercritical_cases())
def test_invert_properties(case):
    params, t = case
    r = invert(params, t)
    at = params.alpha * t
    assert r.residual <= 1e-12
    assert np.all(r.y >= 0) and np.all(r.y < at)
    # the solution lies in the closed subcritical region
    assert spectral_radius(params.V * r.y[None, :]) <= 1 + 1e-9
    # same answer as the branching fixed point, scaled
    eta = extinction_fixed_point(mean_matrix(params, t)).eta
    assert np.allclose(eta * at, r.y, rtol=0, atol=1e-10)


def test_invert_iteration_monotone_and_bounded():
    t = 0.5
    at = BIPARTITE.alpha * t
    y = np.zeros(2)
    for _ in range(500):
        nxt = at * np.exp(BIPARTITE.V @ (y - at))
        assert np.all(nxt >= y) and np.all(nxt <= at)
        y = nxt
    assert inversion_residual(BIPARTITE, y, t) < 1e-12


def test_invert_no_convergence_budget():
    t = gelation_time(BIPARTITE) * 1.001
    with pytest.raises(NoConvergence):
        invert(BIPARTITE, t, max_iter=5)


def test_trace_one_type_decreasing():
    ys = [r.y[0] for r in trace_post_gel(ONE, [1.5, 2.0, 3.0])]
    assert ys[0] > ys[1] > ys[2]


def test_trace_subcritical_grid_is_alpha_t():
    tg = gelation_time(BIPARTITE)
    grid = np.linspace(0.1, 0.99, 7) * tg
    for t, r in zip(grid, trace_post_gel(BIPARTITE, grid)):
        assert np.array_equal(r.y, BIPARTITE.alpha * t)


def test_trace_rejects_unsorted_grid():
    with pytest.raises(ValueError):
        trace_post_gel(ONE, [2.0, 1.5])


def test_bipartite_post_gel_down_up_down():
    tg = gelation_time(BIPARTITE)
    grid = np.linspace(tg, 3.0, 201)[1:]
    y1 = np.array([r.y[0] for r in trace_post_gel(BIPARTITE, grid)])
    signs = np.sign(np.diff(y1))
    assert np.all(signs != 0)
    changes = np.flatnonzero(np.diff(signs))
    assert len(changes) == 2
    assert signs[0] < 0 and signs[changes[0] + 1] > 0 and signs[-1] < 0
