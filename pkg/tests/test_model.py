import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from netfilt import graph as G
from netfilt import model as M


def path3():
    return G.Graph(3, [(0, 1), (1, 2)])


def test_empty_graph_gives_identity_covariance():
    m = M.build_simple(G.Graph(6, []), 0.7, sigma2=2.5)
    assert not m.B.any()
    assert np.array_equal(M.covariance(m), 2.5 * np.eye(6))


def test_path_graph_entries_and_eigenvalues():
    m = M.build_simple(path3(), 0.5)
    omega = np.eye(3) - m.B
    # I - B = I + q D^{-1/2} A D^{-1/2}; degrees (1, 2, 1)
    c = 0.5 / math.sqrt(2)
    expected = np.array([[1, c, 0], [c, 1, c], [0, c, 1]])
    assert np.allclose(omega, expected, atol=1e-15)
    # tridiagonal Toeplitz oracle: 1 + 2c cos(k pi / 4)
    oracle = sorted(1 + 2 * c * math.cos(k * math.pi / 4) for k in (1, 2, 3))
    assert np.allclose(np.linalg.eigvalsh(omega), oracle, atol=1e-14)
    assert min(oracle) > 0


def test_isolated_vertices_zeroed_or_rejected():
    g = G.Graph(4, [(0, 1)])
    m = M.build_simple(g, 0.5)
    assert not m.B[2:].any() and not m.B[:, 2:].any()
    with pytest.raises(M.ModelError):
        M.build_simple(g, 0.5, strict=True)


def test_q_must_be_positive():
    with pytest.raises(M.ModelError):
        M.build_simple(path3(), 0.0)


@pytest.mark.parametrize("topology", ["er", "ba", "geometric"])
def test_q_125_needs_shrinking(topology):
    g = G.generate(topology, 100, 4, 0)
    nu_min = np.linalg.eigvalsh(M.normalized_adjacency(g))[0]
    assert 1 + 1.25 * nu_min <= 0  # plain q = 1.25 is indefinite on these graphs
    with pytest.raises(M.NotPositiveDefinite):
        M.build_simple(g, 1.25)
    m = M.build_simple(g, 1.25, enforce_pd=True)
    assert m.params["q_effective"] < 1.25
    assert M.lambda_min(m.B) == pytest.approx(0.01, abs=1e-9)
    resid = M.covariance(m) @ (np.eye(100) - m.B) - np.eye(100)
    assert np.abs(resid).max() < 1e-8


def test_enforce_pd_leaves_safe_q_alone():
    m = M.build_simple(path3(), 0.5, enforce_pd=True)
    assert m.params["q_effective"] == 0.5


def test_precision_model_invariants():
    with pytest.raises(M.ModelError):
        M.PrecisionModel(np.ones((2, 3)))
    with pytest.raises(M.ModelError):
        M.PrecisionModel(np.array([[0.1, 0], [0, 0]]))
    with pytest.raises(M.ModelError):
        M.PrecisionModel(np.array([[0, 0.2], [0.1, 0]]))
    with pytest.raises(M.ModelError):
        M.PrecisionModel(np.zeros((2, 2)), sigma2=0)
    with pytest.raises(M.NotPositiveDefinite):
        M.PrecisionModel(np.array([[0, 1.0], [1.0, 0]]))
    m = M.PrecisionModel(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        m.B[0, 1] = 1.0


def test_two_by_two_covariance_closed_form():
    c, s2 = 0.3, 1.7
    m = M.PrecisionModel(np.array([[0, -c], [-c, 0]]), sigma2=s2)
    expected = s2 / (1 - c * c) * np.array([[1, -c], [-c, 1]])
    assert np.allclose(M.covariance(m), expected, rtol=1e-14)
    m2 = M.PrecisionModel(np.array([[0, c], [c, 0]]), sigma2=s2)
    assert np.allclose(M.covariance(m2), s2 / (1 - c * c) * np.array([[1, c], [c, 1]]), rtol=1e-14)


@given(st.integers(0, 10**6))
@settings(max_examples=15, deadline=None)
def test_cholesky_reconstructs(seed):
    m = M.build_simple(G.gen_ba(30, 2, seed), 1.25, enforce_pd=True)
    L = M.cholesky(m).sigma
    S = M.covariance(m)
    assert np.allclose(L, np.tril(L))
    assert np.abs(L @ L.T - S).max() < 1e-8 * np.abs(S).max()


def test_weighted_single_edge():
    g = G.Graph(2, [(0, 1)])
    m = M.build_weighted(g, 1, 1, rng=3)
    w = -m.B[0, 1]
    assert m.params["rescale"] == 1.0
    assert 0 < w < 1
    assert M.lambda_min(m.B) == pytest.approx(1 - w)


@pytest.mark.parametrize("ab", [(1, 1), (0.5, 0.5), (2, 2)])
def test_weighted_pd_floor(ab):
    g = G.gen_er(20, 4, 1)
    m = M.build_weighted(g, *ab, rng=7)
    assert np.linalg.eigvalsh(np.eye(20) - m.B)[0] >= 0.05
    assert np.array_equal(m.B != 0, g.adjacency() == 1)


def test_weighted_pattern_fixed_values_vary():
    g = G.gen_er(30, 4, 0)
    a = M.build_weighted(g, 2, 2, rng=1)
    b = M.build_weighted(g, 2, 2, rng=2)
    assert np.array_equal(a.B != 0, b.B != 0)
    assert not np.array_equal(a.B, b.B)


def test_weighted_needs_edges_and_positive_params():
    with pytest.raises(M.ModelError):
        M.build_weighted(G.Graph(3, []), 1, 1)
    with pytest.raises(M.ModelError):
        M.build_weighted(path3(), 0, 1)


def test_condition3_support_is_max_degree():
    g = G.gen_ba(50, 2, 4)
    m = M.build_simple(g, 0.5)
    assert M.condition3_support(m.B) == G.degrees(g).d_max


@pytest.mark.parametrize("kind", ["simple", "beta"])
def test_json_round_trip_bit_faithful(kind, tmp_path):
    g = G.gen_er(25, 4, 9)
    m = M.build_simple(g, 0.9) if kind == "simple" else M.build_weighted(g, 0.5, 0.5, rng=2)
    path = tmp_path / "m.json"
    M.save_model(m, path)
    back = M.load_model(path)
    assert np.array_equal(back.B, m.B)
    assert back.sigma2 == m.sigma2
    assert back.params == json.loads(json.dumps(m.params))
    d = json.loads(path.read_text())
    assert set(d) >= {"p", "sigma2", "edges"}
