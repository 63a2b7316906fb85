import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lnlasso import (EmpiricalGraph, InvalidArgumentError, ParseError, apply_incidence,
                     apply_incidence_adjoint, estimate_precond_norm, tv_norm)
from lnlasso.graph import incidence_matrix, read_edges, write_edges
from lnlasso.synth import chain_spec, generate, grid_spec

from oracles import random_graph


def two_node():
    return EmpiricalGraph.from_edges(2, [(0, 1, 2.0)])


# -- construction ------------------------------------------------------------

def test_from_edges_normalizes_orientation_and_order():
    g = EmpiricalGraph.from_edges(4, [(3, 2, 1.0), (1, 0, 2.0), (0, 3, 0.5)])
    assert list(g.edges()) == [(0, 1, 2.0), (0, 3, 0.5), (2, 3, 1.0)]
    np.testing.assert_array_equal(g.degrees, [2.5, 2.0, 1.0, 1.5])


def test_degrees_match_incident_weight_sums(rng):
    for _ in range(20):
        g = random_graph(rng)
        expect = np.zeros(g.num_nodes)
        for i, j, a in g.edges():
            expect[i] += a
            expect[j] += a
        np.testing.assert_allclose(g.degrees, expect, rtol=1e-15)


@pytest.mark.parametrize("edges, n", [
    ([(0, 1, 1.0), (1, 0, 2.0)], 2),      # duplicate undirected edge
    ([(0, 0, 1.0), (0, 1, 1.0)], 2),      # self-loop
    ([(0, 1, 0.0)], 2),                   # zero weight
    ([(0, 1, -1.0)], 2),                  # negative weight
    ([(0, 1, 1.0)], 3),                   # node 2 isolated
    ([(0, 5, 1.0)], 3),                   # id out of range
])
def test_invalid_graphs_rejected(edges, n):
    with pytest.raises(InvalidArgumentError):
        EmpiricalGraph.from_edges(n, edges)


def test_unsorted_raw_edges_rejected():
    with pytest.raises(InvalidArgumentError):
        EmpiricalGraph(3, [1, 0], [2, 1], [1.0, 1.0])


def test_graph_arrays_are_read_only():
    g = two_node()
    with pytest.raises(ValueError):
        g.weights[0] = 5.0


# -- incidence operator ------------------------------------------------------

def test_incidence_hand_values():
    np.testing.assert_array_equal(apply_incidence(two_node(), [3.0, 1.0]), [4.0])
    chain = EmpiricalGraph.from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)])
    np.testing.assert_array_equal(apply_incidence(chain, [1.0, 0.0, 1.0]), [1.0, -1.0])


def test_adjoint_hand_values():
    np.testing.assert_array_equal(apply_incidence_adjoint(two_node(), [1.0]), [2.0, -2.0])


def test_constant_signal_and_zero_dual(rng):
    g = random_graph(rng)
    c = rng.standard_normal(3)
    assert np.all(apply_incidence(g, np.tile(c, (g.num_nodes, 1))) == 0)
    assert np.all(apply_incidence_adjoint(g, np.zeros((g.num_edges, 3))) == 0)


def test_dense_equivalence_and_adjointness(rng):
    for _ in range(50):
        g = random_graph(rng)
        d = int(rng.integers(1, 4))
        w = rng.standard_normal((g.num_nodes, d))
        u = rng.standard_normal((g.num_edges, d))
        D = incidence_matrix(g, d)
        np.testing.assert_allclose(apply_incidence(g, w).ravel(), D @ w.ravel(),
                                   rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(apply_incidence_adjoint(g, u).ravel(), D.T @ u.ravel(),
                                   rtol=1e-12, atol=1e-12)
        lhs = np.sum(apply_incidence(g, w) * u)
        rhs = np.sum(w * apply_incidence_adjoint(g, u))
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


def test_dimension_mismatch_raises():
    g = two_node()
    with pytest.raises(InvalidArgumentError):
        apply_incidence(g, np.zeros((3, 2)))
    with pytest.raises(InvalidArgumentError):
        apply_incidence_adjoint(g, np.zeros((2, 2)))
    with pytest.raises(InvalidArgumentError):
        tv_norm(g, np.zeros(5))


# -- total variation ---------------------------------------------------------

def test_tv_hand_value():
    assert tv_norm(two_node(), [3.0, 1.0]) == 4.0


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), alpha=st.floats(-10, 10), d=st.integers(1, 3))
def test_tv_is_a_seminorm(seed, alpha, d):
    rng = np.random.default_rng(seed)
    g = random_graph(rng)
    w = rng.standard_normal((g.num_nodes, d))
    c = rng.standard_normal(d)
    tv = tv_norm(g, w)
    blocks = np.linalg.norm(apply_incidence(g, w), axis=1).sum()
    assert tv == pytest.approx(blocks, rel=1e-12)
    assert tv_norm(g, w + c) == pytest.approx(tv, rel=1e-12, abs=1e-12)
    assert tv_norm(g, alpha * w) == pytest.approx(abs(alpha) * tv, rel=1e-12, abs=1e-12)


# -- preconditioner norm -----------------------------------------------------

def test_precond_norm_single_edge():
    g = EmpiricalGraph.from_edges(2, [(0, 1, 1.0)])
    sigma, tau = np.array([0.5]), np.array([0.5, 0.5])
    K = np.sqrt(sigma)[:, None] * incidence_matrix(g) * np.sqrt(tau)[None, :]
    dense = np.linalg.norm(K, 2) ** 2
    assert dense == pytest.approx(0.5, rel=1e-14)
    assert estimate_precond_norm(g, sigma, tau) == pytest.approx(0.5, rel=1e-12)
    assert estimate_precond_norm(g, sigma, 4 * tau) == pytest.approx(2.0, rel=1e-12)


def test_precond_norm_matches_dense_spectrum(rng):
    for _ in range(10):
        g = random_graph(rng)
        sigma = 1.0 / (2.0 * g.weights)
        tau = 0.9 / g.degrees
        K = np.sqrt(sigma)[:, None] * incidence_matrix(g) * np.sqrt(tau)[None, :]
        dense = np.linalg.norm(K, 2) ** 2
        est = estimate_precond_norm(g, sigma, tau, iters=2000)
        assert est <= dense * (1 + 1e-12)
        assert est == pytest.approx(dense, rel=1e-6)
        assert est < 1


@pytest.mark.parametrize("make", [chain_spec, grid_spec])
def test_paper_preconditioners_admissible_on_benchmarks(make):
    g = generate(make(seed=3)).graph
    est = estimate_precond_norm(g, 1.0 / (2.0 * g.weights), 0.9 / g.degrees)
    assert 0 < est < 1


def test_precond_norm_deterministic_and_validated():
    g = two_node()
    s, t = np.array([0.25]), np.array([0.45, 0.45])
    assert estimate_precond_norm(g, s, t, seed=7) == estimate_precond_norm(g, s, t, seed=7)
    with pytest.raises(InvalidArgumentError):
        estimate_precond_norm(g, np.array([0.0]), t)
    with pytest.raises(InvalidArgumentError):
        estimate_precond_norm(g, s, np.array([0.45, -1.0]))
    with pytest.raises(InvalidArgumentError):
        estimate_precond_norm(g, s, t, iters=0)


# -- edge files --------------------------------------------------------------

def test_edge_file_round_trip(tmp_path, rng):
    g = random_graph(rng)
    path = tmp_path / "edges.csv"
    write_edges(g, path)
    h = read_edges(path, num_nodes=g.num_nodes)
    np.testing.assert_array_equal(h.heads, g.heads)
    np.testing.assert_array_equal(h.tails, g.tails)
    np.testing.assert_array_equal(h.weights, g.weights)


def test_edge_file_flips_reversed_rows(tmp_path):
    path = tmp_path / "edges.csv"
    path.write_text("i,j,weight\n2,1,3.5\n1,0,1\n")
    assert list(read_edges(path).edges()) == [(0, 1, 1.0), (1, 2, 3.5)]


@pytest.mark.parametrize("body, line", [
    ("0,1,1\n5,3,abc\n", 3),
    ("0,1,1\n1,0,2\n", 3),
    ("0,1\n", 2),
    ("0,0,1\n", 2),
    ("0,1,-2\n", 2),
])
def test_malformed_edge_file_names_line(tmp_path, body, line):
    path = tmp_path / "edges.csv"
    path.write_text("i,j,weight\n" + body)
    with pytest.raises(ParseError) as info:
        read_edges(path)
    assert info.value.line == line
    assert f"{path}:{line}:" in str(info.value)


def test_edge_file_bad_header(tmp_path):
    path = tmp_path / "edges.csv"
    path.write_text("a,b,c\n0,1,1\n")
    with pytest.raises(ParseError):
        read_edges(path)
