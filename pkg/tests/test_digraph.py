import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rcpp.digraph import (
    Digraph, build_mixing, is_strongly_connected, make_ring, perron_vector, root_set,
)
from rcpp.errors import AssumptionViolation

from .conftest import closure


def chain(n):
    return Digraph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


# ---- construction -------------------------------------------------------------

def test_ring_single_node_is_a_self_loop():
    g = make_ring(1, 0)
    assert g.edges == ((0, 0),)
    assert is_strongly_connected(g)


def test_ring_of_three_edge_set():
    g = make_ring(3, 0)
    assert set(g.edges) == {(0, 0), (1, 1), (2, 2), (0, 1), (1, 2), (2, 0)}


def test_ring_with_chords_counts_and_connectivity():
    g = make_ring(5, 3, seed=0)
    assert len(g.edges) == 5 + 5 + 3
    assert len(set(g.edges)) == len(g.edges)
    assert is_strongly_connected(g)


def test_ring_chords_are_seeded():
    assert make_ring(8, 10, seed=3) == make_ring(8, 10, seed=3)
    assert make_ring(8, 10, seed=3) != make_ring(8, 10, seed=4)


def test_ring_too_many_chords_rejected():
    # n = 4: 12 off-diagonal pairs, 4 used by the cycle
    make_ring(4, 8)
    with pytest.raises(ValueError):
        make_ring(4, 9)
    with pytest.raises(ValueError):
        make_ring(4, -1)


def test_invalid_edges_rejected():
    with pytest.raises(ValueError):
        Digraph.from_edges(3, [(0, 3)])
    with pytest.raises(ValueError):
        Digraph.from_edges(3, [(0, 1), (0, 1)])


def test_out_degrees_exclude_self():
    g = Digraph.from_edges(3, [(0, 0), (0, 1), (0, 2), (1, 2)])
    assert g.out_degrees().tolist() == [2, 1, 0]


def test_edgelist_round_trip():
    g = make_ring(7, 9, seed=2)
    text = g.to_edgelist()
    assert text.splitlines()[0] == "7"
    assert Digraph.from_edgelist(text) == g


def test_edgelist_rejects_malformed_rows():
    with pytest.raises(ValueError):
        Digraph.from_edgelist("3\n0 1 2\n")
    with pytest.raises(ValueError):
        Digraph.from_edgelist("0 1\n")


# ---- reachability -------------------------------------------------------------

def test_strong_connectivity_examples():
    assert is_strongly_connected(make_ring(6, 0))
    assert not is_strongly_connected(chain(3))


def test_root_set_examples():
    assert root_set(chain(3)) == {0}
    assert root_set(chain(3).reverse()) == {2}
    two_islands = Digraph.from_edges(4, [(0, 1), (1, 0), (2, 3), (3, 2)])
    assert root_set(two_islands) == set()
    assert root_set(make_ring(5, 0)) == set(range(5))


def brute_roots(n, edges):
    A = closure(n, edges)
    return {i for i in range(n) if A[i].all()}


def test_root_set_exhaustive_three_nodes():
    pairs = [(i, j) for i in range(3) for j in range(3) if i != j]
    for mask in range(1 << len(pairs)):
        edges = [p for b, p in enumerate(pairs) if mask >> b & 1]
        g = Digraph.from_edges(3, edges)
        assert root_set(g) == brute_roots(3, edges)
        assert is_strongly_connected(g) == closure(3, edges).all()


@st.composite
def small_graphs(draw):
    n = draw(st.integers(1, 6))
    pairs = [(i, j) for i in range(n) for j in range(n)]
    edges = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs)))
    return Digraph.from_edges(n, edges)


@settings(max_examples=300, deadline=None)
@given(small_graphs())
def test_root_set_matches_transitive_closure(g):
    assert root_set(g) == brute_roots(g.n, g.edges)
    assert is_strongly_connected(g) == bool(closure(g.n, g.edges).all())


# ---- mixing matrices ----------------------------------------------------------

def test_three_cycle_equal_weights():
    mix = build_mixing(make_ring(3, 0))
    circ = np.array([[0.5, 0, 0.5], [0.5, 0.5, 0], [0, 0.5, 0.5]])
    np.testing.assert_allclose(mix.R, circ, atol=1e-15)
    np.testing.assert_allclose(mix.C, circ, atol=1e-15)
    np.testing.assert_allclose(mix.u_R, np.ones(3), atol=1e-12)
    np.testing.assert_allclose(mix.u_C, np.ones(3), atol=1e-12)
    assert mix.check() == []


def test_chain_pull_with_reversed_push_concentrates_on_source():
    # pulling along 0->1->2 and pushing back along 2->1->0 share the root 0
    mix = build_mixing(chain(3), chain(3).reverse())
    np.testing.assert_allclose(mix.u_R, [3, 0, 0], atol=1e-9)
    np.testing.assert_allclose(mix.u_C, [3, 0, 0], atol=1e-9)
    assert mix.check() == []


def test_same_chain_for_both_graphs_has_no_common_root():
    with pytest.raises(AssumptionViolation, match="root sets"):
        build_mixing(chain(3), chain(3))


def test_disconnected_push_graph_rejected():
    g_C = Digraph.from_edges(4, [(0, 1), (1, 0), (2, 3), (3, 2)])
    with pytest.raises(AssumptionViolation):
        build_mixing(make_ring(4, 0), g_C)


def test_node_count_mismatch_rejected():
    with pytest.raises(ValueError):
        build_mixing(make_ring(3), make_ring(4))


def test_support_follows_graphs():
    g = make_ring(6, 4, seed=1)
    mix = build_mixing(g, seed=5)
    allowed = np.eye(6, dtype=bool)
    for i, j in g.edges:
        allowed[j, i] = True
    assert not (mix.R[~allowed] > 0).any()
    assert not (mix.C[~allowed] > 0).any()
    assert (mix.R[allowed] > 0).all() and (mix.C[allowed] > 0).all()


@settings(max_examples=40, deadline=None)
@given(n=st.integers(3, 20), seed=st.integers(0, 10_000))
def test_random_instances_pass_all_checks(n, seed):
    rng = np.random.default_rng(seed)
    extra = int(rng.integers(0, max(n * (n - 1) - n, 0) + 1))
    mix = build_mixing(make_ring(n, extra, seed=seed), seed=seed)
    assert mix.check() == []
    # eigenvectors against a dense eigensolver
    w, V = np.linalg.eig(mix.R.T)
    v = np.real(V[:, np.argmin(abs(w - 1))])
    np.testing.assert_allclose(mix.u_R, v * n / v.sum(), atol=1e-8)


def test_check_flags_broken_matrices():
    mix = build_mixing(make_ring(4, 2, seed=0), seed=0)
    bad = type(mix)(mix.R * 1.01, mix.C, mix.u_R, mix.u_C, mix.g_R, mix.g_C)
    assert "R is not row-stochastic" in bad.check()
    bad = type(mix)(mix.R, mix.C, mix.u_R + 0.1, mix.u_C, mix.g_R, mix.g_C)
    assert any("u_R" in p for p in bad.check())


def test_perron_vector_of_doubly_stochastic_is_uniform():
    P = np.array([[0.2, 0.8, 0.0], [0.0, 0.2, 0.8], [0.8, 0.0, 0.2]])
    np.testing.assert_allclose(perron_vector(P), np.ones(3), atol=1e-12)
