from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semicut.graphs import (
    Graph,
    Partition,
    complete_graph,
    cut_cost,
    cut_cost_restricted,
    cut_edges,
    cycle_graph,
    edge_boundary,
    exact_expansion,
    expansion,
    path_graph,
)


def test_cut_edges_four_cycle():
    P = Partition(4, [[0, 1], [2, 3]])
    cut = cut_edges(P, [(0, 1), (1, 2), (2, 3), (0, 3)])
    assert cut == {(1, 2), (0, 3)}
    assert cut_cost(P, [(0, 1), (1, 2), (2, 3), (0, 3)]) == 2


def test_cut_edges_single_part_and_singletons():
    g = complete_graph(4)
    assert cut_edges(Partition(4, [range(4)]), g.edges) == frozenset()
    assert cut_edges(Partition(4, [[0], [1], [2], [3]]), g.edges) == g.edges


def test_cut_cost_restricted_examples():
    g = cycle_graph(4)
    P = Partition(4, [[0, 1], [2, 3]])
    assert cut_cost_restricted(P, g.edges, range(4)) == cut_cost(P, g.edges)
    assert cut_cost_restricted(P, g.edges, []) == 0
    assert cut_cost_restricted(P, g.edges, [1]) == 1


def test_cut_requires_covered_endpoints():
    P = Partition(3, [[0, 1, 2]])
    with pytest.raises(ValueError):
        cut_edges(P, [(0, 5)])
    with pytest.raises(ValueError):
        cut_cost_restricted(P, [(0, 1)], [7])


def test_edge_boundary_examples():
    assert edge_boundary([0, 1], complete_graph(4)) == 4
    assert edge_boundary(range(4), complete_graph(4)) == 0
    assert edge_boundary([], complete_graph(4)) == 0
    assert edge_boundary([0, 1], path_graph(4)) == 1


def test_expansion_complete_graph():
    val, tag = expansion(complete_graph(4), "exact")
    assert tag == "exact"
    assert val == pytest.approx(2.0)


def test_expansion_disconnected():
    g = Graph(6, [(0, 1), (1, 2), (3, 4), (4, 5)])
    assert exact_expansion(g) == 0.0


def _expansion_oracle(g: Graph) -> float:
    # independent enumerator: combinations instead of bitmasks
    best = None
    for size in range(1, g.n // 2 + 1):
        for S in combinations(range(g.n), size):
            best = min(best, edge_boundary(S, g) / size) if best is not None else edge_boundary(S, g) / size
    return best


def test_expansion_c6_derived():
    val = exact_expansion(cycle_graph(6))
    assert val == pytest.approx(_expansion_oracle(cycle_graph(6)))
    assert val == pytest.approx(2.0 / 3.0)


def test_expansion_matches_oracle_on_small_graphs():
    rng = np.random.default_rng(7)
    for trial in range(25):
        n = int(rng.integers(3, 11))
        edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < 0.45]
        g = Graph(n, edges)
        assert exact_expansion(g) == pytest.approx(_expansion_oracle(g))


def test_expansion_bound_is_lower_bound():
    rng = np.random.default_rng(3)
    for trial in range(15):
        n = int(rng.integers(4, 11))
        edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < 0.5]
        g = Graph(n, edges)
        bound, tag = expansion(g, "certified-lower-bound")
        assert tag == "lower-bound"
        assert bound <= exact_expansion(g) + 1e-9


def test_expansion_size_cap():
    with pytest.raises(ValueError):
        exact_expansion(complete_graph(23))


def test_graph_rejects_loops_and_duplicates():
    with pytest.raises(ValueError):
        Graph(3, [(1, 1)])
    with pytest.raises(ValueError):
        Graph(3, [(0, 1), (1, 0)])
    with pytest.raises(ValueError):
        Graph(2, [(0, 5)])


def test_edge_list_round_trip():
    g = Graph(5, [(0, 1), (1, 2), (0, 4)])
    assert Graph.from_text(g.to_text()) == g


def test_edge_list_parser_rejections():
    with pytest.raises(ValueError):
        Graph.from_text("2 1\n1 1\n")
    with pytest.raises(ValueError):
        Graph.from_text("3 2\n0 1\n0 1\n")
    with pytest.raises(ValueError):
        Graph.from_text("3 1\n1 0\n")
    with pytest.raises(ValueError):
        Graph.from_text("3 2\n0 1\n")


def test_partition_validation():
    with pytest.raises(ValueError):
        Partition(3, [[0, 1], [1, 2]])
    with pytest.raises(ValueError):
        Partition(3, [[0, 1]])
    P = Partition.two_sided(4, [1, 3])
    assert P.part_of(1) == P.part_of(3)
    assert P.part_of(0) != P.part_of(1)


@st.composite
def graph_and_partition(draw):
    n = draw(st.integers(min_value=2, max_value=9))
    edges = [
        (u, v)
        for u in range(n)
        for v in range(u + 1, n)
        if draw(st.booleans())
    ]
    labels = [draw(st.integers(min_value=0, max_value=2)) for _ in range(n)]
    return Graph(n, edges), Partition.from_assignment(labels)


@given(graph_and_partition())
@settings(max_examples=60, deadline=None)
def test_cost_equals_restriction_to_all_vertices(gp):
    g, P = gp
    assert cut_cost(P, g.edges) == cut_cost_restricted(P, g.edges, range(g.n))


@given(graph_and_partition(), st.data())
@settings(max_examples=60, deadline=None)
def test_restricted_cost_monotone(gp, data):
    g, P = gp
    small = {v for v in range(g.n) if data.draw(st.booleans())}
    extra = {v for v in range(g.n) if data.draw(st.booleans())}
    big = small | extra
    assert cut_cost_restricted(P, g.edges, small) <= cut_cost_restricted(P, g.edges, big)


@given(graph_and_partition(), st.data())
@settings(max_examples=60, deadline=None)
def test_edge_boundary_is_two_sided_cut(gp, data):
    g, _ = gp
    S = {v for v in range(g.n) if data.draw(st.booleans())}
    two = Partition.two_sided(g.n, S)
    assert edge_boundary(S, g) == cut_cost(two, g.edges)
