import dataclasses

import numpy as np
import pytest

from conftest import random_graph, two_cliques

from semicut.graphs import Graph, complete_graph, cycle_graph, path_graph
from semicut.instances import AdversaryStrategy, balanced_bipartition, generate_sr
from semicut.sdp import Embedding
from semicut.sparsify import sparsify
from semicut.util import substream
from semicut.verify import (
    brute_force_balanced_cut,
    brute_force_balanced_cut_bitmask,
    brute_force_multicut,
    brute_force_multicut_recursive,
    brute_force_sparsest_cut,
    brute_force_sse,
    brute_force_sse_bitmask,
    fuzz_geometric_expansion,
    geometric_expansion_check,
    invariant_audit,
)


def test_balanced_oracle_examples():
    assert brute_force_balanced_cut(complete_graph(4))[1] == 4
    assert brute_force_balanced_cut(two_cliques(6, 6, [(0, 6)]))[1] == 1
    assert brute_force_balanced_cut(path_graph(6))[1] == 1


def test_balanced_oracle_size_cap():
    with pytest.raises(ValueError):
        brute_force_balanced_cut(complete_graph(22))
    with pytest.raises(ValueError):
        brute_force_balanced_cut(complete_graph(5))


def test_sse_oracle_examples():
    assert brute_force_sse(cycle_graph(6), 1 / 3)[1] == 2
    g = Graph(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
    assert brute_force_sse(g, 0.5)[1] == 0


def test_multicut_oracle_examples():
    assert brute_force_multicut(path_graph(3), [(0, 2)])[1] == 1
    assert brute_force_multicut(complete_graph(4), [])[1] == 0
    assert brute_force_multicut(complete_graph(4), [(0, 1), (2, 3)])[1] == 4


def test_dual_enumerators_agree():
    rng = np.random.default_rng(11)
    for trial in range(100):
        n = int(rng.choice([6, 8, 10]))
        g = random_graph(n, float(rng.uniform(0.2, 0.7)), 500 + trial)
        assert brute_force_balanced_cut(g)[1] == brute_force_balanced_cut_bitmask(g)
        rho = (n // 2) / n if trial % 2 else (max(1, n // 4)) / n
        assert brute_force_sse(g, rho)[1] == brute_force_sse_bitmask(g, rho)
    for trial in range(100):
        n = int(rng.choice([5, 6, 7]))
        g = random_graph(n, float(rng.uniform(0.3, 0.7)), 900 + trial)
        pairs = [(0, n - 1)] if trial % 2 else [(0, n - 1), (1, n - 2)]
        assert brute_force_multicut(g, pairs)[1] == brute_force_multicut_recursive(g, pairs)


def test_sparsest_oracle():
    side, val = brute_force_sparsest_cut(two_cliques(8, 8, [(0, 8)]))
    assert val == pytest.approx(1 / 8)
    assert len(side) == 8


def test_geo_expansion_empty_m_passes():
    phi = Embedding(np.eye(4))
    res = geometric_expansion_check([(0, 1)], phi, [], 0.25, X=5.0)
    assert res.passed
    assert res.short_count == 0


def test_geo_expansion_long_edges_pass():
    phi = Embedding(np.eye(40))  # pairwise distance 2 > delta/2
    cut = [(i, i + 1) for i in range(0, 30, 2)]
    res = geometric_expansion_check(cut, phi, range(40), 0.25, X=0.0)
    assert res.passed


def _paired_embedding(n: int, k_pairs: int) -> tuple[Embedding, list]:
    # k coincident pairs on distinct axes (short cut edges of length 0),
    # everyone else on private axes; heavy-free needs delta^2 n > 2
    X = np.zeros((n, n))
    cut = []
    col = 0
    for i in range(k_pairs):
        X[2 * i, col] = 1.0
        X[2 * i + 1, col] = 1.0
        cut.append((2 * i, 2 * i + 1))
        col += 1
    for v in range(2 * k_pairs, n):
        X[v, col] = 1.0
        col += 1
    return Embedding(X), cut


def test_geo_expansion_boundary_count():
    delta = 0.25
    X_val = 80.0  # bound = 2 delta^2 X = 10
    n = 64  # delta^2 n = 4 > 2, so coincident pairs stay light
    phi, cut = _paired_embedding(n, 10)
    res = geometric_expansion_check(cut, phi, range(n), delta, X_val)
    assert res.passed and res.short_count == 10
    phi, cut = _paired_embedding(n, 11)
    res = geometric_expansion_check(cut, phi, range(n), delta, X_val)
    assert res.status == "violation" and res.short_count == 11


def test_geo_expansion_not_applicable_when_heavy():
    n = 16  # delta^2 n = 1: every vertex is heavy at delta = 1/4
    phi, cut = _paired_embedding(n, 2)
    res = geometric_expansion_check(cut, phi, range(n), 0.25, X=100.0)
    assert res.status == "not-applicable"


def test_geo_expansion_delta_validation():
    phi = Embedding(np.eye(4))
    with pytest.raises(ValueError):
        geometric_expansion_check([], phi, range(4), 0.3, X=1.0)


@pytest.fixture(scope="module")
def audited_run():
    P = balanced_bipartition(60)
    inst = generate_sr(P, 0.15, AdversaryStrategy(inside="cliques"), seed=33)
    out = sparsify(inst.graph, "balanced-cut", 16, substream(33, "h"), solve_seed=2)
    return inst, out


def test_invariant_audit_passes_on_real_run(audited_run):
    inst, out = audited_run
    rep = invariant_audit(out, inst.graph, "balanced-cut")
    assert rep.passed, rep.failures


def test_invariant_audit_detects_moved_edge(audited_run):
    inst, out = audited_run
    crossing = sorted(out.e_minus)
    # move one piece-crossing edge into E+
    side = {v: 0 for v in out.M}
    for i, p in enumerate(out.pieces, start=1):
        for v in p.vertices:
            side[v] = i
    bad = next(e for e in crossing if side[e[0]] != side[e[1]])
    corrupted = dataclasses.replace(
        out,
        e_plus=frozenset(out.e_plus | {bad}),
        e_minus=frozenset(out.e_minus - {bad}),
    )
    rep = invariant_audit(corrupted, inst.graph, "balanced-cut")
    assert not rep.passed
    assert any(name == "cut-containment" for name, _ in rep.failures)


def test_invariant_audit_detects_oversized_piece(audited_run):
    inst, out = audited_run
    big = dataclasses.replace(out.pieces[0], vertices=tuple(range(55)))
    corrupted = dataclasses.replace(out, pieces=(big,) + out.pieces[1:])
    rep = invariant_audit(corrupted, inst.graph, "balanced-cut")
    assert not rep.passed
    assert any(name == "balance-bound" for name, _ in rep.failures)


def test_fuzzer_finds_nothing_with_generous_bound():
    g = two_cliques(16, 16, [(0, 16), (1, 17)])
    cut = [(0, 16), (1, 17)]
    res = fuzz_geometric_expansion(cut, g.n, 0.25, X=1000.0, seed=5, tries=5, steps=30)
    assert res is None
