import numpy as np
import pytest

from conftest import two_cliques

from semicut.expander import (
    SpectralProfile,
    algebraic_expansion,
    planted_expander_balanced_cut,
    planted_expander_sse,
)
from semicut.graphs import Graph, complete_graph, cycle_graph
from semicut.instances import generate_planted_expander


def test_lambda2_complete_graph():
    assert algebraic_expansion(complete_graph(4)).lambda2 == pytest.approx(4 / 3, abs=1e-9)


def test_lambda2_cycle():
    assert algebraic_expansion(cycle_graph(4)).lambda2 == pytest.approx(1.0, abs=1e-9)


def test_lambda2_disconnected_regular():
    g = Graph(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
    assert algebraic_expansion(g).lambda2 == pytest.approx(0.0, abs=1e-9)


def test_lambda2_complete_family():
    for m in range(3, 51):
        prof = algebraic_expansion(complete_graph(m))
        assert abs(prof.lambda2 - m / (m - 1)) <= 1e-9


def test_regularity_check():
    g = Graph(4, [(0, 1), (1, 2)])
    with pytest.raises(ValueError):
        algebraic_expansion(g, assume_regular=True)


def test_spectral_profile_range():
    with pytest.raises(ValueError):
        SpectralProfile(lambda2=2.5, degree=3, m=9)


def test_planted_bc_two_disjoint_cliques():
    g = two_cliques(10, 10)
    res = planted_expander_balanced_cut(g, seed=2)
    assert res.boundary_cost == 0
    assert 20 / 8 <= len(res.side) <= 4 * 20 / 5


def test_planted_bc_certificate():
    inst = generate_planted_expander(200, 0.5, 99, 50, seed=7)
    res = planted_expander_balanced_cut(inst.graph, hidden_side=range(100), seed=3)
    n = inst.graph.n
    assert n / 8 <= len(res.side) <= 4 * n / 5
    assert res.diagnostics["certificate_ok"]
    assert res.diagnostics["half_mass_ball"]["ok"]


def test_planted_bc_rejects_odd_n():
    with pytest.raises(ValueError):
        planted_expander_balanced_cut(Graph(5, [(0, 1)]))


def test_planted_sse_two_disjoint_cliques():
    g = two_cliques(5, 15)
    res = planted_expander_sse(g, 0.25, seed=4)
    assert res.boundary_cost == 0
    assert set(res.side) <= set(range(5))
    assert 5 / 4 <= len(res.side) <= 10


def test_planted_sse_recovers_planted_side():
    inst = generate_planted_expander(120, 0.25, 19, 30, seed=8)
    res = planted_expander_sse(inst.graph, 0.25, hidden_side=range(30), seed=5)
    rho_n = 30
    assert rho_n / 4 <= len(res.side) <= 2 * rho_n
    assert res.boundary_cost <= 33 * 30
    assert res.diagnostics["half_mass_ball"]["ok"]


def test_planted_sse_rho_validation():
    with pytest.raises(ValueError):
        planted_expander_sse(two_cliques(5, 5), 0.5)
