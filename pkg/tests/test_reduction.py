import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pytest import approx

from conperc import flower
from conperc.connectivity import CLASSICAL, QUANTUM, para, seri
from conperc.reduction import (
    MeshGraph,
    SolverError,
    StarGraph,
    TwoTerminalNetwork,
    broyden_solve,
    cross_weight,
    mesh_to_star,
    reduce_two_terminal,
    star_to_mesh,
)
from conperc.weights import DomainError
from oracles import classical_para, enumerate_two_terminal, grid_edges, quantum_para, random_series_parallel

both = pytest.mark.parametrize("calc", [CLASSICAL, QUANTUM])
GOLDEN = (math.sqrt(5) - 1) / 2


# -- broyden ------------------------------------------------------------------

def test_broyden_linear():
    x = broyden_solve(lambda x: x - 0.5, np.array([0.9]))
    assert x[0] == approx(0.5, abs=1e-12)


def test_broyden_classical_fixed_point():
    x = broyden_solve(lambda x: x**2 + x**2 - x**4 - x, np.array([0.5]))
    assert x[0] == approx(GOLDEN, abs=1e-12)


def test_broyden_symmetric_star_mesh_system():
    # 3-leaf star with equal legs 0.9; unknowns (off-pair, shared) mesh weights
    t = 0.81

    def residual(v):
        a, b = v
        return np.array([para(CLASSICAL, (a, b * b)) - t, para(CLASSICAL, (b, a * b)) - t])

    a, b = broyden_solve(residual, np.array([t, t]))
    assert a == approx(b, abs=1e-9)
    assert np.max(np.abs(residual(np.array([a, b])))) <= 1e-12


def test_broyden_stays_in_box():
    seen = []

    def residual(x):
        seen.append(x.copy())
        return x - 0.999999999999
    broyden_solve(residual, np.array([0.5]))
    assert all(0 < v[0] < 1 for v in seen)


def test_broyden_reports_best_residual():
    with pytest.raises(SolverError) as err:
        broyden_solve(lambda x: x * 0 + 1.0, np.array([0.5]), max_iter=20)
    assert err.value.best_residual == approx(1.0)


# -- star to mesh -------------------------------------------------------------

@both
def test_star_mesh_all_zero(calc):
    mesh = star_to_mesh(calc, StarGraph([0.0, 0.0, 0.0], [1, 2, 3]))
    assert np.all(mesh.weights == 0)


@both
@pytest.mark.parametrize("legs", [(0.9, 0.9, 0.9), (0.3, 0.6, 0.95), (0.5, 0.7, 0.8, 0.9)])
def test_star_mesh_reproduces_pairs(calc, legs):
    star = StarGraph(list(legs), list(range(len(legs))))
    mesh = star_to_mesh(calc, star)
    assert mesh.residual <= 1e-10
    for i, j, _ in mesh.pairs():
        assert cross_weight(calc, mesh, i, j) == approx(seri(calc, (legs[i], legs[j])), abs=1e-10)


def test_star_mesh_classical_symmetric():
    mesh = star_to_mesh(CLASSICAL, StarGraph([0.9] * 3, [0, 1, 2]))
    w = [v for _, _, v in mesh.pairs()]
    assert w == approx([w[0]] * 3, abs=1e-10)
    assert cross_weight(CLASSICAL, mesh, 0, 1) == approx(0.81, abs=1e-10)


def test_star_mesh_quantum_symmetric():
    mesh = star_to_mesh(QUANTUM, StarGraph([0.8] * 3, [0, 1, 2]))
    w = [v for _, _, v in mesh.pairs()]
    assert w == approx([w[0]] * 3, abs=1e-9)
    assert mesh.residual <= 1e-10


def test_star_mesh_perfect_leg():
    mesh = star_to_mesh(CLASSICAL, StarGraph([0.4, 0.6, 1.0], [0, 1, 2]))
    assert mesh.weight(0, 2) == approx(0.4)
    assert cross_weight(CLASSICAL, mesh, 0, 1) == approx(0.24, abs=1e-12)


def test_star_needs_two_leaves():
    with pytest.raises(DomainError):
        StarGraph([0.5], [0])


# -- cross weight ---------------------------------------------------------------

@both
def test_cross_two_nodes(calc):
    mesh = MeshGraph([0, 1], np.array([[0, 0.3], [0.3, 0]]))
    assert cross_weight(calc, mesh, 0, 1) == 0.3


@pytest.mark.parametrize("calc, par", [(CLASSICAL, classical_para), (QUANTUM, quantum_para)])
@pytest.mark.parametrize("a, b, d", [(0.5, 0.6, 0.7), (0.9, 0.2, 0.1), (0.99, 0.95, 0.3)])
def test_cross_triangle(calc, par, a, b, d):
    # nodes: i = 0, j = 1, k = 2
    W = np.array([[0, d, a], [d, 0, b], [a, b, 0]])
    assert cross_weight(calc, MeshGraph([0, 1, 2], W), 0, 1) == approx(par(d, a * b), abs=1e-12)


def test_cross_k4_classical_within_solver_error_of_enumeration():
    W = np.full((4, 4), 0.5)
    np.fill_diagonal(W, 0)
    edges = [(i, j, 0.5) for i in range(4) for j in range(i + 1, 4)]
    exact = enumerate_two_terminal(edges, 0, 1)
    assert len(edges) == 6
    assert cross_weight(CLASSICAL, MeshGraph([0, 1, 2, 3], W), 0, 1) == approx(exact, abs=0.02)


def test_cross_needs_distinct_nodes():
    with pytest.raises(DomainError):
        cross_weight(CLASSICAL, MeshGraph([0, 1], np.zeros((2, 2))), 0, 0)


# -- mesh to star --------------------------------------------------------------

def test_mesh_to_star_single_path():
    net = TwoTerminalNetwork([(0, 5, 0.8), (5, 1, 0.5)], 0, 1)
    star = mesh_to_star(CLASSICAL, net, [0, 1])
    assert star.leaf_weights[0] * star.leaf_weights[1] == approx(0.4)


@both
def test_mesh_to_star_five_node_cycle(calc):
    t = {(1, 5): 0.9, (2, 5): 0.8, (2, 4): 0.7, (3, 4): 0.85, (1, 3): 0.6}
    net = TwoTerminalNetwork([(u, v, w) for (u, v), w in t.items()], 1, 2)
    th1, th2, th3 = mesh_to_star(calc, net, [1, 2, 3]).leaf_weights
    s = lambda *xs: seri(calc, xs)  # noqa: E731
    p = lambda *xs: para(calc, xs)  # noqa: E731
    assert s(th1, th2) == approx(p(s(t[1, 5], t[2, 5]), s(t[1, 3], t[3, 4], t[2, 4])), abs=1e-10)
    assert s(th1, th3) == approx(p(t[1, 3], s(t[1, 5], t[2, 5], t[2, 4], t[3, 4])), abs=1e-10)
    assert s(th2, th3) == approx(p(s(t[2, 4], t[3, 4]), s(t[1, 3], t[1, 5], t[2, 5])), abs=1e-10)


@both
def test_mesh_to_star_symmetric_cycle(calc):
    net = TwoTerminalNetwork([(0, 1, 0.7), (1, 2, 0.7), (2, 0, 0.7)], 0, 1)
    legs = mesh_to_star(calc, net, [0, 1, 2]).leaf_weights
    assert legs == approx([legs[0]] * 3, abs=1e-12)


def test_mesh_to_star_inconsistent_four_boundary():
    # a path a-b-c-d: cross(a,d) is much smaller than any star allows
    net = TwoTerminalNetwork([(0, 1, 0.9), (1, 2, 0.1), (2, 3, 0.9)], 0, 3)
    with pytest.raises(SolverError) as err:
        mesh_to_star(CLASSICAL, net, [0, 1, 2, 3])
    assert err.value.best_residual > 1e-10


# -- reduce_two_terminal -------------------------------------------------------

@both
def test_reduce_single_edge(calc):
    assert reduce_two_terminal(calc, TwoTerminalNetwork([("A", "B", 0.37)], "A", "B")) == 0.37


@both
def test_reduce_disconnected(calc):
    net = TwoTerminalNetwork([(0, 2, 0.9), (1, 3, 0.9)], 0, 1)
    assert reduce_two_terminal(calc, net) == 0.0


def test_network_validation():
    with pytest.raises(DomainError):
        TwoTerminalNetwork([(0, 0, 0.5)], 0, 1)
    with pytest.raises(DomainError):
        TwoTerminalNetwork([(0, 1, 0.5)], 0, 0)
    with pytest.raises(DomainError):
        TwoTerminalNetwork([(0, 1, 1.5)], 0, 1)


@both
@pytest.mark.parametrize("U, V", [(u, v) for u in (1, 2, 3) for v in (1, 2, 3) if v >= u])
@pytest.mark.parametrize("n", [1, 2, 3])
def test_reduce_flowers_exact(calc, U, V, n):
    w = 0.8
    net = flower.build_flower(U, V, n, w)
    assert reduce_two_terminal(calc, net) == approx(flower.sponge_crossing(calc, U, V, n, w), abs=1e-9)


@pytest.mark.parametrize("seed", range(25))
def test_reduce_series_parallel_against_enumeration(seed):
    rng = random.Random(seed)
    edges, evaluate = random_series_parallel(rng.randint(1, 16), rng)
    net = TwoTerminalNetwork(edges, 0, 1)
    exact = enumerate_two_terminal(edges, 0, 1)
    assert evaluate(lambda a, b: a * b, classical_para) == approx(exact, abs=1e-12)
    assert reduce_two_terminal(CLASSICAL, net) == approx(exact, abs=1e-12)


@pytest.mark.parametrize("seed", range(15))
def test_reduce_series_parallel_quantum_nested(seed):
    rng = random.Random(100 + seed)
    edges, evaluate = random_series_parallel(rng.randint(1, 24), rng)
    net = TwoTerminalNetwork(edges, 0, 1)
    assert reduce_two_terminal(QUANTUM, net) == approx(evaluate(lambda a, b: a * b, quantum_para), abs=1e-9)


# the approximation is worst near p = 0.5 (3.6% there); 2% holds from 0.6 up
@pytest.mark.parametrize("p", [0.6, 0.7, 0.8, 0.9])
def test_reduce_grid_within_two_percent(p):
    edges = grid_edges(3, 3, p)
    exact = enumerate_two_terminal(edges, 0, 8)
    got = reduce_two_terminal(CLASSICAL, TwoTerminalNetwork(edges, 0, 8))
    assert abs(got - exact) / exact <= 0.02


@pytest.mark.parametrize("calc", [CLASSICAL, QUANTUM])
def test_reduce_monotone_in_every_edge(calc):
    edges = grid_edges(3, 3, 0.6)
    base = reduce_two_terminal(calc, TwoTerminalNetwork(edges, 0, 8))
    for k in range(len(edges)):
        bumped = list(edges)
        u, v, w = bumped[k]
        bumped[k] = (u, v, w + 0.2)
        assert reduce_two_terminal(calc, TwoTerminalNetwork(bumped, 0, 8)) >= base - 1e-10


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.randoms(use_true_random=False))
def test_reduce_order_independent_on_series_parallel(seed, rnd):
    rng = random.Random(seed)
    edges, _ = random_series_parallel(rng.randint(2, 14), rng)
    net = TwoTerminalNetwork(edges, 0, 1)
    order = [u for u in net.nodes if u not in (0, 1)]
    rnd.shuffle(order)
    for calc in (CLASSICAL, QUANTUM):
        assert reduce_two_terminal(calc, net, order) == approx(reduce_two_terminal(calc, net), abs=1e-9)


def test_reduce_wraps_solver_failure(monkeypatch):
    from conperc import reduction

    def boom(*a, **k):
        raise SolverError("no", 0.5)

    monkeypatch.setattr(reduction, "_star_mesh_matrix", boom)
    reduction._star_mesh_sorted.cache_clear()
    edges = grid_edges(3, 3, 0.5)
    with pytest.raises(SolverError) as err:
        reduce_two_terminal(CLASSICAL, TwoTerminalNetwork(edges, 0, 8))
    assert err.value.node is not None
