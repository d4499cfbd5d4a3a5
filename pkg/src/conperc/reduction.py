"""Two-terminal reduction of weighted graphs.

Series and parallel merges are exact.  Anything else is handled by the
star-mesh transform: a node of degree s is replaced by a complete graph on
its s neighbours whose link weights reproduce every pairwise connectivity of
the original star.  The pairwise connectivity of a complete graph is itself
computed by eliminating its other nodes one at a time with smaller star-mesh
transforms, so solving an s-leaf star nests (s - 1)-leaf solves inside its
residual.  The nonlinear systems are solved with Broyden's method.

For the classical calculus the transform is an approximation (it preserves
pairwise connectivities only); on series-parallel graphs it is never invoked
and the result is exact.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .connectivity import Calculus, para, seri
from .weights import DomainError, check_unit

PROJECTION_EPS = 1e-12
# inner solves leave ~1e-12 noise in nested cross weights, so stop a decade above it
STAR_MESH_TOL = 1e-11


class SolverError(RuntimeError):
    def __init__(self, message, best_residual=math.inf, node=None):
        super().__init__(message)
        self.best_residual = best_residual
        self.node = node


# -- data types -------------------------------------------------------------

class TwoTerminalNetwork:
    """Undirected multigraph with weighted edges and two terminals."""

    def __init__(self, edges, A, B, nodes=None):
        if A == B:
            raise DomainError("terminals must differ")
        self.A, self.B = A, B
        self.edges = []
        for u, v, w in edges:
            if u == v:
                raise DomainError(f"self-loop at node {u!r}")
            self.edges.append((u, v, check_unit("edge weight", w)))
        found = {A, B}
        for u, v, _ in self.edges:
            found.update((u, v))
        self.nodes = set(nodes or ()) | found

    @property
    def terminals(self):
        return (self.A, self.B)

    def with_weight(self, w) -> "TwoTerminalNetwork":
        return TwoTerminalNetwork([(u, v, w) for u, v, _ in self.edges], self.A, self.B, self.nodes)

    def with_terminals(self, A, B) -> "TwoTerminalNetwork":
        return TwoTerminalNetwork(self.edges, A, B, self.nodes)

    def __len__(self):
        return len(self.edges)


@dataclass
class StarGraph:
    leaf_weights: list[float]
    leaves: list = field(default_factory=list)
    root: object = None
    residual: float = 0.0

    def __post_init__(self):
        if len(self.leaf_weights) < 2:
            raise DomainError("a star needs at least 2 leaves")
        if not self.leaves:
            self.leaves = list(range(len(self.leaf_weights)))


@dataclass
class MeshGraph:
    """Complete graph; ``weights[a][b]`` indexed by position in ``nodes``."""

    nodes: list
    weights: np.ndarray
    residual: float = 0.0

    def weight(self, i, j) -> float:
        return float(self.weights[self.nodes.index(i), self.nodes.index(j)])

    def pairs(self):
        for a, b in itertools.combinations(range(len(self.nodes)), 2):
            yield self.nodes[a], self.nodes[b], float(self.weights[a, b])


# -- Broyden ----------------------------------------------------------------

def _fd_jacobian(residual, x, f, step=1e-6, eps=PROJECTION_EPS):
    n = x.size
    J = np.empty((f.size, n))
    for k in range(n):
        h = step if x[k] + step <= 1.0 - eps else -step
        xh = x.copy()
        xh[k] += h
        J[:, k] = (residual(xh) - f) / h
    return J


def broyden_solve(residual, x0, tol=1e-12, max_iter=200, eps=PROJECTION_EPS):
    """Root of ``residual`` on the box [eps, 1 - eps]^d.

    Finite-difference Jacobian to start, rank-1 (good Broyden) updates after,
    backtracking on the residual norm and a single fresh-Jacobian restart
    when progress stalls.
    """
    x = np.clip(np.asarray(x0, dtype=float).copy(), eps, 1.0 - eps)
    f = np.asarray(residual(x), dtype=float)
    best_x, best = x.copy(), float(np.max(np.abs(f)))
    if best <= tol:
        return x
    J = _fd_jacobian(residual, x, f)
    restarted = False
    stall = 0
    for _ in range(max_iter):
        try:
            dx = np.linalg.solve(J, -f)
        except np.linalg.LinAlgError:
            dx = np.linalg.lstsq(J, -f, rcond=None)[0]
        norm = np.linalg.norm(f)
        lam = 1.0
        accepted = False
        for _ in range(30):
            xn = np.clip(x + lam * dx, eps, 1.0 - eps)
            fn = np.asarray(residual(xn), dtype=float)
            if np.linalg.norm(fn) < norm:
                accepted = True
                break
            lam *= 0.5
        s = xn - x
        if not accepted or not np.any(s):
            if restarted:
                break
            restarted = True
            J = _fd_jacobian(residual, x, f)
            continue
        y = fn - f
        J += np.outer(y - J @ s, s) / (s @ s)
        x, f = xn, fn
        cur = float(np.max(np.abs(f)))
        if cur < best:
            best, best_x = cur, x.copy()
            stall = 0
        else:
            stall += 1
        if best <= tol:
            return best_x
        if stall >= 5 and not restarted:
            restarted = True
            J = _fd_jacobian(residual, x, f)
            stall = 0
    raise SolverError(f"Broyden did not converge (best |residual| = {best:.3e})", best)


# -- star-mesh --------------------------------------------------------------

def _pair_index(s):
    return list(itertools.combinations(range(s), 2))


def _to_matrix(s, pairs, values):
    W = [[0.0] * s for _ in range(s)]
    for (a, b), v in zip(pairs, values):
        W[a][b] = W[b][a] = float(v)
    return W


def _cross(calc: Calculus, W, i, j) -> float:
    """Net i-j weight of the complete graph W by recursive degradation."""
    s = len(W)
    if s == 2:
        return W[i][j]
    k = next(m for m in range(s) if m != i and m != j)
    others = [m for m in range(s) if m != k]
    legs = tuple(W[k][m] for m in others)
    sub = _star_mesh_matrix(calc, legs)
    new = [[0.0] * (s - 1) for _ in range(s - 1)]
    for a, b in itertools.combinations(range(s - 1), 2):
        ma, mb = others[a], others[b]
        new[a][b] = new[b][a] = para(calc, (sub[a][b], W[ma][mb]))
    return _cross(calc, new, others.index(i), others.index(j))


def _star_mesh_matrix(calc: Calculus, legs: tuple) -> list:
    s = len(legs)
    if s == 2:
        w = seri(calc, legs)
        return [[0.0, w], [w, 0.0]]
    # solve for sorted legs, then permute back; improves cache reuse
    order = sorted(range(s), key=lambda k: legs[k])
    solved = _star_mesh_sorted(calc, tuple(legs[k] for k in order))
    W = [[0.0] * s for _ in range(s)]
    for a, b in itertools.combinations(range(s), 2):
        W[order[a]][order[b]] = W[order[b]][order[a]] = solved[a][b]
    return W


@functools.lru_cache(maxsize=1 << 16)
def _star_mesh_sorted(calc: Calculus, legs: tuple):
    s = len(legs)
    pairs = _pair_index(s)
    live = [k for k in range(s) if legs[k] > 0.0]
    if len(live) < s:
        # disconnected leaves drop out; the rest is a smaller star
        W = [[0.0] * s for _ in range(s)]
        if len(live) >= 2:
            sub = _star_mesh_matrix(calc, tuple(legs[k] for k in live))
            for a, b in itertools.combinations(range(len(live)), 2):
                W[live[a]][live[b]] = W[live[b]][live[a]] = sub[a][b]
        return tuple(map(tuple, W))
    if legs[-1] >= 1.0:
        # a perfect leg identifies the root with that leaf
        k = s - 1
        W = [[0.0] * s for _ in range(s)]
        for m in range(s - 1):
            W[k][m] = W[m][k] = legs[m]
        return tuple(map(tuple, W))
    targets = np.array([legs[a] * legs[b] for a, b in pairs])

    def residual(x):
        W = _to_matrix(s, pairs, x)
        return np.array([_cross(calc, W, a, b) for a, b in pairs]) - targets

    x = broyden_solve(residual, targets.copy(), tol=STAR_MESH_TOL)
    return tuple(map(tuple, _to_matrix(s, pairs, x)))


def star_to_mesh(calculus, star: StarGraph) -> MeshGraph:
    calc = Calculus.parse(calculus)
    legs = tuple(check_unit("leg weight", w) for w in star.leaf_weights)
    W = np.array(_star_mesh_matrix(calc, legs))
    mesh = MeshGraph(list(star.leaves), W)
    mesh.residual = max(
        (abs(_cross(calc, W.tolist(), a, b) - legs[a] * legs[b])
         for a, b in _pair_index(len(legs))),
        default=0.0,
    )
    return mesh


def cross_weight(calculus, mesh: MeshGraph, i, j) -> float:
    calc = Calculus.parse(calculus)
    if i == j:
        raise DomainError("cross_weight needs two distinct nodes")
    a, b = mesh.nodes.index(i), mesh.nodes.index(j)
    return _cross(calc, np.asarray(mesh.weights, dtype=float).tolist(), a, b)


def mesh_to_star(calculus, network, boundary, tol=1e-10) -> StarGraph:
    """Star whose legs reproduce the pairwise boundary connectivities.

    Because series composition is a product in both calculi the equations
    are linear in log-weights; three boundary nodes give the exact solution
    theta_a = sqrt(W_ab W_ac / W_bc), more are solved in least squares and
    checked for consistency.
    """
    calc = Calculus.parse(calculus)
    boundary = list(boundary)
    if len(boundary) < 2 or len(set(boundary)) != len(boundary):
        raise DomainError("need at least 2 distinct boundary nodes")
    edges = network.edges if isinstance(network, TwoTerminalNetwork) else list(network)
    cross = {}
    for a, b in itertools.combinations(range(len(boundary)), 2):
        net = TwoTerminalNetwork(edges, boundary[a], boundary[b])
        cross[a, b] = reduce_two_terminal(calc, net)
    s = len(boundary)
    if all(v == 0.0 for v in cross.values()):
        return StarGraph([0.0] * s, boundary)
    if any(v == 0.0 for v in cross.values()):
        raise DomainError("a boundary pair is disconnected; no star with positive legs exists")
    if s == 2:
        leg = math.sqrt(cross[0, 1])
        return StarGraph([leg, leg], boundary)
    M = np.zeros((len(cross), s))
    rhs = np.zeros(len(cross))
    for r, ((a, b), v) in enumerate(cross.items()):
        M[r, a] = M[r, b] = 1.0
        rhs[r] = math.log(v)
    logs = np.linalg.lstsq(M, rhs, rcond=None)[0]
    legs = np.exp(logs)
    resid = max(abs(legs[a] * legs[b] - v) for (a, b), v in cross.items())
    if resid > tol or np.any(legs > 1.0 + tol):
        raise SolverError(
            f"boundary connectivities admit no star (residual {resid:.3e})", resid
        )
    return StarGraph([float(min(x, 1.0)) for x in legs], boundary, residual=resid)


# -- full reduction ---------------------------------------------------------

def _component(adj, start):
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return seen


def _add_edge(calc, adj, u, v, w):
    if w <= 0.0:
        return
    if v in adj[u]:
        w = para(calc, (adj[u][v], w))
    adj[u][v] = w
    adj[v][u] = w


def reduce_two_terminal(calculus, net: TwoTerminalNetwork, elimination_order=None) -> float:
    """Effective A-B weight of ``net``.

    Repeats, until only A and B remain: drop dangling non-terminals, merge a
    degree-2 node in series, otherwise star-mesh the minimum-degree node
    (ties by node id).  ``elimination_order`` overrides the priority among
    candidates of the same kind.
    """
    calc = Calculus.parse(calculus)
    A, B = net.A, net.B
    adj = {u: {} for u in net.nodes}
    for u, v, w in net.edges:
        _add_edge(calc, adj, u, v, w)
    reach = _component(adj, A)
    if B not in reach:
        return 0.0
    adj = {u: nb for u, nb in adj.items() if u in reach}
    rank = None
    if elimination_order is not None:
        rank = {node: r for r, node in enumerate(elimination_order)}

    def key(u):
        return (rank.get(u, len(rank)), u) if rank is not None else (len(adj[u]), u)

    while len(adj) > 2:
        inner = [u for u in adj if u != A and u != B]
        low = [u for u in inner if len(adj[u]) <= 2]
        u = min(low, key=key) if low else min(inner, key=key)
        nbrs = list(adj[u].items())
        for v, _ in nbrs:
            del adj[v][u]
        del adj[u]
        if len(nbrs) < 2:
            continue
        if len(nbrs) == 2:
            (v1, w1), (v2, w2) = nbrs
            _add_edge(calc, adj, v1, v2, seri(calc, (w1, w2)))
            continue
        legs = tuple(w for _, w in nbrs)
        try:
            W = _star_mesh_matrix(calc, legs)
        except SolverError as exc:
            raise SolverError(f"star-mesh failed at node {u!r}: {exc}", exc.best_residual, u) from exc
        for a, b in itertools.combinations(range(len(nbrs)), 2):
            _add_edge(calc, adj, nbrs[a][0], nbrs[b][0], W[a][b])
    return adj[A].get(B, 0.0)
