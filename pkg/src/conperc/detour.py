"""Resilience of two-terminal connectivity to path lengthening.

A bundle of edge-disjoint paths between A and B is modelled as a parallel
combination of series chains, so only the path lengths matter.  Stretching
the secondary paths by a factor q raises the threshold angle theta_th(q)
toward the value theta_th(inf) of the shortest path alone; the resilience
factor is A(q) = q (theta_th(inf) - theta_th(q)).

The real-network protocol: pick hub pairs, extract a shortest path plus
three further edge-disjoint paths (greedy BFS), then resample the three
secondary paths at exactly q times their length by budgeted randomized DFS.
"""

from __future__ import annotations

import csv
import io
import itertools
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .connectivity import Calculus, PathEnsemble, ensemble_crossing
from .flower import bisect_increasing, threshold_deficit
from .weights import THETA_MAX, DomainError, LinkWeight, check_unit

log = logging.getLogger(__name__)

DEFAULT_BUDGET = 1_000_000


class EdgeListParseError(ValueError):
    pass


class InfeasibleError(RuntimeError):
    pass


# -- ensembles --------------------------------------------------------------

def _weight_at(theta):
    return LinkWeight(min(max(theta, 0.0), THETA_MAX))


def ensemble_threshold(calculus, ensemble, target, tol=1e-12) -> float:
    """theta at which the ensemble crossing equals ``target``."""
    calc = Calculus.parse(calculus)
    if not isinstance(ensemble, PathEnsemble):
        ensemble = PathEnsemble(ensemble)
    if len(ensemble) == 0:
        raise DomainError("empty path ensemble")
    target = check_unit("target", target)
    if not 0.0 < target < 1.0:
        raise DomainError("target must lie strictly inside (0, 1)")
    if ensemble_crossing(calc, ensemble, _weight_at(THETA_MAX)) < target:
        raise DomainError("target unreachable even at theta = pi/4")
    return bisect_increasing(
        lambda th: ensemble_crossing(calc, ensemble, _weight_at(th)) - target,
        0.0, THETA_MAX, tol=tol,
    )


def shortest_only_threshold(calculus, shortest_length: int, target) -> float:
    if shortest_length < 1:
        raise DomainError("path length must be >= 1")
    return ensemble_threshold(calculus, PathEnsemble([(shortest_length, 1)]), target)


def anomalous_resilience(calculus, ensemble, shortest_length, q, target) -> float:
    if q < 1:
        raise DomainError("q must be >= 1")
    th_inf = shortest_only_threshold(calculus, shortest_length, target)
    return q * (th_inf - ensemble_threshold(calculus, ensemble, target))


def flower_detour_ensemble(U, V, n, q) -> PathEnsemble:
    """Flower paths with every long-arm choice stretched by q (V -> qV)."""
    if n < 0 or q < 1:
        raise DomainError("need n >= 0 and q >= 1")
    entries = []
    for k in range(n + 1):
        length = U ** (n - k) * (q * V) ** k
        if length > 2**62:
            raise OverflowError(f"detour length U^{n - k} (qV)^{k} too large")
        entries.append((length, comb(n, k)))
    return PathEnsemble(entries)


def flower_ensemble_resilience(calculus, U, V, n, q, target=0.99) -> float:
    return anomalous_resilience(calculus, flower_detour_ensemble(U, V, n, q), U**n, q, target)


def theta_gap_from_deficit(calculus, d) -> float:
    """pi/4 - theta for a link whose p (or c) equals 1 - d, without cancellation."""
    calc = Calculus.parse(calculus)
    if calc is Calculus.CLASSICAL:
        return 0.5 * math.asin(d)
    return math.asin(math.sqrt(0.5 * d))


def flower_resilience(calculus, U, V, q) -> float:
    """A(q) for the infinite flower: q (pi/4 - theta_th(U, qV)).

    The shortest path of an infinite flower is itself infinitely long, so
    theta_th(inf) = pi/4.
    """
    if q < 1:
        raise DomainError("q must be >= 1")
    return q * theta_gap_from_deficit(calculus, threshold_deficit(calculus, U, q * V))


# -- graphs -----------------------------------------------------------------

class EdgeListGraph:
    """Undirected simple graph on integer node ids."""

    def __init__(self, edges=()):
        self.adj: dict[int, set[int]] = {}
        for u, v in edges:
            self.add_edge(u, v)

    def add_edge(self, u, v) -> bool:
        if u == v:
            return False
        if v in self.adj.get(u, ()):
            return False
        self.adj.setdefault(u, set()).add(v)
        self.adj.setdefault(v, set()).add(u)
        return True

    @property
    def node_count(self) -> int:
        return len(self.adj)

    @property
    def edge_count(self) -> int:
        return sum(len(nb) for nb in self.adj.values()) // 2

    def degree(self, u) -> int:
        return len(self.adj.get(u, ()))

    def neighbors(self, u) -> list[int]:
        return sorted(self.adj.get(u, ()))

    def edges(self):
        for u in sorted(self.adj):
            for v in sorted(self.adj[u]):
                if u < v:
                    yield u, v


def load_edge_list(path) -> EdgeListGraph:
    g = EdgeListGraph()
    loops = 0
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise EdgeListParseError(f"line {lineno}: expected two node ids, got {line!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise EdgeListParseError(f"line {lineno}: non-integer node id in {line!r}") from None
            if u == v:
                loops += 1
                log.warning("line %d: self-loop on %d skipped", lineno, u)
                continue
            g.add_edge(u, v)
    log.info("loaded %d nodes, %d edges (%d self-loops skipped)", g.node_count, g.edge_count, loops)
    return g


def _ekey(u, v):
    return (u, v) if u < v else (v, u)


def path_edges(path):
    return {_ekey(a, b) for a, b in zip(path, path[1:])}


@dataclass
class PathBundle:
    A: int
    B: int
    paths: list[list[int]]
    groups: list[int]

    def __post_init__(self):
        self.validate()

    def validate(self, disjoint="edge"):
        seen: set = set()
        inner: set = set()
        for p in self.paths:
            if p[0] != self.A or p[-1] != self.B:
                raise DomainError("bundle path does not join the terminals")
            es = path_edges(p)
            if len(es) != len(p) - 1 or es & seen:
                raise DomainError("bundle paths are not edge-disjoint")
            seen |= es
            if disjoint == "vertex":
                mid = set(p[1:-1])
                if mid & inner:
                    raise DomainError("bundle paths share a vertex")
                inner |= mid

    @property
    def lengths(self) -> list[int]:
        return [len(p) - 1 for p in self.paths]

    @property
    def shortest_length(self) -> int:
        return self.lengths[self.groups.index(0)]

    def ensemble(self) -> PathEnsemble:
        return PathEnsemble.from_lengths(self.lengths)

    def network(self, weight=1.0):
        from .reduction import TwoTerminalNetwork

        edges = set()
        for p in self.paths:
            edges |= path_edges(p)
        return TwoTerminalNetwork([(u, v, weight) for u, v in sorted(edges)], self.A, self.B)


def _bfs_path(graph, A, B, banned_edges, banned_nodes):
    parent = {A: None}
    queue = deque([A])
    while queue:
        u = queue.popleft()
        if u == B:
            break
        for v in graph.neighbors(u):
            if v in parent or v in banned_nodes or _ekey(u, v) in banned_edges:
                continue
            parent[v] = u
            queue.append(v)
    if B not in parent:
        return None
    path = [B]
    while path[-1] != A:
        path.append(parent[path[-1]])
    return path[::-1]


def extract_bundle(graph: EdgeListGraph, A, B, counts=(1, 3), disjoint="edge") -> PathBundle:
    """Greedy shortest edge-disjoint paths: group 0 gets the first counts[0]."""
    if A == B:
        raise DomainError("terminals must differ")
    if disjoint not in ("edge", "vertex"):
        raise DomainError(f"unknown disjointness {disjoint!r}")
    banned_edges: set = set()
    banned_nodes: set = set()
    paths, groups = [], []
    for group, k in enumerate(counts):
        for _ in range(k):
            p = _bfs_path(graph, A, B, banned_edges, banned_nodes)
            if p is None:
                raise InfeasibleError(f"only {len(paths)} disjoint paths between {A} and {B}")
            paths.append(p)
            groups.append(group)
            banned_edges |= path_edges(p)
            if disjoint == "vertex":
                banned_nodes |= set(p[1:-1])
    bundle = PathBundle(A, B, paths, groups)
    bundle.validate(disjoint)
    return bundle


def _distances_to(graph, B, banned_edges, banned_nodes):
    dist = {B: 0}
    queue = deque([B])
    while queue:
        u = queue.popleft()
        for v in graph.neighbors(u):
            if v in dist or v in banned_nodes or _ekey(u, v) in banned_edges:
                continue
            dist[v] = dist[u] + 1
            queue.append(v)
    return dist


def _exact_length_path(graph, A, B, length, banned_edges, banned_nodes, rng, budget):
    """Random simple A-B path with exactly ``length`` edges, or None.

    Returns (path, expansions used).
    """
    dist = _distances_to(graph, B, banned_edges, banned_nodes)
    if dist.get(A, math.inf) > length:
        return None, 0

    def options(u, on_path, remaining):
        nbrs = [
            v for v in graph.neighbors(u)
            if v not in on_path and v not in banned_nodes
            and _ekey(u, v) not in banned_edges
            and dist.get(v, math.inf) <= remaining - 1
            and (v != B or remaining == 1)
        ]
        rng.shuffle(nbrs)
        return nbrs

    path = [A]
    on_path = {A}
    stack = [options(A, on_path, length)]
    used = 0
    while stack:
        if used >= budget:
            return None, used
        if not stack[-1]:
            stack.pop()
            on_path.discard(path.pop())
            continue
        v = stack[-1].pop()
        used += 1
        path.append(v)
        on_path.add(v)
        remaining = length - (len(path) - 1)
        if v == B:
            if remaining == 0:
                return list(path), used
            on_path.discard(path.pop())
            continue
        stack.append(options(v, on_path, remaining))
    return None, used


def reroute_bundle(graph: EdgeListGraph, bundle: PathBundle, q: int, samples=20,
                   seed=None, rng=None, budget=DEFAULT_BUDGET, disjoint="edge") -> list[PathBundle]:
    """Keep group 0; resample every other path at exactly q times its length."""
    if q < 1:
        raise DomainError("q must be >= 1")
    if q == 1:
        return [bundle]
    rng = rng if rng is not None else np.random.default_rng(seed)
    kept = [i for i, g in enumerate(bundle.groups) if g == 0]
    moved = [i for i, g in enumerate(bundle.groups) if g != 0]
    out = []
    for _ in range(samples):
        banned_edges: set = set()
        banned_nodes: set = set()
        paths, groups = [], []
        for i in kept:
            paths.append(bundle.paths[i])
            groups.append(0)
            banned_edges |= path_edges(bundle.paths[i])
            if disjoint == "vertex":
                banned_nodes |= set(bundle.paths[i][1:-1])
        left = budget
        ok = True
        for i in moved:
            p, used = _exact_length_path(
                graph, bundle.A, bundle.B, q * bundle.lengths[i],
                banned_edges, banned_nodes, rng, left,
            )
            left -= used
            if p is None:
                ok = False
                break
            paths.append(p)
            groups.append(bundle.groups[i])
            banned_edges |= path_edges(p)
            if disjoint == "vertex":
                banned_nodes |= set(p[1:-1])
        if ok:
            nb = PathBundle(bundle.A, bundle.B, paths, groups)
            nb.validate(disjoint)
            out.append(nb)
    if len(out) < samples:
        log.warning("pair (%s, %s), q=%d: %d of %d samples found", bundle.A, bundle.B, q, len(out), samples)
    return out


def select_hub_pairs(graph: EdgeListGraph, min_degree=7, count=10, seed=0, disjoint="edge",
                     counts=(1, 3), rng=None) -> list[tuple[int, int]]:
    """Distinct random hub pairs (both degrees >= min_degree) admitting a bundle."""
    rng = rng if rng is not None else np.random.default_rng(seed)
    hubs = sorted(u for u in graph.adj if graph.degree(u) >= min_degree)
    pairs = list(itertools.combinations(hubs, 2))
    order = rng.permutation(len(pairs)) if pairs else []
    chosen = []
    for idx in order:
        A, B = pairs[idx]
        try:
            extract_bundle(graph, A, B, counts, disjoint)
        except InfeasibleError:
            continue
        chosen.append((A, B))
        if len(chosen) == count:
            break
    if len(chosen) < count:
        log.warning("only %d feasible hub pairs (wanted %d)", len(chosen), count)
    return chosen


# -- the full protocol ------------------------------------------------------

@dataclass
class ResilienceRow:
    q: int
    calculus: str
    theta_mean: float
    theta_stderr: float
    A: float
    samples: int


@dataclass
class ResilienceCurve:
    rows: list[ResilienceRow]
    pairs: list[tuple[int, int]] = field(default_factory=list)
    omitted: list[int] = field(default_factory=list)

    HEADER = ("q", "calculus", "theta_mean", "theta_stderr", "A", "samples")

    def series(self, calculus) -> list[ResilienceRow]:
        calc = Calculus.parse(calculus).value
        return [r for r in self.rows if r.calculus == calc]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.HEADER)
        for r in self.rows:
            writer.writerow([r.q, r.calculus, repr(r.theta_mean), repr(r.theta_stderr), repr(r.A), r.samples])
        return buf.getvalue()


def bundle_threshold(calculus, bundle: PathBundle, target, full_reduction=False) -> float:
    if not full_reduction:
        return ensemble_threshold(calculus, bundle.ensemble(), target)
    from .reduction import reduce_two_terminal

    calc = Calculus.parse(calculus)
    net = bundle.network()
    return bisect_increasing(
        lambda th: reduce_two_terminal(calc, net.with_weight(calc.value_of(_weight_at(th)))) - target,
        0.0, THETA_MAX, tol=1e-12,
    )


def real_network_resilience(graph, q_range, target=0.99, seed=0, pairs=None, min_degree=7,
                            count=10, samples=20, budget=DEFAULT_BUDGET, disjoint="edge",
                            full_reduction=False, calculi=("classical", "quantum")) -> ResilienceCurve:
    calcs = [Calculus.parse(c) for c in calculi]
    if pairs is None:
        pairs = select_hub_pairs(graph, min_degree, count, seed, disjoint)
    bundles = [extract_bundle(graph, A, B, disjoint=disjoint) for A, B in pairs]
    th_inf = {
        (c, i): shortest_only_threshold(c, b.shortest_length, target)
        for c in calcs for i, b in enumerate(bundles)
    }
    rows, omitted = [], []
    for q in sorted(set(int(x) for x in q_range)):
        per = {c: [] for c in calcs}
        for i, b in enumerate(bundles):
            rng = np.random.default_rng([seed, i, q])
            for sb in reroute_bundle(graph, b, q, samples, rng=rng, budget=budget, disjoint=disjoint):
                for c in calcs:
                    per[c].append((th_inf[c, i], bundle_threshold(c, sb, target, full_reduction)))
        if not per[calcs[0]]:
            log.warning("q=%d: no rerouted samples; omitted", q)
            omitted.append(q)
            continue
        for c in calcs:
            inf_, th = (np.array(v) for v in zip(*per[c]))
            se = float(th.std(ddof=1) / math.sqrt(th.size)) if th.size > 1 else 0.0
            rows.append(ResilienceRow(q, c.value, float(th.mean()), se,
                                      float(q * (inf_.mean() - th.mean())), int(th.size)))
    return ResilienceCurve(rows, list(pairs), omitted)
