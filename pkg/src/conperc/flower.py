"""Exact renormalisation on (U, V) flowers.

Generation n+1 of a (U, V) flower replaces every link of generation n with
two parallel arms of U and V links.  The two-terminal (sponge-crossing)
connectivity of generation n is therefore the n-fold iterate of

    R(w) = para(seri(w x U), seri(w x V)),

classically p^U + p^V - p^(U+V), and the quantum version is taken in the
F-domain.  Thresholds are the nontrivial fixed point of R and the thermal
exponent follows from the slope there: nu = ln U / ln R'(w_th).

Near w = 1 everything is computed in terms of the deficit d = 1 - w, which
keeps thresholds for very long arms (V up to ~1e300) at full relative
precision.  ``s = d * V`` is the natural O(ln V) variable there.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from math import comb
from typing import Iterable

from .connectivity import Calculus, PathEnsemble
from .fitting import ScalingFit, linear_fit
from .weights import DomainError, check_unit

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FlowerSpec:
    U: int
    V: int
    n: int = 0

    def __post_init__(self):
        if self.U < 1 or self.V < self.U or self.n < 0:
            raise DomainError(f"invalid flower (U={self.U}, V={self.V}, n={self.n})")

    @property
    def shortest_path(self) -> int:
        return self.U**self.n

    @property
    def node_count(self) -> int:
        # N_{n+1} = (U+V) N_n - (U+V-2) ... closed form via edge count
        edges = (self.U + self.V) ** self.n
        return 2 + (self.U + self.V - 2) * (edges - 1) // (self.U + self.V - 1)

    @property
    def dimension(self) -> float:
        return dimension(self.U, self.V)


def _require_exponent_ready(U, V):
    if U < 2:
        raise DomainError("exponent operations need U >= 2 (U = 1 has no finite dimension)")
    if V < U:
        raise DomainError(f"need V >= U, got U={U}, V={V}")


def dimension(U, V) -> float:
    _require_exponent_ready(U, V)
    return math.log(U + V) / math.log(U)


def decompose_paths(U: int, V: int, n: int) -> PathEnsemble:
    """The 2^n edge-disjoint A-B paths of generation n, grouped by length."""
    if n < 0:
        raise DomainError("n must be >= 0")
    entries = []
    for k in range(n + 1):
        length = U ** (n - k) * V**k
        if length > 2**62:
            raise OverflowError(
                f"path length U^{n - k} V^{k} does not fit a machine integer; "
                "work with log-lengths instead"
            )
        entries.append((length, comb(n, k)))
    return PathEnsemble(entries)


# -- the RG map -------------------------------------------------------------

def rg_map(calculus, U, V, w) -> float:
    calculus = Calculus.parse(calculus)
    x = calculus.value_of(w)
    if x <= 0.0 or x >= 1.0:
        return x
    xu, xv = x**U, x**V
    if calculus is Calculus.CLASSICAL:
        return min(1.0 - (1.0 - xu) * (1.0 - xv), 1.0)
    gu, gv = _g(xu), _g(xv)
    one_minus_f = gu + gv - gu * gv
    f = 1.0 - one_minus_f
    if f <= 0.5:
        return 1.0
    return min(2.0 * math.sqrt(f * one_minus_f), 1.0)


def _g(c):
    return c * c / (2.0 * (1.0 + math.sqrt((1.0 - c) * (1.0 + c))))


def rg_deficit(calculus, U, V, d: float) -> float:
    """1 - R(1 - d), accurate when d is tiny."""
    calculus = Calculus.parse(calculus)
    if d <= 0.0:
        return 0.0
    if d >= 1.0:
        return 1.0
    lw = math.log1p(-d)
    if calculus is Calculus.CLASSICAL:
        return math.expm1(U * lw) * math.expm1(V * lw)
    a = math.sqrt(-math.expm1(2 * U * lw))
    b = math.sqrt(-math.expm1(2 * V * lw))
    one_minus_b = math.exp(2 * V * lw) / (1.0 + b)
    # y = 2 F_U F_V - 1
    y = 0.5 * (a * (1.0 + b) - one_minus_b)
    if y <= 0.0:
        return 0.0
    y = min(y, 1.0)
    return y * y / (1.0 + math.sqrt((1.0 - y) * (1.0 + y)))


def sponge_crossing(calculus, U, V, n: int, w) -> float:
    calculus = Calculus.parse(calculus)
    if n < 0:
        raise DomainError("n must be >= 0")
    x = calculus.value_of(w)
    for _ in range(n):
        x = rg_map(calculus, U, V, x)
    return x


def crossing_curve(calculus, U, V, n: int, ws: Iterable[float]) -> list[tuple[float, float]]:
    return [(w, sponge_crossing(calculus, U, V, n, w)) for w in ws]


# -- thresholds -------------------------------------------------------------

def bisect_increasing(f, lo, hi, tol=1e-13, max_iter=500):
    """Root of an increasing function on [lo, hi] by plain bisection."""
    flo, fhi = f(lo), f(hi)
    if flo > 0 or fhi < 0:
        raise ValueError(f"no sign change on [{lo}, {hi}]")
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def threshold_deficit(calculus, U, V, rel_tol=1e-13) -> float:
    """d_th = 1 - w_th for the nontrivial fixed point of R.

    Bisection on h(d) = d - (1 - R(1 - d)), positive for small d and negative
    for d near 1.  Geometric bisection first, then arithmetic down to a
    relative width of ``rel_tol`` (and never worse than 1e-13 absolute).
    """
    calculus = Calculus.parse(calculus)
    _require_exponent_ready(U, V)

    def h(d):
        return d - rg_deficit(calculus, U, V, d)

    lo = min(0.25, 0.5 / (U * float(V)))
    for _ in range(4000):
        if h(lo) > 0:
            break
        lo *= 0.5
    else:
        raise ArithmeticError("could not bracket the fixed point from below")
    hi = 1.0 - 1e-9
    if h(hi) >= 0:
        raise ArithmeticError(f"no sign change for the ({U},{V}) fixed point")
    while hi / lo > 2.0:
        mid = math.sqrt(lo * hi)
        if h(mid) > 0:
            lo = mid
        else:
            hi = mid
    for _ in range(400):
        if hi - lo <= min(1e-13, rel_tol * lo):
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if h(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def threshold_exact(calculus, U, V) -> float:
    return 1.0 - threshold_deficit(calculus, U, V)


def threshold_s(calculus, U, V) -> float:
    """The threshold in the s = (1 - w) V variable."""
    return threshold_deficit(calculus, U, V) * V


def finite_size_threshold(calculus, U, V, n: int, target: float) -> float:
    """w at which the generation-n sponge crossing equals ``target``."""
    calculus = Calculus.parse(calculus)
    target = check_unit("target", target)
    if not 0.0 < target < 1.0:
        raise DomainError("target must lie strictly inside (0, 1)")
    if n < 1:
        raise DomainError("n must be >= 1")
    return bisect_increasing(
        lambda w: sponge_crossing(calculus, U, V, n, w) - target, 0.0, 1.0
    )


# -- thermal exponent -------------------------------------------------------

def rg_slope(calculus, U, V, w=None, *, deficit=None) -> float:
    """dR/dw at w (or at 1 - deficit)."""
    calculus = Calculus.parse(calculus)
    d = (1.0 - w) if deficit is None else deficit
    if calculus is Calculus.CLASSICAL and deficit is None:
        p = w
        return U * p ** (U - 1) * (1 - p**V) + V * p ** (V - 1) * (1 - p**U)
    if calculus is Calculus.CLASSICAL:
        lw = math.log1p(-d)
        pu, pv = math.exp(U * lw), math.exp(V * lw)
        p_inv = math.exp(-lw)
        return p_inv * (-U * pu * math.expm1(V * lw) - V * pv * math.expm1(U * lw))
    h = min(1e-7, 1e-4 * d, 1e-4 * (1.0 - d))

    def central(step):
        return (rg_deficit(calculus, U, V, d + step) - rg_deficit(calculus, U, V, d - step)) / (2 * step)

    return (4.0 * central(h / 2) - central(h)) / 3.0


def nu_exact(calculus, U, V) -> float:
    _require_exponent_ready(U, V)
    d = threshold_deficit(calculus, U, V)
    lam = rg_slope(calculus, U, V, deficit=d)
    if lam <= 1.0:
        raise ArithmeticError(f"R'(w_th) = {lam} <= 1: no relevant direction")
    return math.log(U) / math.log(lam)


def nu_fit(calculus, U, V, n_range=range(1, 14), target=0.8, window=6) -> ScalingFit:
    """Finite-size estimate of nu from |w_th(L) - w_th| ~ L^(-1/nu).

    Fits the last ``window`` usable generations (unweighted least squares).
    """
    calculus = Calculus.parse(calculus)
    _require_exponent_ready(U, V)
    w_th = threshold_exact(calculus, U, V)
    points = []
    notes = []
    for n in n_range:
        gap = abs(finite_size_threshold(calculus, U, V, n, target) - w_th)
        # bisection resolves thresholds to ~1e-13; smaller gaps are noise
        if gap < 1e-11:
            msg = f"gap underflow at n={n}; window truncated"
            log.warning(msg)
            notes.append(msg)
            break
        points.append((n * math.log(U), math.log(gap)))
    if len(points) < 3:
        raise ArithmeticError("fewer than 3 usable generations for the nu fit")
    lo = max(0, len(points) - window)
    sel = points[lo:]
    slope, intercept, se = linear_fit([p[0] for p in sel], [p[1] for p in sel])
    nu = -1.0 / slope
    return ScalingFit(
        exponent=nu,
        stderr=se / slope**2,
        points=points,
        window=(lo, len(points)),
        slope=slope,
        intercept=intercept,
        notes=notes,
    )


# -- explicit graphs (small n only) ----------------------------------------

def build_flower(U: int, V: int, n: int, weight: float = 1.0):
    """Materialise generation n as a TwoTerminalNetwork (A = 0, B = 1)."""
    from .reduction import TwoTerminalNetwork

    if n > 10:
        raise DomainError("explicit flowers are only built for n <= 10")
    edges = [(0, 1)]
    next_id = 2
    for _ in range(n):
        new_edges = []
        for u, v in edges:
            for arm in (U, V):
                prev = u
                for step in range(arm - 1):
                    new_edges.append((prev, next_id))
                    prev = next_id
                    next_id += 1
                new_edges.append((prev, v))
        edges = new_edges
    return TwoTerminalNetwork([(u, v, weight) for u, v in edges], 0, 1)
