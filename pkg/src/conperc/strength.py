"""Percolating strength on flowers by layer transfer.

A node in the deepest layer sits on one of the U + V links of the motif one
generation up.  Given its connectivities (x, y) to the two ends of its own
link, the motif is a cycle through the coarse endpoints A', B', and the
node's connectivities to those endpoints are

    A = para(x w^a, y w^(U+V-1-a)),   B = para(y w^(U-1-a), x w^(V+a))

for short-arm position a (long-arm position b swaps the roles of U and V).
Replacing the cycle by a 3-leaf star (node, A', B') with the coarse link
weight R(w) between A' and B' gives the closed form

    x' = sqrt(R A / B),   y' = R / x',   t'/t = sqrt(A B / R).

One layer averages the U + V branch outputs arithmetically.  The strength
is the accumulated product of the averaged t ratios, kept as ln t.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .connectivity import Calculus, para2
from .fitting import ScalingFit, linear_fit
from .flower import _require_exponent_ready, dimension, nu_exact, rg_map, threshold_exact
from .weights import DomainError, check_unit


@dataclass(frozen=True)
class TransferState:
    x: float
    y: float
    log_t: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.x <= 1.0 and 0.0 <= self.y <= 1.0):
            raise DomainError(f"state ({self.x}, {self.y}) outside [0, 1]")
        if self.log_t > 1e-12:
            raise DomainError("ln t must be <= 0")

    @property
    def t(self) -> float:
        return math.exp(self.log_t)


@dataclass
class StrengthCurve:
    calculus: str
    U: int
    V: int
    points: list[tuple[float, float, int]]  # (w, ln strength, n)


def _branch_exponents(U, V):
    """(x->A, y->A, y->B, x->B) link counts for every branch."""
    rows = [(a, U + V - 1 - a, U - 1 - a, V + a) for a in range(U)]
    rows += [(b, U + V - 1 - b, V - 1 - b, U + b) for b in range(V)]
    return np.array(rows, dtype=float)


def _layer(calc: Calculus, U, V, w, x, y, exps=None):
    """Branch-resolved outputs for arrays w, x, y of shape (m,).

    Returns x', y', r with shape (m, U + V).
    """
    if exps is None:
        exps = _branch_exponents(U, V)
    w = np.asarray(w, dtype=float)[:, None]
    x = np.asarray(x, dtype=float)[:, None]
    y = np.asarray(y, dtype=float)[:, None]
    R = np.array([rg_map(calc, U, V, float(v)) for v in w[:, 0]])[:, None]
    with np.errstate(divide="ignore", invalid="ignore", under="ignore"):
        wp = [w ** exps[:, k] for k in range(4)]
        A = para2(calc, x * wp[0], y * wp[1])
        B = para2(calc, y * wp[2], x * wp[3])
        live = (A > 0) & (B > 0) & (R > 0)
        xn = np.where(live, np.sqrt(R * A / B), 0.0)
        yn = np.where(live, R / np.where(live, xn, 1.0), 0.0)
        r = np.where(live, np.sqrt(A * B / R), 0.0)
    return np.clip(xn, 0, 1), np.clip(yn, 0, 1), np.clip(r, 0, 1)


def transfer_step(calculus, U, V, branch: int, w, state: TransferState,
                  variant: str = "closed_form") -> TransferState:
    calc = Calculus.parse(calculus)
    w = calc.value_of(w)
    if not 0 <= branch < U + V:
        raise DomainError(f"branch {branch} outside 0..{U + V - 1}")
    if variant == "star_mesh":
        leg_node, leg_a, leg_b = _star_mesh_step(calc, U, V, branch, w, state.x, state.y)
        log_r = math.log(leg_node) if leg_node > 0 else -math.inf
        return TransferState(leg_a, leg_b, state.log_t + log_r)
    if variant != "closed_form":
        raise DomainError(f"unknown variant {variant!r}")
    xn, yn, r = _layer(calc, U, V, [w], [state.x], [state.y])
    r = float(r[0, branch])
    log_r = math.log(r) if r > 0 else -math.inf
    return TransferState(float(xn[0, branch]), float(yn[0, branch]), state.log_t + log_r)


def _star_mesh_step(calc, U, V, branch, w, x, y):
    """Same step computed by reducing the explicit motif and fitting a star."""
    from .reduction import TwoTerminalNetwork, mesh_to_star

    if branch < U:
        arm, other, pos = U, V, branch
    else:
        arm, other, pos = V, U, branch - U
    # 0 = A', 1 = B', 2 = the tracked node; chain nodes numbered from 3
    ids = itertools.count(3)
    edges = []

    def chain(start, end, count):
        prev = start
        for _ in range(count - 1):
            node = next(ids)
            edges.append((prev, node, w))
            prev = node
        edges.append((prev, end, w))

    left = next(ids) if pos > 0 else 0
    right = next(ids) if arm - 1 - pos > 0 else 1
    if pos > 0:
        chain(0, left, pos)
    if arm - 1 - pos > 0:
        chain(right, 1, arm - 1 - pos)
    edges += [(left, 2, x), (2, right, y)]
    chain(0, 1, other)
    star = mesh_to_star(calc, TwoTerminalNetwork(edges, 0, 1), [2, 0, 1])
    return tuple(star.leaf_weights)


# -- iteration --------------------------------------------------------------

def _seed(seed, w):
    if seed == "w":
        return np.array(w, dtype=float), np.array(w, dtype=float)
    if seed == "ones":
        return np.ones_like(w), np.ones_like(w)
    raise DomainError(f"unknown seed {seed!r}")


def strength_layers(calculus, U, V, n: int, w, seed="w", flow=True):
    """ln strength after each of layers 1..n, for an array of weights.

    With ``flow`` the link weight is renormalised layer by layer; without it
    the weight is held fixed, which is exact at the fixed point and keeps
    round-off in w_th from being amplified.
    Returns an array of shape (n, len(w)).
    """
    calc = Calculus.parse(calculus)
    if n < 1:
        raise DomainError("n must be >= 1")
    w = np.atleast_1d(np.array([check_unit("w", v) for v in np.atleast_1d(w)], dtype=float))
    x, y = _seed(seed, w)
    exps = _branch_exponents(U, V)
    log_t = np.zeros_like(w)
    out = np.empty((n, w.size))
    for j in range(n):
        xn, yn, r = _layer(calc, U, V, w, x, y, exps)
        with np.errstate(divide="ignore"):
            log_t = log_t + np.log(r.mean(axis=1))
        x, y = xn.mean(axis=1), yn.mean(axis=1)
        out[j] = log_t
        if flow:
            w = np.array([rg_map(calc, U, V, v) for v in w])
    return out


def strength_iterate(calculus, U, V, n: int, w, seed="w", flow=True) -> float:
    return float(strength_layers(calculus, U, V, n, [w], seed, flow)[-1, 0])


def strength_curve(calculus, U, V, n: int, ws, seed="w") -> StrengthCurve:
    calc = Calculus.parse(calculus)
    ws = sorted(float(v) for v in ws)
    vals = strength_layers(calc, U, V, n, ws, seed)[-1]
    return StrengthCurve(calc.value, U, V, [(w, float(v), n) for w, v in zip(ws, vals)])


# -- critical quantities ----------------------------------------------------

def layer_fixed_point(calculus, U, V, w, tol=1e-15, max_iter=100000):
    """(x*, y*) of the averaged layer map at fixed link weight w."""
    calc = Calculus.parse(calculus)
    exps = _branch_exponents(U, V)
    x = y = np.array([w])
    for _ in range(max_iter):
        xn, yn, _ = _layer(calc, U, V, [w], x, y, exps)
        xn, yn = xn.mean(axis=1), yn.mean(axis=1)
        if abs(xn[0] - x[0]) <= tol and abs(yn[0] - y[0]) <= tol:
            return float(xn[0]), float(yn[0])
        x, y = xn, yn
    raise ArithmeticError("layer map did not settle")


def critical_ratio(calculus, U, V, w=None) -> float:
    """Branch-averaged t'/t at the layer fixed point (default w = w_th)."""
    calc = Calculus.parse(calculus)
    _require_exponent_ready(U, V)
    if w is None:
        w = threshold_exact(calc, U, V)
    x, y = layer_fixed_point(calc, U, V, w)
    _, _, r = _layer(calc, U, V, [w], [x], [y])
    return float(r.mean())


def symmetric_ratio(calculus, U, V, w=None) -> float:
    """Branch-averaged t'/t with x = y = sqrt(w) imposed."""
    calc = Calculus.parse(calculus)
    if w is None:
        w = threshold_exact(calc, U, V)
    s = math.sqrt(w)
    _, _, r = _layer(calc, U, V, [w], [s], [s])
    return float(r.mean())


def fractal_dimension_from_ratio(U, V, ratio) -> float:
    return math.log((U + V) * ratio) / math.log(U)


def theta_exponent(U, V, ratio) -> float:
    return -math.log(ratio) / math.log(U + V)


def _log_points(calc, U, V, n_range, w):
    n_range = list(n_range)
    layers = strength_layers(calc, U, V, max(n_range), [w], flow=False)[:, 0]
    return n_range, layers


def fractal_dimension_fit(calculus, U, V, n_range=range(20, 38), w=None) -> ScalingFit:
    """Slope of ln N_g = n ln(U+V) + ln strength against ln L = n ln U."""
    calc = Calculus.parse(calculus)
    _require_exponent_ready(U, V)
    if w is None:
        w = threshold_exact(calc, U, V)
    ns, layers = _log_points(calc, U, V, n_range, w)
    pts = [(n * math.log(U), n * math.log(U + V) + layers[n - 1]) for n in ns]
    slope, intercept, se = linear_fit(*zip(*pts))
    return ScalingFit(slope, se, pts, (0, len(pts)), slope, intercept)


def beta_fit(calculus, U, V, method="order_parameter", n=150,
             window=(1e-4, 1e-2), points=25, n_range=range(20, 38)) -> ScalingFit:
    calc = Calculus.parse(calculus)
    _require_exponent_ready(U, V)
    w_th = threshold_exact(calc, U, V)
    if method == "slope":
        ns, layers = _log_points(calc, U, V, n_range, w_th)
        pts = [(n * math.log(U), layers[n - 1]) for n in ns]
        slope, intercept, se = linear_fit(*zip(*pts))
        nu = nu_exact(calc, U, V)
        return ScalingFit(-nu * slope, nu * se, pts, (0, len(pts)), slope, intercept)
    if method != "order_parameter":
        raise DomainError(f"unknown beta method {method!r}")
    lo, hi = window
    if not (0 < lo < hi and w_th + hi < 1):
        raise DomainError(f"window {window} leaves no room above w_th = {w_th}")
    deltas = np.geomspace(lo, hi, points)
    vals = strength_layers(calc, U, V, n, w_th + deltas)[-1]
    ok = np.isfinite(vals)
    if ok.sum() < 3 or np.ptp(vals[ok]) <= 0:
        raise ArithmeticError(
            f"insufficient dynamic range: {int(ok.sum())} finite points, "
            f"ln strength spans {np.ptp(vals[ok]) if ok.any() else 0.0}"
        )
    pts = [(math.log(d), float(v)) for d, v in zip(deltas[ok], vals[ok])]
    slope, intercept, se = linear_fit(*zip(*pts))
    return ScalingFit(slope, se, pts, (0, len(pts)), slope, intercept)


def hyperscaling_residual(calculus, U, V, w=None) -> float:
    """d - d_f - beta/nu, with beta from the slope method.

    Passing w = 1 gives the degenerate perfect-network check.
    """
    calc = Calculus.parse(calculus)
    d = dimension(U, V)
    if w is not None and w >= 1.0:
        df = fractal_dimension_fit(calc, U, V, w=1.0).exponent
        return d - df - 0.0
    df = fractal_dimension_fit(calc, U, V).exponent
    beta = beta_fit(calc, U, V, method="slope").exponent
    return d - df - beta / nu_exact(calc, U, V)
