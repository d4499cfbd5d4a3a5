"""Series/parallel connectivity rules for the two calculi.

Classical weights are probabilities p; quantum weights are concurrences c.
Series composition is a plain product in both calculi.  Parallel composition
differs:

    classical:  1 - prod(1 - p_i)
    quantum:    done in the "F-domain", F(c) = (1 + sqrt(1 - c^2)) / 2,
                F_par = max(prod F(c_i), 1/2),  c_par = 2 sqrt(F_par (1 - F_par))

Note on the quantum parallel rule: the binary formula commonly printed,
sqrt(1 - (2 F1 F2 - 1)^2), squares (2 F1 F2 - 1) and so for F1 F2 < 1/2 gives
a concurrence below 1 even for two perfect links.  Flooring the product at 1/2
restores para(1, 1) = 1 and makes the n-ary rule order independent.  Both
forms agree whenever prod F > 1/2.

All quantum arithmetic goes through g(c) = 1 - F(c) = c^2 / (2 (1 + sqrt(1 - c^2)))
so that neither c -> 0 nor c -> 1 loses precision.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .weights import DomainError, LinkWeight, check_unit


class Calculus(enum.Enum):
    CLASSICAL = "classical"
    QUANTUM = "quantum"

    @classmethod
    def parse(cls, value) -> "Calculus":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise DomainError(f"unknown calculus {value!r}") from None

    def value_of(self, w) -> float:
        """Coordinate of ``w`` in this calculus (p or c); floats pass through."""
        if isinstance(w, LinkWeight):
            return w.p if self is Calculus.CLASSICAL else w.c
        return check_unit("w", w)


CLASSICAL = Calculus.CLASSICAL
QUANTUM = Calculus.QUANTUM


def fidelity_defect(c: float) -> float:
    """1 - F(c) for a single concurrence."""
    if c <= 0.0:
        return 0.0
    if c >= 1.0:
        return 0.5
    return c * c / (2.0 * (1.0 + math.sqrt((1.0 - c) * (1.0 + c))))


def fidelity(c: float) -> float:
    return 1.0 - fidelity_defect(c)


def concurrence_from_log_fidelity(log_f: float) -> float:
    """Map a (log) F-domain product back to a concurrence, with the 1/2 floor."""
    if log_f <= -math.log(2.0):
        return 1.0
    f = math.exp(log_f)
    one_minus_f = -math.expm1(log_f)
    return min(2.0 * math.sqrt(f * one_minus_f), 1.0)


def path_log_fidelity(c: float, length: float) -> float:
    """ln F(c**length), stable for long paths and for c near 1."""
    if c <= 0.0:
        return 0.0
    if c >= 1.0:
        return -math.log(2.0)
    lc = 2.0 * length * math.log(c)
    c2l = math.exp(lc)
    g = c2l / (2.0 * (1.0 + math.sqrt(-math.expm1(lc))))
    return math.log1p(-g)


def path_log_failure(p: float, length: float) -> float:
    """ln(1 - p**length), or -inf when p == 1."""
    if p >= 1.0:
        return -math.inf
    if p <= 0.0:
        return 0.0
    return math.log(-math.expm1(length * math.log(p)))


def _checked(weights: Iterable[float]) -> list[float]:
    return [check_unit("weight", w) for w in weights]


def seri(calculus, weights: Iterable[float]) -> float:
    Calculus.parse(calculus)
    out = 1.0
    for w in _checked(weights):
        out *= w
    return min(max(out, 0.0), 1.0)


def para(calculus, weights: Iterable[float]) -> float:
    calculus = Calculus.parse(calculus)
    ws = _checked(weights)
    if not ws:
        return 0.0
    if calculus is Calculus.CLASSICAL:
        if any(w >= 1.0 for w in ws):
            return 1.0
        return min(-math.expm1(sum(math.log1p(-w) for w in ws)), 1.0)
    log_f = sum(math.log1p(-fidelity_defect(w)) for w in ws)
    return concurrence_from_log_fidelity(log_f)


def para2(calculus, a, b):
    """Vectorised binary parallel rule for numpy arrays (no domain checks)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if calculus is Calculus.CLASSICAL:
        return np.clip(a + b - a * b, 0.0, 1.0)
    ga = _defect_array(a)
    gb = _defect_array(b)
    one_minus_f = ga + gb - ga * gb
    f = 1.0 - one_minus_f
    out = 2.0 * np.sqrt(np.clip(f * one_minus_f, 0.0, None))
    return np.where(f <= 0.5, 1.0, np.clip(out, 0.0, 1.0))


def _defect_array(c):
    c = np.clip(c, 0.0, 1.0)
    return c * c / (2.0 * (1.0 + np.sqrt((1.0 - c) * (1.0 + c))))


@dataclass(frozen=True)
class PathEnsemble:
    """Edge-disjoint A-B paths grouped as (length, multiplicity) pairs."""

    entries: tuple[tuple[int, int], ...]

    def __init__(self, entries: Iterable[Sequence[int]]):
        merged: dict[int, int] = {}
        for length, mult in entries:
            length, mult = int(length), int(mult)
            if length <= 0 or mult <= 0:
                raise DomainError(f"invalid ensemble entry ({length}, {mult})")
            merged[length] = merged.get(length, 0) + mult
        object.__setattr__(self, "entries", tuple(sorted(merged.items())))

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    @property
    def lengths(self) -> list[int]:
        return [length for length, _ in self.entries]

    @property
    def total_paths(self) -> int:
        return sum(m for _, m in self.entries)

    @classmethod
    def from_lengths(cls, lengths: Iterable[int]) -> "PathEnsemble":
        return cls((length, 1) for length in lengths)


def ensemble_crossing(calculus, ensemble: PathEnsemble, w) -> float:
    """Parallel combination of the series chains described by ``ensemble``."""
    calculus = Calculus.parse(calculus)
    if not isinstance(ensemble, PathEnsemble):
        ensemble = PathEnsemble(ensemble)
    if len(ensemble) == 0:
        raise DomainError("empty path ensemble")
    x = calculus.value_of(w)
    if calculus is Calculus.CLASSICAL:
        total = sum(m * path_log_failure(x, length) for length, m in ensemble)
        if total == -math.inf:
            return 1.0
        return min(max(-math.expm1(total), 0.0), 1.0)
    log_f = sum(m * path_log_fidelity(x, length) for length, m in ensemble)
    return concurrence_from_log_fidelity(log_f)
