"""Link-weight coordinates.

A link is the pure state cos(theta)|00> + sin(theta)|11> with theta in
[0, pi/4].  Two derived coordinates are used by the connectivity calculi:

    p = 2 sin^2(theta)   (classical percolation probability)
    c = sin(2 theta)     (concurrence)

They satisfy c^2 = 2p - p^2 and are all monotone increasing in theta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

THETA_MAX = math.pi / 4
# absorbs round-off at the domain edges, nothing more
_SLACK = 1e-15


class DomainError(ValueError):
    """Argument outside the domain of a link weight or calculus value."""


def check_unit(name: str, value: float) -> float:
    value = float(value)
    if not (-_SLACK <= value <= 1 + _SLACK) or math.isnan(value):
        raise DomainError(f"{name}={value!r} outside [0, 1]")
    return min(max(value, 0.0), 1.0)


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if not (-_SLACK <= theta <= THETA_MAX + _SLACK) or math.isnan(theta):
        raise DomainError(f"theta={theta!r} outside [0, pi/4]")
    return min(max(theta, 0.0), THETA_MAX)


def theta_to_p(theta: float) -> float:
    theta = _check_theta(theta)
    return 2.0 * math.sin(theta) ** 2


def theta_to_c(theta: float) -> float:
    theta = _check_theta(theta)
    return math.sin(2.0 * theta)


def p_to_theta(p: float) -> float:
    p = check_unit("p", p)
    return math.asin(math.sqrt(p / 2.0))


def c_to_theta(c: float) -> float:
    c = check_unit("c", c)
    return 0.5 * math.asin(c)


@dataclass(frozen=True)
class LinkWeight:
    """A single link's entanglement, stored as theta."""

    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", _check_theta(self.theta))

    @classmethod
    def from_p(cls, p: float) -> "LinkWeight":
        return cls(p_to_theta(p))

    @classmethod
    def from_c(cls, c: float) -> "LinkWeight":
        return cls(c_to_theta(c))

    @property
    def p(self) -> float:
        return theta_to_p(self.theta)

    @property
    def c(self) -> float:
        return theta_to_c(self.theta)
