import math

import pytest
from hypothesis import given
from hypothesis import strategies as st
from pytest import approx

from conperc.weights import (
    THETA_MAX,
    DomainError,
    LinkWeight,
    c_to_theta,
    p_to_theta,
    theta_to_c,
    theta_to_p,
)

thetas = st.floats(0.0, THETA_MAX)


@pytest.mark.parametrize("theta, p, c", [(0.0, 0.0, 0.0), (THETA_MAX, 1.0, 1.0), (math.pi / 8, 1 - math.sqrt(0.5), math.sqrt(0.5))])
def test_known_points(theta, p, c):
    assert theta_to_p(theta) == approx(p, abs=1e-15)
    assert theta_to_c(theta) == approx(c, abs=1e-15)


@given(thetas)
def test_concurrence_probability_identity(theta):
    p, c = theta_to_p(theta), theta_to_c(theta)
    assert c * c == approx(2 * p - p * p, abs=1e-14)


@given(thetas)
def test_round_trips(theta):
    assert p_to_theta(theta_to_p(theta)) == approx(theta, abs=1e-7)
    assert c_to_theta(theta_to_c(theta)) == approx(theta, abs=1e-7)


@given(thetas, thetas)
def test_monotone(a, b):
    lo, hi = sorted((a, b))
    assert theta_to_p(lo) <= theta_to_p(hi)
    assert theta_to_c(lo) <= theta_to_c(hi)


@pytest.mark.parametrize("bad", [-0.1, THETA_MAX + 0.01, float("nan")])
def test_theta_domain(bad):
    with pytest.raises(DomainError):
        LinkWeight(bad)


@pytest.mark.parametrize("bad", [-0.01, 1.01, float("nan")])
def test_unit_domain(bad):
    with pytest.raises(DomainError):
        p_to_theta(bad)
    with pytest.raises(DomainError):
        LinkWeight.from_c(bad)


def test_link_weight_constructors_agree():
    w = LinkWeight.from_p(0.5)
    assert LinkWeight.from_c(w.c).theta == approx(w.theta, abs=1e-12)
    assert w.p == approx(0.5)


def test_round_off_at_edges_is_absorbed():
    assert LinkWeight(THETA_MAX + 1e-16).theta == THETA_MAX
    assert p_to_theta(1 + 1e-16) == approx(THETA_MAX)
