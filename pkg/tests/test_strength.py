import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from pytest import approx

from conperc import asymptotics, strength
from conperc.connectivity import CLASSICAL, QUANTUM
from conperc.flower import dimension, threshold_exact
from conperc.strength import TransferState
from conperc.weights import DomainError
from oracles import classical_symmetric_ratio

both = pytest.mark.parametrize("calc", [CLASSICAL, QUANTUM])


# -- transfer_step --------------------------------------------------------------

@both
@pytest.mark.parametrize("branch", range(4))
def test_perfect_network_is_identity(calc, branch):
    out = strength.transfer_step(calc, 2, 2, branch, 1.0, TransferState(1.0, 1.0))
    assert (out.x, out.y, out.log_t) == approx((1.0, 1.0, 0.0), abs=1e-15)


@both
@given(st.floats(0.05, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.integers(0, 4))
def test_transfer_bounds(calc, w, x, y, branch):
    out = strength.transfer_step(calc, 2, 3, branch, w, TransferState(x, y, -0.5))
    assert 0.0 <= out.x <= 1.0 and 0.0 <= out.y <= 1.0
    assert out.log_t <= -0.5 + 1e-12


def test_symmetric_branch_keeps_symmetry():
    # in a (2,2) flower branch a = 0 mirrors onto a = 1; averaging the pair is symmetric
    outs = [strength.transfer_step(CLASSICAL, 2, 2, a, 0.7, TransferState(0.6, 0.6)) for a in (0, 1)]
    assert outs[0].x == approx(outs[1].y, abs=1e-15)
    assert outs[0].y == approx(outs[1].x, abs=1e-15)


def test_disconnected_branch_gives_zero_strength():
    out = strength.transfer_step(CLASSICAL, 2, 2, 0, 0.7, TransferState(0.0, 0.0))
    assert out.log_t == -math.inf


def test_transfer_rejects_bad_branch_and_state():
    with pytest.raises(DomainError):
        strength.transfer_step(CLASSICAL, 2, 2, 4, 0.5, TransferState(0.5, 0.5))
    with pytest.raises(DomainError):
        TransferState(1.2, 0.5)
    with pytest.raises(DomainError):
        TransferState(0.5, 0.5, 0.1)


@both
@pytest.mark.parametrize("w, x, y, branch", [(0.8, 0.9, 0.85, 0), (0.7, 0.8, 0.8, 3), (0.9, 0.95, 0.9, 2)])
def test_star_mesh_variant_close_to_closed_form(calc, w, x, y, branch):
    s = TransferState(x, y)
    a = strength.transfer_step(calc, 2, 2, branch, w, s)
    b = strength.transfer_step(calc, 2, 2, branch, w, s, variant="star_mesh")
    assert b.log_t == approx(a.log_t, abs=0.05)


@pytest.mark.parametrize("U, V", [(2, 2), (2, 3), (3, 5), (2, 9)])
def test_symmetric_ratio_matches_written_out_sum(U, V):
    p = threshold_exact(CLASSICAL, U, V)
    assert strength.symmetric_ratio(CLASSICAL, U, V) == approx(classical_symmetric_ratio(U, V, p), rel=1e-12)


# -- iteration -------------------------------------------------------------------

@both
def test_perfect_network_strength_one(calc):
    assert strength.strength_iterate(calc, 2, 2, 30, 1.0) == 0.0


@both
def test_subcritical_decay(calc):
    w = threshold_exact(calc, 2, 2) - 0.05
    layers = strength.strength_layers(calc, 2, 2, 60, [w])[:, 0]
    assert all(b <= a for a, b in zip(layers, layers[1:]))
    assert layers[-1] == -math.inf


@both
def test_strength_monotone_in_w(calc):
    ws = np.linspace(0.3, 0.999, 40)
    vals = strength.strength_layers(calc, 2, 2, 150, ws)[-1]
    finite = vals[np.isfinite(vals)]
    assert np.all(np.diff(finite) >= -1e-12)
    assert np.all(vals <= 0)


@both
def test_seed_insensitivity_at_threshold(calc):
    w = threshold_exact(calc, 2, 2)
    a = strength.strength_layers(calc, 2, 2, 40, [w], seed="w", flow=False)[:, 0]
    b = strength.strength_layers(calc, 2, 2, 40, [w], seed="ones", flow=False)[:, 0]
    # the per-layer slope forgets the seed
    assert np.diff(a)[-5:] == approx(np.diff(b)[-5:], abs=1e-10)


def test_strength_curve_onset_at_threshold():
    curve = strength.strength_curve(CLASSICAL, 2, 2, 150, np.linspace(0.5, 0.9, 41))
    p_th = threshold_exact(CLASSICAL, 2, 2)
    alive = [w for w, v, _ in curve.points if v > -50]
    assert min(alive) == approx(p_th, abs=0.011)
    assert all(n == 150 for *_, n in curve.points)


def test_strength_layers_domain():
    with pytest.raises(DomainError):
        strength.strength_layers(CLASSICAL, 2, 2, 0, [0.5])
    with pytest.raises(DomainError):
        strength.strength_layers(CLASSICAL, 2, 2, 3, [0.5], seed="zeros")


# -- critical quantities --------------------------------------------------------

@pytest.mark.parametrize("calc, d_f", [(CLASSICAL, 1.89675835), (QUANTUM, 1.9434305)])
def test_critical_ratio_dimension(calc, d_f):
    ratio = strength.critical_ratio(calc, 2, 2)
    assert strength.fractal_dimension_from_ratio(2, 2, ratio) == approx(d_f, abs=5e-7)
    theta = strength.theta_exponent(2, 2, ratio)
    assert 2 * (1 - theta) == approx(d_f, abs=5e-7)


@both
def test_critical_ratio_at_perfect_weight(calc):
    assert strength.critical_ratio(calc, 2, 2, w=1.0) == 1.0
    assert strength.theta_exponent(2, 2, 1.0) == 0.0


@pytest.mark.parametrize("calc, d_f", [(CLASSICAL, 1.89675835), (QUANTUM, 1.9434305)])
def test_fractal_dimension_fit(calc, d_f):
    assert strength.fractal_dimension_fit(calc, 2, 2).exponent == approx(d_f, abs=5e-4)


@both
def test_fractal_dimension_fit_perfect(calc):
    assert strength.fractal_dimension_fit(calc, 2, 2, w=1.0).exponent == approx(dimension(2, 2), abs=1e-12)


@both
def test_finite_size_dimension_drifts_toward_ratio(calc):
    target = strength.fractal_dimension_from_ratio(2, 2, strength.critical_ratio(calc, 2, 2))
    early = strength.fractal_dimension_fit(calc, 2, 2, range(2, 8)).exponent
    late = strength.fractal_dimension_fit(calc, 2, 2, range(20, 38)).exponent
    assert abs(late - target) < abs(early - target)


@pytest.mark.parametrize("calc, beta, tol", [(CLASSICAL, 0.168829, 2e-3), (QUANTUM, 0.076, 1e-2)])
@pytest.mark.parametrize("method", ["order_parameter", "slope"])
def test_beta(calc, beta, tol, method):
    fit = strength.beta_fit(calc, 2, 2, method=method)
    assert fit.exponent == approx(beta, abs=tol)
    assert fit.stderr >= 0


def test_classical_beta_above_cluster_value():
    # non-cluster beta sits a little above the cluster-defined 0.165
    assert strength.beta_fit(CLASSICAL, 2, 2).exponent - 0.165 == approx(0.004, abs=3e-3)


def test_beta_dynamic_range_error():
    with pytest.raises(ArithmeticError, match="dynamic range"):
        strength.beta_fit(CLASSICAL, 2, 2, points=2)
    with pytest.raises(DomainError):
        strength.beta_fit(CLASSICAL, 2, 2, window=(0.1, 0.5))


@pytest.mark.parametrize("calc, tol", [(CLASSICAL, 1e-5), (QUANTUM, 5e-3)])
def test_hyperscaling(calc, tol):
    assert abs(strength.hyperscaling_residual(calc, 2, 2)) <= tol


@both
def test_hyperscaling_perfect(calc):
    assert strength.hyperscaling_residual(calc, 2, 2, w=1.0) == approx(0.0, abs=1e-12)


def test_classical_ratio_converges_to_large_v_form():
    errs = []
    for V in (50, 100, 200, 400):
        exact = strength.symmetric_ratio(CLASSICAL, 2, V)
        errs.append(abs(exact / asymptotics.classical_ratio_limit(2, V) - 1))
    ratios = [errs[k] / errs[k + 1] for k in range(3)]
    assert ratios == approx([2, 2, 2], rel=0.15)
