import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from descobs.errors import ContractError, IntegrationDiverged, RankDeficientError
from descobs.numerics import (
    adjugate_and_det,
    grid_size,
    integrate_fixed_step,
    min_eig_symmetric,
    propagate_fundamental,
    pseudoinverse_full_column_rank,
    time_grid,
)


# -- integrator --------------------------------------------------------------

def test_zero_field_keeps_state():
    traj = integrate_fixed_step(lambda t, x: np.zeros(2), 0.0, [1.0, 2.0], 3.7, 0.01)
    assert np.all(traj.states == np.array([1.0, 2.0]))


def test_exponential_decay():
    traj = integrate_fixed_step(lambda t, x: -x, 0.0, 1.0, 1.0, 1e-3)
    assert traj.times[-1] == pytest.approx(1.0, abs=1e-12)
    assert abs(traj.final - np.exp(-1.0)) < 1e-9


def test_rotation_returns_after_full_turn():
    h = 2 * np.pi / 6283
    traj = integrate_fixed_step(lambda t, x: np.array([x[1], -x[0]]), 0.0, [1.0, 0.0],
                                2 * np.pi, h)
    assert traj.times[-1] == pytest.approx(2 * np.pi)
    assert np.linalg.norm(traj.final - [1.0, 0.0]) < 1e-6


def test_grid_includes_end_point_despite_rounding():
    assert grid_size(0.0, 1.0, 0.1) == 10
    assert time_grid(0.0, 30.0, 1e-3).shape == (30001,)


def test_integrator_rejects_bad_span():
    with pytest.raises(ContractError):
        integrate_fixed_step(lambda t, x: x, 1.0, [0.0], 1.0)
    with pytest.raises(ContractError):
        integrate_fixed_step(lambda t, x: x, 0.0, [0.0], 1.0, h=0.0)


def test_divergence_reported_with_time():
    with pytest.raises(IntegrationDiverged) as exc, np.errstate(over="ignore", invalid="ignore"):
        integrate_fixed_step(lambda t, x: x ** 2, 0.0, [1.0], 2.0, 0.01)
    assert 0.9 < exc.value.t <= 1.1


def test_rk4_is_fourth_order():
    errs = []
    for h in (0.1, 0.05):
        traj = integrate_fixed_step(lambda t, x: np.cos(t) * x, 0.0, 1.0, 2.0, h)
        errs.append(abs(traj.final - np.exp(np.sin(2.0))))
    assert 14 < errs[0] / errs[1] < 18


# -- pseudoinverse ----------------------------------------------------------

def test_pinv_identity():
    assert np.allclose(pseudoinverse_full_column_rank(np.eye(3)), np.eye(3))


def test_pinv_circuit_stack_at_zero():
    M = np.vstack([np.diag([-4.0, -2.0, 0.0]), [[0.0, 0.0, 1.0]]])
    P = pseudoinverse_full_column_rank(M)
    expected = np.array([[-0.25, 0, 0, 0], [0, -0.5, 0, 0], [0, 0, 0, 1.0]])
    assert np.allclose(P, expected, atol=1e-15)
    assert np.allclose(P @ M, np.eye(3), atol=1e-15)


def test_pinv_zero_column_rejected():
    M = np.array([[1.0, 0.0], [2.0, 0.0], [3.0, 0.0]])
    with pytest.raises(RankDeficientError):
        pseudoinverse_full_column_rank(M)


def test_pinv_wide_matrix_rejected():
    with pytest.raises(ContractError):
        pseudoinverse_full_column_rank(np.ones((2, 3)))


def test_pinv_matches_svd_pseudoinverse(rng):
    for _ in range(20):
        M = rng.normal(size=(6, 4))
        assert np.allclose(pseudoinverse_full_column_rank(M), np.linalg.pinv(M), atol=1e-10)


# -- fundamental matrix -----------------------------------------------------

def test_fundamental_zero_dynamics():
    traj = propagate_fundamental(lambda t: np.zeros((3, 3)), 0.0, 2.0, 0.01)
    assert np.all(traj.states == np.eye(3))


def test_fundamental_diagonal_closed_form():
    traj = propagate_fundamental(lambda t: np.diag([-1.0, -2.0]), 0.0, 1.0, 1e-3)
    assert np.allclose(traj.final, np.diag([np.exp(-1.0), np.exp(-2.0)]), atol=1e-8)


def test_fundamental_scalar_time_varying_closed_form():
    # z' = cos(t) z  =>  z(t) = exp(sin t) z0
    traj = propagate_fundamental(lambda t: np.array([[np.cos(t)]]), 0.0, 3.0, 1e-3)
    assert np.allclose(traj.states[:, 0, 0], np.exp(np.sin(traj.times)), rtol=1e-10)


def test_fundamental_maps_initial_state(rng):
    A0, A1 = rng.normal(size=(2, 3, 3))

    def A(t):
        return A0 + A1 * np.sin(2.0 * t)

    z0 = rng.normal(size=3)
    Z = propagate_fundamental(A, 0.0, 2.0, 1e-3)
    z = integrate_fixed_step(lambda t, x: A(t) @ x, 0.0, z0, 2.0, 1e-3)
    assert np.max(np.abs(z.states - Z.states @ z0)) < 1e-8


def test_fundamental_composition(rng):
    """Phi(t2, t0) = Phi(t2, t1) Phi(t1, t0) on grid points."""
    A0 = rng.normal(size=(2, 2))

    def A(t):
        return A0 * np.cos(t)

    full = propagate_fundamental(A, 0.0, 2.0, 1e-3)
    first = propagate_fundamental(A, 0.0, 1.0, 1e-3)
    second = propagate_fundamental(A, 1.0, 2.0, 1e-3)
    assert np.allclose(full.final, second.final @ first.final, atol=1e-9)


# -- adjugate / determinant -------------------------------------------------

def test_adjugate_identity():
    adj, det = adjugate_and_det(np.eye(2))
    assert np.array_equal(adj, np.eye(2)) and det == 1.0


def test_adjugate_diagonal():
    adj, det = adjugate_and_det(np.diag([2.0, 3.0]))
    assert np.array_equal(adj, np.diag([3.0, 2.0])) and det == 6.0


def test_adjugate_singular():
    M = np.ones((2, 2))
    adj, det = adjugate_and_det(M)
    assert det == 0.0
    assert np.array_equal(adj @ M, np.zeros((2, 2)))


def test_adjugate_singular_3x3_is_rank_one():
    M = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [0.0, 1.0, 1.0]])
    adj, det = adjugate_and_det(M)
    assert det == 0.0
    assert np.allclose(adj @ M, 0.0)
    assert np.linalg.matrix_rank(adj) == 1


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, st.sampled_from([(1, 1), (2, 2), (3, 3), (4, 4), (5, 5)]),
              elements=st.floats(-10, 10)))
def test_adjugate_identity_property(M):
    adj, det = adjugate_and_det(M)
    p = M.shape[0]
    scale = max(1.0, np.linalg.norm(M)) ** p
    assert np.max(np.abs(adj @ M - det * np.eye(p))) <= 1e-10 * scale
    assert np.max(np.abs(M @ adj - det * np.eye(p))) <= 1e-10 * scale
    with np.errstate(divide="ignore", invalid="ignore"):
        ref = np.linalg.det(M)
    assert abs(det - ref) <= 1e-10 * scale


# -- symmetric minimum eigenvalue ------------------------------------------

def test_min_eig_examples():
    assert min_eig_symmetric(np.eye(3)) == 1.0
    assert min_eig_symmetric(np.diag([np.pi, 5.0])) == pytest.approx(np.pi, abs=1e-15)
    assert min_eig_symmetric(np.zeros((2, 2))) == 0.0


def test_min_eig_rejects_asymmetric():
    with pytest.raises(ContractError):
        min_eig_symmetric(np.array([[1.0, 2.0], [0.0, 1.0]]))


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, (4, 3), elements=st.floats(-5, 5)))
def test_gram_matrix_min_eig_nonnegative(W):
    assert min_eig_symmetric(W.T @ W) >= -1e-10 * max(1.0, np.linalg.norm(W) ** 2)
