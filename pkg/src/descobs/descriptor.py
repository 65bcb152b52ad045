"""Semi-explicit LTV descriptor systems.

The model is::

    x_a' = A11 x_a + A12 x_b + B1 u + F1 theta
       0 = A21 x_a + A22 x_b + B2 u + F2 theta
       y = Ca x_a + Cb x_b

with ``E = diag(I, 0)`` implicit.  Every block is a callable of time.
The algebraic part is resolved through the stacked matrix
``Ab(t) = [A22(t); Cb(t)]``, which must have full column rank
(impulse observability).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import AssumptionViolation, ContractError, RankDeficientError
from .numerics import (
    DEFAULT_RANK_TOL,
    DEFAULT_STEP,
    integrate_fixed_step,
    pseudoinverse_full_column_rank,
    time_grid,
)

MatrixFn = Callable[[float], np.ndarray]


def as_function(value, shape=None) -> MatrixFn:
    """Wrap a constant array as a callable of time; pass callables through."""
    if callable(value):
        return value
    arr = np.array(value, dtype=float)
    if shape is not None:
        arr = arr.reshape(shape)
    arr.setflags(write=False)
    return lambda t: arr


@dataclass(frozen=True)
class SemiExplicitDescriptor:
    n_a: int
    n_b: int
    m: int
    r: int
    q: int
    A11: MatrixFn
    A12: MatrixFn
    A21: MatrixFn
    A22: MatrixFn
    B1: MatrixFn
    B2: MatrixFn
    F1: MatrixFn
    F2: MatrixFn
    Ca: MatrixFn
    Cb: MatrixFn
    u: Callable[[float], np.ndarray]
    name: str = ""

    @property
    def n(self) -> int:
        return self.n_a + self.n_b

    def E(self) -> np.ndarray:
        E = np.zeros((self.n, self.n))
        E[: self.n_a, : self.n_a] = np.eye(self.n_a)
        return E

    def A(self, t) -> np.ndarray:
        return np.block([[self.A11(t), self.A12(t)], [self.A21(t), self.A22(t)]])

    def B(self, t) -> np.ndarray:
        return np.vstack([self.B1(t), self.B2(t)])

    def F(self, t) -> np.ndarray:
        return np.vstack([self.F1(t), self.F2(t)])

    def C(self, t) -> np.ndarray:
        return np.hstack([self.Ca(t), self.Cb(t)])

    def input(self, t) -> np.ndarray:
        return np.atleast_1d(np.asarray(self.u(t), dtype=float))

    def validate_shapes(self, t=0.0):
        na, nb, m, r, q = self.n_a, self.n_b, self.m, self.r, self.q
        expected = {
            "A11": (na, na), "A12": (na, nb), "A21": (nb, na), "A22": (nb, nb),
            "B1": (na, m), "B2": (nb, m), "F1": (na, q), "F2": (nb, q),
            "Ca": (r, na), "Cb": (r, nb),
        }
        for key, shape in expected.items():
            got = np.shape(getattr(self, key)(t))
            if got != shape:
                raise ContractError(f"{key}(t) has shape {got}, expected {shape}")
        if self.input(t).shape != (m,):
            raise ContractError(f"u(t) has shape {self.input(t).shape}, expected ({m},)")


def make_descriptor(*, A11, A12, A21, A22, Ca, Cb, B1=None, B2=None, F1=None,
                    F2=None, u=None, name="") -> SemiExplicitDescriptor:
    """Build a descriptor from constant arrays and/or callables.

    Dimensions are read off the blocks at ``t = 0``.  Missing input or
    parameter blocks default to zero width.
    """
    fns = {k: as_function(v) for k, v in dict(A11=A11, A12=A12, A21=A21,
                                                A22=A22, Ca=Ca, Cb=Cb).items()}
    n_a, n_b = np.shape(fns["A12"](0.0))
    r = np.shape(fns["Ca"](0.0))[0]
    if B1 is None and B2 is None:
        m = 0
    else:
        m = np.shape(as_function(B1 if B1 is not None else B2)(0.0))[1]
    fns["B1"] = as_function(B1 if B1 is not None else np.zeros((n_a, m)))
    fns["B2"] = as_function(B2 if B2 is not None else np.zeros((n_b, m)))
    if F1 is None and F2 is None:
        q = 0
    else:
        q = np.shape(as_function(F1 if F1 is not None else F2)(0.0))[1]
    fns["F1"] = as_function(F1 if F1 is not None else np.zeros((n_a, q)))
    fns["F2"] = as_function(F2 if F2 is not None else np.zeros((n_b, q)))
    if u is None:
        u = lambda t: np.zeros(m)
    sys = SemiExplicitDescriptor(n_a=n_a, n_b=n_b, m=m, r=r, q=q, u=u,
                                 name=name, **fns)
    sys.validate_shapes()
    return sys


def stack_Ab(sys: SemiExplicitDescriptor, t) -> np.ndarray:
    """``[A22(t); Cb(t)]``, shape ``(n_b + r, n_b)``."""
    return np.vstack([sys.A22(t), sys.Cb(t)])


def stack_G(sys, t) -> np.ndarray:
    """``[A21(t); Ca(t)]``, the coefficient of ``x_a`` in the algebraic rows."""
    return np.vstack([sys.A21(t), sys.Ca(t)])


def stack_Bu(sys, t) -> np.ndarray:
    """``[B2(t); 0]``."""
    return np.vstack([sys.B2(t), np.zeros((sys.r, sys.m))])


def stack_F(sys, t) -> np.ndarray:
    """``[F2(t); 0]``."""
    return np.vstack([sys.F2(t), np.zeros((sys.r, sys.q))])


def embed_output(sys, y) -> np.ndarray:
    """``[0; y]`` with a zero block of height ``n_b``."""
    return np.concatenate([np.zeros(sys.n_b), np.atleast_1d(y)])


def Ab_pinv(sys, t, tol=DEFAULT_RANK_TOL) -> np.ndarray:
    try:
        return pseudoinverse_full_column_rank(stack_Ab(sys, t), tol)
    except RankDeficientError as exc:
        raise RankDeficientError(f"Ab(t) loses column rank: {exc}", t=t) from None


# -- impulse observability -------------------------------------------------

@dataclass
class LtiRankTest:
    rank_lhs: int
    rank_E_plus_n: int

    @property
    def passed(self) -> bool:
        return self.rank_lhs == self.rank_E_plus_n


@dataclass
class ImpulseObservabilityReport:
    passed: bool
    first_failure: float | None
    min_eig: float
    argmin_t: float
    time_invariant: bool
    lti_rank: LtiRankTest | None = None

    def as_dict(self):
        d = {
            "passed": self.passed,
            "first_failure": self.first_failure,
            "min_eig_AbT_Ab": self.min_eig,
            "argmin_t": self.argmin_t,
            "time_invariant": self.time_invariant,
        }
        if self.lti_rank is not None:
            d["lti_rank_test"] = {
                "rank": self.lti_rank.rank_lhs,
                "rank_E_plus_n": self.lti_rank.rank_E_plus_n,
                "passed": self.lti_rank.passed,
            }
        return d


def lti_impulse_rank_test(E, A, C, tol=None) -> LtiRankTest:
    """Rank identity ``rank [[E, A], [0, C], [0, E]] = rank E + n``."""
    E, A, C = (np.atleast_2d(np.asarray(M, dtype=float)) for M in (E, A, C))
    n = E.shape[0]
    p = C.shape[0]
    big = np.block([
        [E, A],
        [np.zeros((p, n)), C],
        [np.zeros((n, n)), E],
    ])
    return LtiRankTest(
        int(np.linalg.matrix_rank(big, tol=tol)),
        int(np.linalg.matrix_rank(E, tol=tol)) + n,
    )


def _looks_time_invariant(sys, grid, samples=25):
    idx = np.unique(np.linspace(0, len(grid) - 1, min(samples, len(grid))).astype(int))
    ref = (sys.A(grid[0]), sys.C(grid[0]))
    for k in idx[1:]:
        t = grid[k]
        if not (np.array_equal(sys.A(t), ref[0]) and np.array_equal(sys.C(t), ref[1])):
            return False
    return True


def check_impulse_observability_grid(sys, t0, t1, h=DEFAULT_STEP,
                                     tol=DEFAULT_RANK_TOL) -> ImpulseObservabilityReport:
    """Check full column rank of ``Ab(t)`` at every grid point.

    For time-invariant systems the LTI rank identity is evaluated as well.
    """
    grid = time_grid(t0, t1, h)
    first_fail = None
    worst, worst_t = np.inf, float(grid[0])
    for t in grid:
        Ab = stack_Ab(sys, t)
        lam = float(np.linalg.eigvalsh(Ab.T @ Ab)[0]) if sys.n_b else np.inf
        if lam < worst:
            worst, worst_t = lam, float(t)
        if lam < tol and first_fail is None:
            first_fail = float(t)
    lti = None
    invariant = _looks_time_invariant(sys, grid)
    if invariant:
        lti = lti_impulse_rank_test(sys.E(), sys.A(t0), sys.C(t0))
    return ImpulseObservabilityReport(first_fail is None, first_fail, worst,
                                      worst_t, invariant, lti)


# -- reduction to an explicit ODE -------------------------------------------

@dataclass(frozen=True)
class ReducedOde:
    """``x_a' = A0 x_a + B0 u + D0 theta + yInjection y``."""

    A0: MatrixFn
    B0: MatrixFn
    D0: MatrixFn
    yInjection: MatrixFn


def reduced_matrices(sys, t, tol=DEFAULT_RANK_TOL):
    """``(A0, B0, D0, yInjection)`` evaluated at a single time."""
    P = Ab_pinv(sys, t, tol)
    A12 = sys.A12(t)
    A12P = A12 @ P
    A0 = sys.A11(t) - A12P @ stack_G(sys, t)
    B0 = sys.B1(t) - A12P @ stack_Bu(sys, t)
    D0 = sys.F1(t) - A12P @ stack_F(sys, t)
    inj = A12P[:, sys.n_b:]
    return A0, B0, D0, inj


def reduce_to_ode(sys, tol=DEFAULT_RANK_TOL) -> ReducedOde:
    return ReducedOde(
        A0=lambda t: reduced_matrices(sys, t, tol)[0],
        B0=lambda t: reduced_matrices(sys, t, tol)[1],
        D0=lambda t: reduced_matrices(sys, t, tol)[2],
        yInjection=lambda t: reduced_matrices(sys, t, tol)[3],
    )


def solve_xb(sys, t, x_a, theta, y, tol=DEFAULT_RANK_TOL) -> np.ndarray:
    """Algebraic state from the differential state, parameters and output.

    Least-squares solution of ``Ab x_b = [0; y] - G x_a - [B2; 0] u - [F2; 0] theta``.
    """
    P = Ab_pinv(sys, t, tol)
    theta = np.asarray(theta, dtype=float).reshape(sys.q)
    rhs = (stack_G(sys, t) @ np.asarray(x_a, dtype=float)
           + stack_Bu(sys, t) @ sys.input(t)
           + stack_F(sys, t) @ theta)
    return -P @ rhs + P @ embed_output(sys, y)


# -- ground truth when A22 is invertible ------------------------------------

@dataclass(frozen=True)
class GroundTruth:
    times: np.ndarray
    x_a: np.ndarray
    x_b: np.ndarray
    y: np.ndarray
    u: np.ndarray
    theta: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def x(self) -> np.ndarray:
        return np.hstack([self.x_a, self.x_b])


def _require_invertible(A22, t):
    if A22.size and abs(np.linalg.det(A22)) < 1e-12 * max(1.0, np.linalg.norm(A22)) ** A22.shape[0]:
        raise AssumptionViolation("A22(t) is singular", t=t)


def invertible_a22_rhs(sys, theta):
    """Explicit ODE for ``x_a`` obtained by eliminating ``x_b`` through A22."""
    theta = np.asarray(theta, dtype=float).reshape(sys.q)

    def rhs(t, xa):
        A22 = sys.A22(t)
        _require_invertible(A22, t)
        u = sys.input(t)
        xb = -np.linalg.solve(A22, sys.A21(t) @ xa + sys.B2(t) @ u + sys.F2(t) @ theta)
        return sys.A11(t) @ xa + sys.A12(t) @ xb + sys.B1(t) @ u + sys.F1(t) @ theta

    return rhs


def simulate_ground_truth_invertible_a22(sys, x_a0, theta, t0, t1,
                                         h=DEFAULT_STEP) -> GroundTruth:
    """Reference trajectory of a descriptor whose A22 is invertible on the grid."""
    theta = np.asarray(theta, dtype=float).reshape(sys.q)
    traj = integrate_fixed_step(invertible_a22_rhs(sys, theta), t0, x_a0, t1, h)
    xb = np.empty((len(traj), sys.n_b))
    ys = np.empty((len(traj), sys.r))
    us = np.empty((len(traj), sys.m))
    for k, (t, xa) in enumerate(zip(traj.times, traj.states)):
        A22 = sys.A22(t)
        _require_invertible(A22, t)
        us[k] = sys.input(t)
        xb[k] = -np.linalg.solve(A22, sys.A21(t) @ xa + sys.B2(t) @ us[k] + sys.F2(t) @ theta)
        ys[k] = sys.Ca(t) @ xa + sys.Cb(t) @ xb[k]
    return GroundTruth(traj.times, traj.states, xb, ys, us, theta)
