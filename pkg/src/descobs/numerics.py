"""Dense linear algebra kernels and the fixed-step RK4 integrator.

Everything here is a pure function of its arguments.  Matrices are small
(dimension <= 10), so plain numpy dense arrays are used throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ContractError, IntegrationDiverged, RankDeficientError

DEFAULT_STEP = 1e-3
DEFAULT_RANK_TOL = 1e-9

# Slack used when counting grid points so that e.g. (1.0 - 0.0) / 0.1 == 9.999...
# still yields the point t = 1.0.
_GRID_SLACK = 1e-9


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled solution.

    ``states[k]`` is the sample at ``times[k]``; for matrix-valued
    trajectories ``states`` has shape ``(N, n, n)``.
    """

    times: np.ndarray
    states: np.ndarray
    h: float

    def __len__(self):
        return len(self.times)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def grid_size(t0: float, t1: float, h: float) -> int:
    """Number of steps so that ``t0 + N*h`` is the largest grid point <= t1."""
    if h <= 0:
        raise ContractError(f"step must be positive, got h={h!r}")
    if t1 < t0:
        raise ContractError(f"empty span: t1={t1!r} < t0={t0!r}")
    return int(np.floor((t1 - t0) / h + _GRID_SLACK))


def time_grid(t0: float, t1: float, h: float) -> np.ndarray:
    n = grid_size(t0, t1, h)
    return t0 + h * np.arange(n + 1)


def rk4_step(rhs: Callable, t: float, x: np.ndarray, h: float) -> np.ndarray:
    """One classical Runge-Kutta step."""
    k1 = rhs(t, x)
    k2 = rhs(t + 0.5 * h, x + 0.5 * h * k1)
    k3 = rhs(t + 0.5 * h, x + 0.5 * h * k2)
    k4 = rhs(t + h, x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_fixed_step(rhs, t0, x0, t1, h=DEFAULT_STEP) -> Trajectory:
    """Integrate ``x' = rhs(t, x)`` with fixed-step RK4 on ``[t0, t1]``.

    Samples are taken at ``t0 + k*h``; the last one is the largest grid
    point not exceeding ``t1``.  ``x0`` may be any array shape; ``rhs``
    must return the same shape.

    Raises
    ------
    IntegrationDiverged
        When a sample contains inf or nan.
    """
    if not t1 > t0:
        raise ContractError(f"need t1 > t0, got t0={t0!r}, t1={t1!r}")
    n = grid_size(t0, t1, h)
    x = np.array(x0, dtype=float)
    states = np.empty((n + 1,) + x.shape)
    times = t0 + h * np.arange(n + 1)
    states[0] = x
    for k in range(n):
        x = rk4_step(rhs, times[k], x, h)
        if not np.all(np.isfinite(x)):
            raise IntegrationDiverged(times[k + 1])
        states[k + 1] = x
    return Trajectory(times, states, h)


def pseudoinverse_full_column_rank(M, tol=DEFAULT_RANK_TOL) -> np.ndarray:
    """Left inverse ``(M^T M)^{-1} M^T`` of a tall full-column-rank matrix.

    The normal matrix is checked before solving: if its smallest eigenvalue
    is below ``tol`` the matrix is treated as rank deficient.
    """
    M = np.asarray(M, dtype=float)
    s, t = M.shape
    if s < t:
        raise ContractError(f"pseudoinverse needs rows >= cols, got {M.shape}")
    if t == 0:
        return np.zeros((0, s))
    normal = M.T @ M
    lam_min = np.linalg.eigvalsh(normal)[0]
    if lam_min < tol:
        raise RankDeficientError(
            f"rank-deficient matrix: min eig of M^T M = {lam_min:.3e} < {tol:.1e}"
        )
    return np.linalg.solve(normal, M.T)


def propagate_fundamental(A, t0, t1, h=DEFAULT_STEP) -> Trajectory:
    """Fundamental matrix of ``z' = A(t) z`` normalised at ``t0``.

    Solves ``Z' = A(t) Z, Z(t0) = I`` so that every solution satisfies
    ``z(t) = Z(t) z(t0)``.
    """
    n = np.asarray(A(t0)).shape[0]
    return integrate_fixed_step(lambda t, Z: A(t) @ Z, t0, np.eye(n), t1, h)


def adjugate_and_det(M) -> tuple[np.ndarray, float]:
    """Adjugate and determinant of a square matrix.

    Small sizes use closed-form cofactors so that singular inputs are
    handled exactly; larger sizes fall back to cofactor expansion.
    """
    M = np.asarray(M, dtype=float)
    p = M.shape[0]
    if M.shape != (p, p) or p < 1:
        raise ContractError(f"adjugate needs a non-empty square matrix, got {M.shape}")
    if p == 1:
        return np.ones((1, 1)), float(M[0, 0])
    if p == 2:
        a, b = M[0]
        c, d = M[1]
        return np.array([[d, -b], [-c, a]]), float(a * d - b * c)
    if p == 3:
        return _adj3(M)
    cof = np.empty_like(M)
    for i in range(p):
        for j in range(p):
            minor = np.delete(np.delete(M, i, axis=0), j, axis=1)
            cof[i, j] = (-1.0) ** (i + j) * np.linalg.det(minor)
    adj = cof.T
    return adj, float(M[0] @ cof[0])


def _adj3(M):
    a, b, c = M[0]
    d, e, f = M[1]
    g, h, i = M[2]
    adj = np.array([
        [e * i - f * h, c * h - b * i, b * f - c * e],
        [f * g - d * i, a * i - c * g, c * d - a * f],
        [d * h - e * g, b * g - a * h, a * e - b * d],
    ])
    det = a * adj[0, 0] + b * adj[1, 0] + c * adj[2, 0]
    return adj, float(det)


def min_eig_symmetric(M) -> float:
    """Smallest eigenvalue of a symmetric matrix."""
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        raise ContractError("empty matrix")
    scale = np.linalg.norm(M)
    if np.max(np.abs(M - M.T), initial=0.0) > 1e-10 * scale:
        raise ContractError("matrix is not symmetric within 1e-10 relative tolerance")
    return float(np.linalg.eigvalsh(0.5 * (M + M.T))[0])
