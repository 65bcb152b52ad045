"""Dynamic extension and regression equation for semi-explicit descriptors.

The differential state is written as ``x_a = xi_a + xi_b theta - Phi e0``
where ``(xi_a, xi_b, Phi)`` are driven by known signals, so that observing
``x_a`` reduces to estimating the constant vector ``eta = (theta, e0)``
from a linear regression ``Y = psi eta``.

Two regressors are available:

``"output"``
    Built from the output equation only: ``Y in R^r``.
``"projected"``
    Built from the full residual of ``Ab x_b = [0; y] - G x_a - ...``
    projected onto the left null space of ``Ab``.  Its last ``r`` rows are
    the ``"output"`` regressor; the extra rows keep the information carried
    by algebraic rows where ``A22`` vanishes, which the output block alone
    discards (the benchmark circuit is such a case: there the output
    regressor is identically zero).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .descriptor import (
    stack_Ab,
    stack_Bu,
    stack_F,
    stack_G,
    Ab_pinv,
    embed_output,
)
from .numerics import DEFAULT_RANK_TOL

REGRESSORS = ("output", "projected")


@dataclass
class GpeboExtension:
    xi_a: np.ndarray
    xi_b: np.ndarray
    Phi: np.ndarray

    @classmethod
    def initial(cls, sys, xi_a0=None) -> "GpeboExtension":
        xi_a0 = np.zeros(sys.n_a) if xi_a0 is None else np.asarray(xi_a0, dtype=float)
        return cls(xi_a0.copy(), np.zeros((sys.n_a, sys.q)), np.eye(sys.n_a))

    def pack(self) -> np.ndarray:
        return np.concatenate([self.xi_a, self.xi_b.ravel(), self.Phi.ravel()])

    @classmethod
    def unpack(cls, vec, n_a, q) -> "GpeboExtension":
        i = n_a
        j = i + n_a * q
        return cls(vec[:i], vec[i:j].reshape(n_a, q), vec[j:j + n_a * n_a].reshape(n_a, n_a))

    @staticmethod
    def size(n_a, q) -> int:
        return n_a + n_a * q + n_a * n_a


@dataclass
class RegressionSample:
    Y: np.ndarray
    psi: np.ndarray
    t: float
    q: int = 0

    @property
    def psi1(self) -> np.ndarray:
        return self.psi[:, : self.q]

    @property
    def psi2(self) -> np.ndarray:
        return self.psi[:, self.q:]

    def residual(self, eta) -> np.ndarray:
        return self.Y - self.psi @ np.asarray(eta, dtype=float)


class Snapshot:
    """All time-dependent matrices the observer needs at one instant."""

    __slots__ = ("t", "u", "Ca", "Cb", "G", "Bu", "F", "P", "A0", "B0", "D0",
                 "inj", "Pperp", "CbP", "K", "_nrow")

    def __init__(self, sys, t, tol=DEFAULT_RANK_TOL):
        self.t = t
        self.u = sys.input(t)
        self.Ca = sys.Ca(t)
        self.Cb = sys.Cb(t)
        self.G = stack_G(sys, t)
        self.Bu = stack_Bu(sys, t)
        self.F = stack_F(sys, t)
        P = Ab_pinv(sys, t, tol)
        self.P = P
        A12P = sys.A12(t) @ P
        self.A0 = sys.A11(t) - A12P @ self.G
        self.B0 = sys.B1(t) - A12P @ self.Bu
        self.D0 = sys.F1(t) - A12P @ self.F
        self.inj = A12P[:, sys.n_b:]
        Ab = stack_Ab(sys, t)
        self.Pperp = np.eye(Ab.shape[0]) - Ab @ P
        self.CbP = self.Cb @ P
        # output-block coefficient of x_a: Ca - Cb Ab^+ G
        self.K = self.Ca - self.CbP @ self.G
        self._nrow = None

    def constraint_row(self):
        """``(n^T Pperp, n^T Pperp G, n^T Pperp F)`` for the scalar regressor."""
        if self._nrow is None:
            nP = constraint_direction(self.Pperp) @ self.Pperp
            self._nrow = (nP, nP @ self.G, nP @ self.F)
        return self._nrow


def snapshot(sys, t, tol=DEFAULT_RANK_TOL) -> Snapshot:
    return Snapshot(sys, t, tol)


def extension_rhs(sys, red, t, ext: GpeboExtension, y, snap=None) -> GpeboExtension:
    """Time derivative of the dynamic extension.

    ``red`` may be a :class:`~descobs.descriptor.ReducedOde` or ``None``;
    the matrices are taken from ``snap`` when given.
    """
    if snap is None:
        if red is not None:
            A0, B0, D0, inj = red.A0(t), red.B0(t), red.D0(t), red.yInjection(t)
            u = sys.input(t)
        else:
            snap = Snapshot(sys, t)
    if snap is not None:
        A0, B0, D0, inj, u = snap.A0, snap.B0, snap.D0, snap.inj, snap.u
    y = np.atleast_1d(y)
    return GpeboExtension(
        A0 @ ext.xi_a + B0 @ u + inj @ y,
        A0 @ ext.xi_b + D0,
        A0 @ ext.Phi,
    )


def regression_sample(sys, t, ext: GpeboExtension, y, snap=None) -> RegressionSample:
    """Output-block regression ``Y = [psi1 psi2] (theta, e0)``, ``r`` rows."""
    s = snap if snap is not None else Snapshot(sys, t)
    y = np.atleast_1d(y)
    Y = (y - s.Ca @ ext.xi_a - s.CbP[:, sys.n_b:] @ y
         + s.CbP @ s.G @ ext.xi_a + s.CbP @ s.Bu @ s.u)
    psi1 = s.K @ ext.xi_b - s.CbP @ s.F
    psi2 = (s.CbP @ s.G - s.Ca) @ ext.Phi
    return RegressionSample(Y, np.hstack([psi1, psi2]), t, sys.q)


def projected_regression_sample(sys, t, ext: GpeboExtension, y, snap=None) -> RegressionSample:
    """Regression from the projected algebraic residual, ``n_b + r`` rows.

    ``Pperp = I - Ab Ab^+`` annihilates ``Ab x_b``, leaving
    ``Pperp ([-B2 u; y] - G x_a - [F2; 0] theta) = 0``.
    """
    s = snap if snap is not None else Snapshot(sys, t)
    w = embed_output(sys, y) - s.Bu @ s.u
    PG = s.Pperp @ s.G
    Y = s.Pperp @ w - PG @ ext.xi_a
    psi1 = PG @ ext.xi_b + s.Pperp @ s.F
    psi2 = -PG @ ext.Phi
    return RegressionSample(Y, np.hstack([psi1, psi2]), t, sys.q)


def constraint_direction(Pperp) -> np.ndarray:
    """Unit vector spanning the left null space of ``Ab`` when ``r = 1``.

    ``Pperp = n n^T``; the column with the largest diagonal entry is used
    and the sign is fixed by making that entry of ``n`` positive.
    """
    j = int(np.argmax(np.diag(Pperp)))
    return Pperp[:, j] / np.sqrt(Pperp[j, j])


def scalar_regression_sample(sys, t, ext, y, snap=None) -> RegressionSample:
    """Projected regression compressed to one row (requires ``r = 1``)."""
    s = snap if snap is not None else Snapshot(sys, t)
    nP, nPG, nPF = s.constraint_row()
    w = embed_output(sys, y) - s.Bu @ s.u
    Y = np.array([nP @ w - nPG @ ext.xi_a])
    psi = np.concatenate([nPG @ ext.xi_b + nPF, -nPG @ ext.Phi])[None, :]
    return RegressionSample(Y, psi, t, sys.q)


def reduced_regressor(sys, t, Phi, snap=None) -> np.ndarray:
    """Regressor of ``Y = psi0 e0`` when there are no unknown parameters."""
    s = snap if snap is not None else Snapshot(sys, t)
    return -(s.Ca - s.CbP @ s.G) @ Phi


def reconstruct_state(sys, t, ext: GpeboExtension, eta_hat, y, snap=None):
    """Certainty-equivalent state estimate ``(x_a_hat, x_b_hat)``."""
    s = snap if snap is not None else Snapshot(sys, t)
    eta_hat = np.asarray(eta_hat, dtype=float)
    theta_hat, e0_hat = eta_hat[: sys.q], eta_hat[sys.q:]
    xa = ext.xi_a + ext.xi_b @ theta_hat - ext.Phi @ e0_hat
    rhs = s.G @ xa + s.Bu @ s.u + s.F @ theta_hat
    xb = -s.P @ rhs + s.P[:, sys.n_b:] @ np.atleast_1d(y)
    return xa, xb


def true_eta(sys, xi_a0, x_a0, theta=None) -> np.ndarray:
    """``(theta, e0)`` with ``e0 = xi_a(0) + xi_b(0) theta - x_a(0)`` and ``xi_b(0) = 0``."""
    theta = np.zeros(sys.q) if theta is None else np.asarray(theta, dtype=float)
    return np.concatenate([theta, np.asarray(xi_a0, float) - np.asarray(x_a0, float)])


def phi_condition(Phi) -> float:
    return float(np.linalg.cond(Phi))
