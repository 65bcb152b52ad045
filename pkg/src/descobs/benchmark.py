"""Time-varying RLC benchmark circuit with negative resistances.

State ``x = (e1, e2, i_l, i_r1, i_r2, i_v)``, input ``u = V``, output
``y = i_l + i_v``.  Differential part ``x_a = (e1, e2, i_l)``, algebraic
part ``x_b = (i_r1, i_r2, i_v)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .descriptor import GroundTruth, SemiExplicitDescriptor, make_descriptor
from .errors import AssumptionViolation
from .numerics import DEFAULT_STEP, integrate_fixed_step

X_A0 = np.array([0.0, 1.0, 2.0])
X_B0 = np.array([0.25, 0.0, -0.25])
XI_A0 = np.array([1.0, 0.0, 0.0])
LAMBDA = (0.1, 0.2, 0.3)
GAMMA = 1e10


@dataclass(frozen=True)
class CircuitElements:
    """Element laws with analytic derivatives; ``u_scale`` scales the source."""

    u_scale: float = 1.0

    @staticmethod
    def C1(t):
        return 3.0 + np.cos(t / 3.0)

    @staticmethod
    def dC1(t):
        return -np.sin(t / 3.0) / 3.0

    @staticmethod
    def C2(t):
        return 2.0 - np.cos(2.0 * t)

    @staticmethod
    def dC2(t):
        return 2.0 * np.sin(2.0 * t)

    @staticmethod
    def L(t):
        return 2.0 - np.exp(-t)

    @staticmethod
    def dL(t):
        return np.exp(-t)

    @staticmethod
    def R1(t):
        return -(4.0 + 2.0 * np.sin(t))

    @staticmethod
    def R2(t):
        return -(2.0 + np.sin(t))

    def u(self, t):
        return self.u_scale * 4.0 * np.cos(2.0 * t) * np.sin(t / 5.0)

    def du(self, t):
        """Analytic input derivative; ground truth only, never used by observers."""
        return self.u_scale * (-8.0 * np.sin(2.0 * t) * np.sin(t / 5.0)
                               + 0.8 * np.cos(2.0 * t) * np.cos(t / 5.0))


A21 = np.array([[-1.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
B2 = np.array([[0.0], [0.0], [-1.0]])
C_ROW = np.array([[0.0, 0.0, 1.0]])


def circuit_system(elements=None, F1=None, name="circuit-bobtsov") -> SemiExplicitDescriptor:
    el = elements or CircuitElements()

    def A11(t):
        C1, C2, L = el.C1(t), el.C2(t), el.L(t)
        return np.array([
            [-el.dC1(t) / C1, 0.0, 0.0],
            [0.0, -el.dC2(t) / C2, -1.0 / C2],
            [0.0, 1.0 / L, -el.dL(t) / L],
        ])

    def A12(t):
        C1, C2 = el.C1(t), el.C2(t)
        return np.array([
            [1.0 / C1, -1.0 / C1, 1.0 / C1],
            [-1.0 / C2, 0.0, 0.0],
            [0.0, 0.0, 0.0],
        ])

    def A22(t):
        return np.diag([el.R1(t), el.R2(t), 0.0])

    return make_descriptor(
        A11=A11, A12=A12, A21=A21, A22=A22,
        B1=np.zeros((3, 1)), B2=B2, F1=F1,
        F2=None if F1 is None else np.zeros((3, 1)),
        Ca=C_ROW, Cb=C_ROW,
        u=lambda t: np.array([el.u(t)]),
        name=name,
    )


def adaptive_variant(theta_shape=None, elements=None) -> SemiExplicitDescriptor:
    """Circuit with one synthetic unknown parameter entering the first row:
    ``F1(t) = (sin t, 0, 0)^T`` by default."""
    shape = theta_shape or (lambda t: np.array([[np.sin(t)], [0.0], [0.0]]))
    return circuit_system(elements, F1=shape, name="circuit-adaptive")


# -- ground truth ------------------------------------------------------------

class CircuitPlant:
    """Analytic completion of the circuit used as the reference plant.

    The last algebraic row forces ``e1 = -u``; ``(e2, i_l)`` are integrated;
    the remaining currents follow from rows 1, 4 and 5 with ``e1' = -u'``
    taken analytically.  ``theta`` multiplies the first column of ``F1``.
    """

    def __init__(self, elements=None, theta=0.0, F1=None):
        self.el = elements or CircuitElements()
        self.theta = float(theta)
        self.F1 = F1 or (lambda t: np.array([[np.sin(t)], [0.0], [0.0]]))

    def initial_state(self, x_a0=X_A0):
        return np.array([x_a0[1], x_a0[2]], dtype=float)

    def _check(self, t):
        R1, R2 = self.el.R1(t), self.el.R2(t)
        if R1 == 0.0 or R2 == 0.0:
            raise AssumptionViolation("resistance vanishes", t=t)
        return R1, R2

    def rhs(self, t, s):
        el = self.el
        e2, il = s
        R1, _ = self._check(t)
        e1 = -el.u(t)
        ir1 = (e1 - e2) / R1
        f = self.F1(t)[:, 0] * self.theta if self.theta else np.zeros(3)
        de2 = (-el.dC2(t) * e2 - il - ir1) / el.C2(t) + f[1]
        dil = (e2 - el.dL(t) * il) / el.L(t) + f[2]
        return np.array([de2, dil])

    def measure(self, t, s):
        """``(x_a, x_b, y)`` at time ``t`` from the integrated state ``s``."""
        el = self.el
        e2, il = s
        R1, R2 = self._check(t)
        e1 = -el.u(t)
        de1 = -el.du(t)
        ir1 = (e1 - e2) / R1
        ir2 = e1 / R2
        f1 = self.F1(t)[0, 0] * self.theta if self.theta else 0.0
        iv = el.C1(t) * (de1 - f1) + el.dC1(t) * e1 - ir1 + ir2
        return np.array([e1, e2, il]), np.array([ir1, ir2, iv]), np.array([il + iv])


def circuit_ground_truth(t0=0.0, t1=30.0, h=DEFAULT_STEP, elements=None, theta=0.0,
                         x_a0=X_A0) -> GroundTruth:
    plant = CircuitPlant(elements, theta)
    traj = integrate_fixed_step(plant.rhs, t0, plant.initial_state(x_a0), t1, h)
    n = len(traj)
    xa, xb, y, u = np.empty((n, 3)), np.empty((n, 3)), np.empty((n, 1)), np.empty((n, 1))
    for k, (t, s) in enumerate(zip(traj.times, traj.states)):
        xa[k], xb[k], y[k] = plant.measure(t, s)
        u[k] = plant.el.u(t)
    th = np.array([theta]) if theta else np.zeros(0)
    return GroundTruth(traj.times, xa, xb, y, u, th)


@dataclass
class ConsistencyReport:
    residuals: np.ndarray
    passed: bool
    threshold: float = 1e-10

    def as_dict(self):
        return {"residuals": [float(v) for v in self.residuals], "passed": self.passed,
                "threshold": self.threshold}


def algebraic_residual(x_a, x_b, t, elements=None):
    """``A21 x_a + A22 x_b + B2 u`` for the circuit."""
    el = elements or CircuitElements()
    A22 = np.diag([el.R1(t), el.R2(t), 0.0])
    return A21 @ x_a + A22 @ x_b + B2[:, 0] * el.u(t)


def circuit_consistency_check(x_a0=X_A0, x_b0=X_B0, t0=0.0, elements=None,
                              threshold=1e-10) -> ConsistencyReport:
    """Residuals of the three algebraic rows at ``t0``.

    Only the explicit algebraic rows are checked; the hidden constraint
    obtained by differentiating ``e1 + u = 0`` (which pins ``i_v``) is not.
    """
    res = algebraic_residual(np.asarray(x_a0, float), np.asarray(x_b0, float), t0, elements)
    return ConsistencyReport(np.abs(res), bool(np.all(np.abs(res) <= threshold)), threshold)


def dae_residual(gt: GroundTruth, elements=None):
    """Residual ``E x' - A x - B u`` of the original six-row model at interior
    samples, with ``x'`` from central differences.  Shape ``(N-2, 6)``."""
    el = elements or CircuitElements()
    t = gt.times
    h = t[1] - t[0]
    x = gt.x
    dx = (x[2:] - x[:-2]) / (2.0 * h)
    out = np.empty((len(t) - 2, 6))
    for k in range(1, len(t) - 1):
        tk = t[k]
        E = np.diag([el.C1(tk), el.C2(tk), el.L(tk), 0.0, 0.0, 0.0])
        A = np.array([
            [-el.dC1(tk), 0, 0, 1, -1, 1],
            [0, -el.dC2(tk), -1, -1, 0, 0],
            [0, 1, -el.dL(tk), 0, 0, 0],
            [-1, 1, 0, el.R1(tk), 0, 0],
            [-1, 0, 0, 0, el.R2(tk), 0],
            [-1, 0, 0, 0, 0, 0],
        ], dtype=float)
        B = np.array([0, 0, 0, 0, 0, -1.0])
        out[k - 1] = E @ dx[k - 1] - A @ x[k] - B * gt.u[k, 0]
    return out
