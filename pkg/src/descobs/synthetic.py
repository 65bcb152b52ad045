"""Synthetic test systems with analytic ground truth.

Each ``*_problem`` function returns the model plus a plant object exposing
``initial_state()``, ``rhs(t, s)`` and ``measure(t, s)`` so the harness
can co-simulate plant and observer on one grid.
"""

from __future__ import annotations

import numpy as np

from .canonical import make_scf
from .descriptor import invertible_a22_rhs, make_descriptor


# -- descriptor with invertible A22 ------------------------------------------

def invertible_a22_system():
    return make_descriptor(
        A11=lambda t: np.array([[-0.1, 1.0], [-(2.0 + 0.5 * np.sin(t)), -0.2]]),
        A12=np.array([[0.5], [1.0]]),
        A21=np.array([[1.0, 0.5]]),
        A22=lambda t: np.array([[-(2.0 + np.cos(t))]]),
        B1=np.array([[0.0], [1.0]]),
        B2=np.array([[0.5]]),
        F1=np.array([[0.0], [1.0]]),
        F2=np.array([[0.3]]),
        Ca=np.array([[1.0, 0.0]]),
        Cb=np.array([[0.5]]),
        u=lambda t: np.array([np.sin(1.3 * t) + 0.5 * np.cos(0.4 * t)]),
        name="synthetic-ltv-invertible-a22",
    )


class InvertibleA22Plant:
    def __init__(self, sys, x_a0, theta):
        self.sys = sys
        self.x_a0 = np.asarray(x_a0, dtype=float)
        self.theta = np.asarray(theta, dtype=float).reshape(sys.q)
        self._rhs = invertible_a22_rhs(sys, self.theta)

    def initial_state(self):
        return self.x_a0.copy()

    def rhs(self, t, s):
        return self._rhs(t, s)

    def measure(self, t, s):
        sys = self.sys
        u = sys.input(t)
        xb = -np.linalg.solve(sys.A22(t), sys.A21(t) @ s + sys.B2(t) @ u + sys.F2(t) @ self.theta)
        return s.copy(), xb, sys.Ca(t) @ s + sys.Cb(t) @ xb


# -- canonical-form systems ---------------------------------------------------

def _oscillator(t):
    return np.array([[0.0, 1.0], [-(1.0 + 0.5 * np.sin(t)), -0.1]])


class ScfPlant:
    """Reference trajectory of a canonical-form system with constant ``N``.

    ``fb`` derivatives are analytic: ``dfb(t)`` and ``ddfb1(t)`` (second
    derivative of the first entry) are needed when ``n_b = 3``.
    """

    def __init__(self, scf, z_a0, theta=(), dfb=None, ddfb1=None):
        self.scf = scf
        self.z_a0 = np.asarray(z_a0, dtype=float)
        self.theta = np.asarray(theta, dtype=float).reshape(scf.q)
        self.dfb = dfb
        self.ddfb1 = ddfb1

    def initial_state(self):
        return self.z_a0.copy()

    def rhs(self, t, s):
        scf = self.scf
        return scf.Aa(t) @ s + scf.fa(t) + scf.Fa(t) @ self.theta

    def z_b(self, t):
        scf = self.scf
        fb = scf.fb(t)
        N = scf.N(t)
        if not np.any(N):
            return -fb
        if scf.n_b != 3:
            raise NotImplementedError("reference z_b implemented for n_b = 3 chains only")
        dfb = self.dfb(t)
        zb1, dzb1 = -fb[0], -dfb[0]
        zb2 = N[1, 0] * dzb1 - fb[1]
        dzb2 = -N[1, 0] * self.ddfb1(t) - dfb[1]
        zb3 = N[2, 0] * dzb1 + N[2, 1] * dzb2 - fb[2]
        return np.array([zb1, zb2, zb3])

    def dz_b12(self, t):
        """Analytic ``(z_b1', z_b2')`` for constant ``N``."""
        N = self.scf.N(t)
        dfb = self.dfb(t)
        return np.array([-dfb[0], -N[1, 0] * self.ddfb1(t) - dfb[1]])

    def measure(self, t, s):
        zb = self.z_b(t)
        return s.copy(), zb, self.scf.Ca(t) @ s + self.scf.Cb(t) @ zb


def strangeness_free_scf():
    return make_scf(
        Aa=_oscillator,
        N=np.zeros((2, 2)),
        fa=lambda t: np.array([0.0, np.cos(0.7 * t)]),
        Fa=np.array([[0.0], [1.0]]),
        fb=lambda t: np.array([np.sin(t), np.cos(3.0 * t)]),
        Ca=np.array([[1.0, 0.0]]),
        Cb=np.array([[1.0, -0.5]]),
        name="synthetic-scf-strangeness-free",
    )


SF_Z_A0 = np.array([1.0, -0.5])
SF_THETA = np.array([0.4])

ZW_N = np.array([[0.0, 0.0, 0.0], [0.5, 0.0, 0.0], [0.8, -1.5, 0.0]])
ZW_Z_A0 = np.array([1.0, -0.5])


def zw_scf():
    """``n_b = 3`` chain with constant ``N`` and constant output weights
    ``C_w = (1, 2)``; ``a1 = 1 / N21 = 2`` so ``a1 C_w1 / C_w2 = 1 > 0``."""
    Cb = np.array([[0.0, 0.0, 0.0], [1.0, 2.0, 0.0]])
    return make_scf(
        Aa=_oscillator,
        N=ZW_N,
        fa=lambda t: np.array([0.0, np.cos(0.7 * t)]),
        fb=zw_fb,
        Ca=np.array([[1.0, 0.0], [0.5, 0.2]]),
        Cb=Cb,
        dCb=np.zeros_like(Cb),
        name="synthetic-scf-zw",
    )


def zw_fb(t):
    return np.array([np.sin(t), 0.5 * np.cos(2.0 * t), 0.3 * np.sin(3.0 * t)])


def zw_dfb(t):
    return np.array([np.cos(t), -np.sin(2.0 * t), 0.9 * np.cos(3.0 * t)])


def zw_ddfb1(t):
    return -np.sin(t)


def zw_plant(scf=None, z_a0=ZW_Z_A0):
    return ScfPlant(scf or zw_scf(), z_a0, (), zw_dfb, zw_ddfb1)
