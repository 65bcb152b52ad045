"""Observers for descriptor systems given in standard canonical form.

The system is::

    z_a' = Aa(t) z_a + fa(t)
    N(t) z_b' = z_b + fb(t)           (N strictly lower triangular)
    y = Ca(t) z_a + Cb(t) z_b

Three observer paths are provided:

* strangeness-free (``N = 0``): ``z_b = -fb`` pointwise and ``z_a`` is
  observed by a GPEBO built on all outputs;
* ``z_a`` GPEBO from an output row that does not see ``z_b``;
* for ``n_b = 3``, an unknown-input observer for ``z_w = (z_b1, z_b2)``,
  treating ``zeta = z_b3 / N32`` as an unmeasured input.

Output row indices are 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .descriptor import as_function
from .errors import AssumptionViolation, ConfigError, ContractError
from .gpebo import RegressionSample
from .numerics import DEFAULT_STEP, propagate_fundamental

ROW_ZERO_TOL = 1e-12


@dataclass(frozen=True)
class StandardCanonicalForm:
    n_a: int
    n_b: int
    r: int
    q: int
    Aa: Callable
    N: Callable
    fa: Callable
    fb: Callable
    Ca: Callable
    Cb: Callable
    Fa: Callable
    dCb: Callable | None = None
    name: str = ""

    def C(self, t):
        return np.hstack([self.Ca(t), self.Cb(t)])


def make_scf(*, Aa, N, fa, fb, Ca, Cb, Fa=None, dCb=None, name=""):
    """Build a canonical-form system; constants are wrapped as callables.

    ``Fa`` (``n_a x q``) multiplies an unknown constant ``theta`` added to
    ``fa``; ``dCb`` is the analytic time derivative of ``Cb``.
    """
    Aa, N, Ca, Cb = (as_function(M) for M in (Aa, N, Ca, Cb))
    fa, fb = as_function(fa), as_function(fb)
    n_a = np.shape(Aa(0.0))[0]
    n_b = np.shape(N(0.0))[0]
    r = np.shape(Ca(0.0))[0]
    if Fa is None:
        Fa = as_function(np.zeros((n_a, 0)))
    else:
        Fa = as_function(Fa)
    q = np.shape(Fa(0.0))[1]
    if dCb is not None:
        dCb = as_function(dCb)
    scf = StandardCanonicalForm(n_a, n_b, r, q, Aa, N, fa, fb, Ca, Cb, Fa, dCb, name)
    for key, shape in {"Aa": (n_a, n_a), "N": (n_b, n_b), "Ca": (r, n_a),
                       "Cb": (r, n_b), "Fa": (n_a, q)}.items():
        if np.shape(getattr(scf, key)(0.0)) != shape:
            raise ContractError(f"{key}(0) has shape {np.shape(getattr(scf, key)(0.0))}, expected {shape}")
    if np.shape(fa(0.0)) != (n_a,) or np.shape(fb(0.0)) != (n_b,):
        raise ContractError("fa/fb have wrong length")
    return scf


# -- structural checks ------------------------------------------------------

@dataclass
class ScfReport:
    strictly_lower: bool
    strangeness_free: bool
    chain_nonvanishing: bool | None
    first_violation: float | None
    message: str = ""

    @property
    def passed(self) -> bool:
        return self.strictly_lower and (self.strangeness_free or bool(self.chain_nonvanishing))

    def as_dict(self):
        return {
            "strictly_lower": self.strictly_lower,
            "strangeness_free": self.strangeness_free,
            "chain_nonvanishing": self.chain_nonvanishing,
            "first_violation": self.first_violation,
            "message": self.message,
        }


def validate_scf(scf, grid, tol=1e-9) -> ScfReport:
    """Check strict lower triangularity of ``N`` and, for ``n_b = 3``,
    that ``N21``, ``N31`` and ``N32`` stay away from zero."""
    strictly_lower = True
    sf = True
    chain = True if scf.n_b == 3 else None
    first, msg = None, ""
    for t in grid:
        N = scf.N(t)
        if np.any(np.triu(N) != 0.0):
            strictly_lower = False
            if first is None:
                first, msg = float(t), "N is not strictly lower triangular"
        if np.any(N != 0.0):
            sf = False
        if scf.n_b == 3:
            weakest = min(abs(N[1, 0]), abs(N[2, 0]), abs(N[2, 1]))
            if weakest < tol:
                if chain and first is None:
                    first, msg = float(t), f"chain coefficient vanishes (|N_ij| = {weakest:.3e})"
                chain = False
    if sf:
        chain = None if scf.n_b != 3 else chain
    return ScfReport(strictly_lower, sf, chain, first, msg)


def strangeness_free_solve(scf, t) -> np.ndarray:
    """``z_b = -fb(t)``; valid only when ``N(t) = 0``."""
    if np.any(scf.N(t) != 0.0):
        raise ContractError(f"N(t) is not zero at t = {t!r}; system is not strangeness-free")
    return -np.asarray(scf.fb(t), dtype=float)


def select_output_row_za(scf, grid) -> int:
    """Smallest output row whose ``Cb`` entries vanish on the whole grid."""
    bad = np.zeros(scf.r, dtype=bool)
    for t in grid:
        bad |= np.any(np.abs(scf.Cb(t)) > ROW_ZERO_TOL, axis=1)
        if bad.all():
            break
    free = np.flatnonzero(~bad)
    if free.size == 0:
        raise AssumptionViolation("no output row is free of z_b")
    return int(free[0])


# -- GPEBO for z_a ----------------------------------------------------------

@dataclass
class ZaExtension:
    xi_a: np.ndarray
    xi_b: np.ndarray
    Phi: np.ndarray

    @classmethod
    def initial(cls, scf, xi_a0=None):
        xi_a0 = np.zeros(scf.n_a) if xi_a0 is None else np.asarray(xi_a0, dtype=float)
        return cls(xi_a0.copy(), np.zeros((scf.n_a, scf.q)), np.eye(scf.n_a))

    def pack(self):
        return np.concatenate([self.xi_a, self.xi_b.ravel(), self.Phi.ravel()])

    @classmethod
    def unpack(cls, vec, n_a, q):
        i, j = n_a, n_a + n_a * q
        return cls(vec[:i], vec[i:j].reshape(n_a, q), vec[j:j + n_a * n_a].reshape(n_a, n_a))

    @staticmethod
    def size(n_a, q):
        return n_a + n_a * q + n_a * n_a


def za_extension_rhs(scf, t, ext: ZaExtension) -> ZaExtension:
    """``xi_a' = Aa xi_a + fa``, ``xi_b' = Aa xi_b + Fa``, ``Phi' = Aa Phi``."""
    Aa = scf.Aa(t)
    return ZaExtension(Aa @ ext.xi_a + scf.fa(t), Aa @ ext.xi_b + scf.Fa(t), Aa @ ext.Phi)


def za_regression(scf, t, k, ext: ZaExtension, y_k) -> RegressionSample:
    """Scalar regression from output row ``k``:
    ``y_k - c^T xi_a = [c^T xi_b, -c^T Phi] (theta, theta_a)``."""
    c = scf.Ca(t)[k]
    Y = np.atleast_1d(float(np.atleast_1d(y_k)[0]) - c @ ext.xi_a)
    psi = np.concatenate([c @ ext.xi_b, -c @ ext.Phi])[None, :]
    return RegressionSample(Y, psi, t, scf.q)


def sf_regression(scf, t, ext: ZaExtension, y) -> RegressionSample:
    """All-output regression for the strangeness-free case, using ``z_b = -fb``."""
    Ca = scf.Ca(t)
    Y = np.atleast_1d(y) + scf.Cb(t) @ scf.fb(t) - Ca @ ext.xi_a
    psi = np.hstack([Ca @ ext.xi_b, -Ca @ ext.Phi])
    return RegressionSample(Y, psi, t, scf.q)


def za_estimate(ext: ZaExtension, eta_hat, q) -> np.ndarray:
    """``z_a_hat = xi_a + xi_b theta_hat - Phi theta_a_hat``."""
    eta_hat = np.asarray(eta_hat, dtype=float)
    return ext.xi_a + ext.xi_b @ eta_hat[:q] - ext.Phi @ eta_hat[q:]


# -- z_w subsystem (n_b = 3) --------------------------------------------------

@dataclass(frozen=True)
class ZwSubsystem:
    """``z_w' = [[0, a1], [0, a2]] z_w + (d1, d2) + (0, 1) zeta``, ``y_w = Cw^T z_w``."""

    a1: Callable
    a2: Callable
    d1: Callable
    d2: Callable
    Cw: Callable
    dCw: Callable
    N32: Callable

    def Aw(self, t):
        return np.array([[0.0, self.a1(t)], [0.0, self.a2(t)]])

    def dw(self, t):
        return np.array([self.d1(t), self.d2(t)])

    Bw = np.array([0.0, 1.0])

    def zeta(self, t, zb3):
        """Unknown input ``z_b3 / N32``; used by test oracles only."""
        return zb3 / self.N32(t)


def _require_nb3(scf):
    if scf.n_b != 3:
        raise ConfigError(f"z_w observer supports n_b = 3 only, got n_b = {scf.n_b}")


def select_output_row_zw(scf, grid, tol=1e-9):
    """First row with ``Cb[l, 0] != 0``, ``Cb[l, 1] != 0`` and ``Cb[l, 2] == 0`` on the grid.

    Returns ``(l, extractor)`` where ``extractor(t, y, za_hat)`` is the
    certainty-equivalent ``y_w = y_l - Ca[l] @ za_hat``.
    """
    _require_nb3(scf)
    for ell in range(scf.r):
        ok = True
        for t in grid:
            row = scf.Cb(t)[ell]
            if abs(row[0]) < tol or abs(row[1]) < tol or abs(row[2]) > ROW_ZERO_TOL:
                ok = False
                break
        if ok:
            def extractor(t, y, za_hat, ell=ell):
                return float(np.atleast_1d(y)[ell] - scf.Ca(t)[ell] @ za_hat)
            return ell, extractor
    raise AssumptionViolation("no output row sees z_b1 and z_b2 but not z_b3")


def build_zw_system(scf, ell) -> ZwSubsystem:
    """Coefficients of the ``z_w`` dynamics and the output weights of row ``ell``.

    From ``N21 z_b1' = z_b2 + fb2`` and ``N31 z_b1' + N32 z_b2' = z_b3 + fb3``::

        a1 = 1 / N21              d1 = fb2 / N21
        a2 = -N31 / (N21 N32)     d2 = fb3 / N32 - (N31 / N32) (fb2 / N21)
    """
    _require_nb3(scf)
    if scf.dCb is None:
        raise ConfigError("z_w observer needs the analytic derivative dCb of Cb")

    def n(t):
        N = scf.N(t)
        return N[1, 0], N[2, 0], N[2, 1]

    def a1(t):
        return 1.0 / n(t)[0]

    def a2(t):
        n21, n31, n32 = n(t)
        return -n31 / (n21 * n32)

    def d1(t):
        return scf.fb(t)[1] / n(t)[0]

    def d2(t):
        n21, n31, n32 = n(t)
        fb = scf.fb(t)
        return fb[2] / n32 - (n31 / n32) * (fb[1] / n21)

    return ZwSubsystem(
        a1=a1, a2=a2, d1=d1, d2=d2,
        Cw=lambda t: np.asarray(scf.Cb(t)[ell, :2], dtype=float),
        dCw=lambda t: np.asarray(scf.dCb(t)[ell, :2], dtype=float),
        N32=lambda t: n(t)[2],
    )


def Gw(zw, t):
    Cw = zw.Cw(t)
    if Cw[1] == 0.0:
        raise AssumptionViolation("C_w2 vanishes", t=t)
    return np.array([0.0, 1.0 / Cw[1]])


def dGw(zw, t):
    Cw, dCw = zw.Cw(t), zw.dCw(t)
    return np.array([0.0, -dCw[1] / Cw[1] ** 2])


def rejection_projector(zw, t) -> np.ndarray:
    """``I - Gw Cw^T = [[1, 0], [-C_w1 / C_w2, 0]]``, written out so that the
    second column is exactly zero."""
    c1, c2 = zw.Cw(t)
    if c2 == 0.0:
        raise AssumptionViolation("C_w2 vanishes", t=t)
    return np.array([[1.0, 0.0], [-c1 / c2, 0.0]])


def mw_block(zw, L, t) -> np.ndarray:
    """``M_w = (I - Gw Cw^T) Aw - Lw Cw^T - Gw dCw^T``, the error-dynamics matrix."""
    G = Gw(zw, t)
    Cw, dCw = zw.Cw(t), zw.dCw(t)
    L = np.asarray(L, dtype=float)
    return rejection_projector(zw, t) @ zw.Aw(t) - np.outer(L, Cw) - np.outer(G, dCw)


def mw_entries(zw, L, t) -> np.ndarray:
    """Closed-form entries of :func:`mw_block`, expanded by hand."""
    c1, c2 = zw.Cw(t)
    dc1, dc2 = zw.dCw(t)
    a1 = zw.a1(t)
    L1, L2 = L
    return np.array([
        [-L1 * c1, a1 - L1 * c2],
        [-L2 * c1 - dc1 / c2, -L2 * c2 - (dc2 + c1 * a1) / c2],
    ])


def rejection_residual(zw, t) -> np.ndarray:
    """``(I - Gw Cw^T) Bw``; zero by construction of ``Gw``."""
    return rejection_projector(zw, t) @ zw.Bw


def zw_observer_rhs(zw, L, t, r, y_w):
    """Observer ``r' = M r + (M Gw + Lw - Gw') y_w + (I - Gw Cw^T) dw``,
    ``z_w_hat = r + Gw y_w``.  Returns ``(r', z_w_hat)``."""
    L = np.asarray(L(t) if callable(L) else L, dtype=float)
    G = Gw(zw, t)
    M = mw_block(zw, L, t)
    dr = M @ r + (M @ G + L - dGw(zw, t)) * y_w + rejection_projector(zw, t) @ zw.dw(t)
    return dr, r + G * y_w


def lw_diagonalizing(zw, t) -> np.ndarray:
    """Gain that zeroes both off-diagonal entries of ``M_w``:
    ``L1 = a1 / C_w2`` and ``L2 = -C_w1' / (C_w1 C_w2)``."""
    c1, c2 = zw.Cw(t)
    if c1 == 0.0 or c2 == 0.0:
        raise AssumptionViolation("C_w has a vanishing component", t=t)
    dc1 = zw.dCw(t)[0]
    return np.array([zw.a1(t) / c2, -dc1 / (c1 * c2)])


def lw_lti(zw, t=0.0) -> np.ndarray:
    """Constant gain ``a1 C_w1 (C_w1 / C_w2, 1)`` for time-invariant data.

    With this gain ``trace M_w = -(a1 C_w1 / C_w2)(1 + C_w1^2 + C_w2^2)``
    and ``det M_w = a1^2 C_w1^2 (1 + C_w1^2 / C_w2^2)``, so ``M_w`` is
    Hurwitz exactly when ``a1 C_w1 / C_w2 > 0``.
    """
    c1, c2 = zw.Cw(t)
    a1 = zw.a1(t)
    if c2 == 0.0 or not a1 * c1 / c2 > 0.0:
        raise AssumptionViolation(
            f"constant gain needs a1*C_w1/C_w2 > 0, got {a1 * c1 / c2 if c2 else float('nan')!r}"
        )
    return a1 * c1 * np.array([c1 / c2, 1.0])


# -- numerical stability surrogate -------------------------------------------

@dataclass
class StabilityReport:
    slope: float
    margin: float
    passed: bool
    diagonal: bool
    diagonal_integrals: tuple | None

    def as_dict(self):
        return {"slope": self.slope, "margin": self.margin, "passed": self.passed,
                "diagonal": self.diagonal, "diagonal_integrals": self.diagonal_integrals}


def check_exponential_stability(Mw, t0, t1, h=DEFAULT_STEP, margin=1e-3,
                                fit_fraction=0.8) -> StabilityReport:
    """Fit ``log ||Phi_M(t)||`` by a line over the last ``fit_fraction`` of
    the window; pass iff the slope is ``<= -margin``.

    This is a finite-horizon numerical surrogate, not a proof of uniform
    exponential stability.
    """
    traj = propagate_fundamental(Mw, t0, t1, h)
    norms = np.linalg.norm(traj.states, ord=2, axis=(1, 2))
    start = int(np.floor((1.0 - fit_fraction) * (len(norms) - 1)))
    tt, ln = traj.times[start:], np.log(np.maximum(norms[start:], np.finfo(float).tiny))
    slope = float(np.polyfit(tt, ln, 1)[0])
    diag_vals = np.array([Mw(t) for t in traj.times])
    diagonal = bool(np.all(np.abs(diag_vals[:, 0, 1]) <= 1e-10) and
                    np.all(np.abs(diag_vals[:, 1, 0]) <= 1e-10))
    integrals = None
    if diagonal:
        integrals = (float(np.trapezoid(diag_vals[:, 0, 0], traj.times)),
                     float(np.trapezoid(diag_vals[:, 1, 1], traj.times)))
    return StabilityReport(slope, margin, slope <= -margin, diagonal, integrals)
