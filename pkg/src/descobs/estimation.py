"""Online estimation of constant parameters from ``Y = psi eta``.

Regressor extension turns the (possibly scalar) regression into a square
one ``Psi_f eta = Y_f``; mixing with the adjugate decouples it into ``p``
scalar regressions ``Delta eta_i = Ycal_i``; each is fed to a gradient
estimator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .numerics import adjugate_and_det, min_eig_symmetric

MODES = ("filter-bank", "kreisselmeier")


@dataclass
class ExtensionFilters:
    mode: str
    lam: np.ndarray
    Psi_f: np.ndarray
    Y_f: np.ndarray

    @classmethod
    def zeros(cls, mode, lam, p) -> "ExtensionFilters":
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        validate_filters(mode, lam, p)
        return cls(mode, lam, np.zeros((p, p)), np.zeros(p))

    @property
    def p(self) -> int:
        return self.Y_f.shape[0]

    def pack(self) -> np.ndarray:
        return np.concatenate([self.Psi_f.ravel(), self.Y_f])

    def with_state(self, vec) -> "ExtensionFilters":
        p = self.p
        return ExtensionFilters(self.mode, self.lam, vec[: p * p].reshape(p, p), vec[p * p: p * p + p])


def validate_filters(mode, lam, p):
    if mode not in MODES:
        raise ConfigError(f"unknown estimator mode {mode!r}; expected one of {MODES}")
    if np.any(lam <= 0):
        raise ConfigError("filter rates must be positive")
    if mode == "filter-bank":
        if lam.shape[0] != p:
            raise ConfigError(f"filter-bank mode needs {p} rates, got {lam.shape[0]}")
        if len(np.unique(lam)) != lam.shape[0]:
            raise ConfigError("filter-bank rates must be pairwise distinct")


def filterbank_rhs(f: ExtensionFilters, sample):
    """Row ``i`` of ``Psi_f`` and entry ``i`` of ``Y_f`` are the output of
    ``lam_i / (s + lam_i)`` driven by the scalar regression."""
    if sample.psi.shape[0] != 1:
        raise ConfigError(
            f"filter-bank extension needs a single regression row, got {sample.psi.shape[0]}"
        )
    lam = f.lam[:, None]
    dPsi = lam * (sample.psi - f.Psi_f)
    dY = f.lam * (sample.Y[0] - f.Y_f)
    return dPsi, dY


def kreisselmeier_rhs(f: ExtensionFilters, sample):
    """``Psi_f' = -l Psi_f + psi^T psi``, ``Y_f' = -l Y_f + psi^T Y``."""
    ell = f.lam[0]
    psi = sample.psi
    return -ell * f.Psi_f + psi.T @ psi, -ell * f.Y_f + psi.T @ sample.Y


def filters_rhs(f: ExtensionFilters, sample):
    if f.mode == "filter-bank":
        return filterbank_rhs(f, sample)
    return kreisselmeier_rhs(f, sample)


@dataclass
class DremSignals:
    Delta: float
    Ycal: np.ndarray


def drem_mix(f: ExtensionFilters) -> DremSignals:
    adj, det = adjugate_and_det(f.Psi_f)
    return DremSignals(det, adj @ f.Y_f)


@dataclass
class EstimatorState:
    eta_hat: np.ndarray
    gamma: np.ndarray

    @classmethod
    def start(cls, p, gamma, eta0=None) -> "EstimatorState":
        gamma = np.broadcast_to(np.asarray(gamma, dtype=float), (p,)).copy()
        if np.any(gamma <= 0):
            raise ConfigError("adaptation gains must be positive")
        eta0 = np.zeros(p) if eta0 is None else np.asarray(eta0, dtype=float).copy()
        return cls(eta0, gamma)


def gradient_rhs(st: EstimatorState, d: DremSignals) -> np.ndarray:
    """``eta_i' = gamma_i Delta (Ycal_i - Delta eta_i)``."""
    return st.gamma * d.Delta * (d.Ycal - d.Delta * st.eta_hat)


def gradient_step_exponential(eta_hat, gamma, start: DremSignals, end: DremSignals, h):
    """Advance the gradient law over one step with ``Delta``, ``Ycal`` averaged
    over the step end points and the resulting linear ODE solved exactly.

    The update is a convex combination of ``eta_hat`` and the mixed
    estimate, so each component moves monotonically and the step is stable
    for any ``gamma * Delta**2 * h`` (explicit Runge-Kutta is not once that
    product exceeds about 2.8).
    """
    d2 = 0.5 * (start.Delta ** 2 + end.Delta ** 2)
    dy = 0.5 * (start.Delta * start.Ycal + end.Delta * end.Ycal)
    a = gamma * d2 * h
    decay = np.exp(-a)
    if d2 > 0.0:
        target = dy / d2
        return decay * eta_hat - np.expm1(-a) * target
    return np.array(eta_hat, dtype=float)


def stiffness_index(gamma, Delta, h) -> float:
    """``max(gamma) * Delta**2 * h``; explicit integration is unreliable above ~0.5."""
    return float(np.max(gamma) * Delta ** 2 * h)


# -- interval excitation ----------------------------------------------------

@dataclass
class ExcitationAccumulator:
    """Running ``S(t_k) = h * sum_{j<k} psi_j^T psi_j`` (left rectangle rule)."""

    p: int
    rho_threshold: float = 1e-6
    S: np.ndarray = None
    t_c: float | None = None
    times: list = field(default_factory=list)
    lam_min: list = field(default_factory=list)
    _pending: np.ndarray = None

    def __post_init__(self):
        if self.S is None:
            self.S = np.zeros((self.p, self.p))

    def update(self, sample, h):
        if self._pending is not None:
            self.S = self.S + self._pending
        psi = np.atleast_2d(sample.psi)
        self._pending = (psi.T @ psi) * h
        lam = min_eig_symmetric(self.S)
        self.times.append(sample.t)
        self.lam_min.append(lam)
        if self.t_c is None and lam >= self.rho_threshold:
            self.t_c = sample.t
        return lam

    def report(self) -> "ExcitationReport":
        final = self.lam_min[-1] if self.lam_min else 0.0
        return ExcitationReport(self.t_c, final, np.array(self.times), np.array(self.lam_min))


@dataclass
class ExcitationReport:
    t_c: float | None
    lam_min_final: float
    times: np.ndarray
    lam_min: np.ndarray

    @property
    def excited(self) -> bool:
        return self.t_c is not None

    def as_dict(self):
        return {"t_c": self.t_c, "lambda_min_final": self.lam_min_final,
                "excited": self.excited}


def excitation_report(samples, h, rho_threshold=1e-6) -> ExcitationReport:
    """Interval-excitation report for a sequence of regression samples."""
    samples = list(samples)
    if not samples:
        return ExcitationReport(None, 0.0, np.zeros(0), np.zeros(0))
    acc = ExcitationAccumulator(np.atleast_2d(samples[0].psi).shape[1], rho_threshold)
    for s in samples:
        acc.update(s, h)
    return acc.report()
