"""Registry of named scenarios.

A scenario bundles a model, a reference plant, default run settings (in
the JSON config vocabulary) and the observer path it is meant for.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .. import benchmark, synthetic
from ..errors import ConfigError
from ..gpebo import true_eta


@dataclass
class SemiExplicitProblem:
    sys: object
    plant: object
    x_a0: np.ndarray
    theta: np.ndarray

    def eta_true(self, xi_a0):
        return true_eta(self.sys, xi_a0, self.x_a0, self.theta)


@dataclass
class CanonicalProblem:
    scf: object
    plant: object
    z_a0: np.ndarray
    theta: np.ndarray

    def eta_true(self, xi_a0):
        return np.concatenate([self.theta, np.asarray(xi_a0, float) - self.z_a0])


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    defaults: dict
    build: Callable


def _circuit(cfg):
    return SemiExplicitProblem(benchmark.circuit_system(), benchmark.CircuitPlant(),
                               benchmark.X_A0.copy(), np.zeros(0))


def _circuit_adaptive(cfg):
    theta = np.asarray(cfg.theta, dtype=float)
    if theta.shape != (1,):
        raise ConfigError("circuit-adaptive takes exactly one theta value")
    return SemiExplicitProblem(benchmark.adaptive_variant(),
                               benchmark.CircuitPlant(theta=theta[0]),
                               benchmark.X_A0.copy(), theta)


INVERTIBLE_X_A0 = np.array([1.0, -1.0])


def _invertible(cfg):
    sys = synthetic.invertible_a22_system()
    theta = np.asarray(cfg.theta, dtype=float)
    if theta.shape != (sys.q,):
        raise ConfigError(f"{sys.name} takes {sys.q} theta value(s)")
    return SemiExplicitProblem(sys, synthetic.InvertibleA22Plant(sys, INVERTIBLE_X_A0, theta),
                               INVERTIBLE_X_A0.copy(), theta)


def _strangeness_free(cfg):
    scf = synthetic.strangeness_free_scf()
    theta = np.asarray(cfg.theta, dtype=float)
    if theta.shape != (scf.q,):
        raise ConfigError(f"{scf.name} takes {scf.q} theta value(s)")
    return CanonicalProblem(scf, synthetic.ScfPlant(scf, synthetic.SF_Z_A0, theta),
                            synthetic.SF_Z_A0.copy(), theta)


def _zw(cfg):
    scf = synthetic.zw_scf()
    if cfg.theta:
        raise ConfigError(f"{scf.name} has no unknown parameters")
    return CanonicalProblem(scf, synthetic.zw_plant(scf), synthetic.ZW_Z_A0.copy(), np.zeros(0))


SCENARIOS = {
    s.name: s
    for s in [
        Scenario(
            "circuit-bobtsov",
            "time-varying RLC circuit with negative resistances, unknown initial state",
            {"observer": "semi-explicit-gpebo", "t_final": 30.0,
             "lambda": list(benchmark.LAMBDA), "gamma": benchmark.GAMMA,
             "xi_a0": list(benchmark.XI_A0)},
            _circuit,
        ),
        Scenario(
            "circuit-adaptive",
            "benchmark circuit with one unknown constant disturbance weight",
            {"observer": "semi-explicit-gpebo", "t_final": 30.0,
             "lambda": [0.1, 0.2, 0.3, 0.4], "gamma": 1e14,
             "xi_a0": list(benchmark.XI_A0), "theta": [0.5]},
            _circuit_adaptive,
        ),
        Scenario(
            "synthetic-ltv-invertible-a22",
            "descriptor with invertible A22 whose reference trajectory is an explicit ODE",
            {"observer": "semi-explicit-gpebo", "t_final": 30.0,
             "lambda": [0.5, 1.0, 1.5], "gamma": 1e6,
             "xi_a0": [0.0, 0.0], "theta": [0.7]},
            _invertible,
        ),
        Scenario(
            "synthetic-scf-strangeness-free",
            "canonical form with N = 0, algebraic part given pointwise",
            {"observer": "canonical-strangeness-free", "t_final": 30.0,
             "lambda": [0.5, 1.0, 1.5], "gamma": 1e6,
             "xi_a0": [0.0, 0.0], "theta": [list(synthetic.SF_THETA)[0]]},
            _strangeness_free,
        ),
        Scenario(
            "synthetic-scf-zw",
            "canonical form with a three-link nilpotent chain and unknown-input observer",
            {"observer": "canonical-zw", "t_final": 30.0,
             "lambda": [0.5, 1.0], "gamma": 1e6,
             "xi_a0": [0.0, 0.0], "zw_gain": "lti"},
            _zw,
        ),
    ]
}


def get_scenario(name) -> Scenario:
    try:
        return SCENARIOS[name]
    except KeyError:
        raise ConfigError(
            f"unknown scenario {name!r}; registered: {', '.join(sorted(SCENARIOS))}"
        ) from None


def scenario_names():
    return sorted(SCENARIOS)
