"""Parameter-estimation-based observers for linear time-varying descriptor systems."""

from .errors import (
    AssumptionViolation,
    ConfigError,
    ContractError,
    DescobsError,
    IntegrationDiverged,
    RankDeficientError,
)

__version__ = "0.1.0"

__all__ = [
    "AssumptionViolation",
    "ConfigError",
    "ContractError",
    "DescobsError",
    "IntegrationDiverged",
    "RankDeficientError",
]
