"""Exception types shared across the package."""


class DescobsError(Exception):
    """Base class for all package errors."""


class ConfigError(DescobsError):
    """Invalid scenario configuration or bad call arguments."""


class ContractError(DescobsError, ValueError):
    """An input violates a documented precondition."""


class AssumptionViolation(DescobsError):
    """A structural or excitation assumption fails.

    ``t`` is the offending time when the failure is localised on the grid.
    """

    def __init__(self, message, t=None):
        if t is not None:
            message = f"{message} (t = {t!r})"
        super().__init__(message)
        self.t = t


class RankDeficientError(AssumptionViolation):
    """Normal matrix of a tall matrix is numerically singular."""


class IntegrationDiverged(DescobsError):
    """A non-finite value appeared during fixed-step integration."""

    def __init__(self, t):
        super().__init__(f"integration diverged: non-finite state at t = {t!r}")
        self.t = t
