"""Exception types shared by every module (and by the compiled kernels)."""


class ScmrefError(Exception):
    """Base class for all package errors."""


class DomainError(ScmrefError, ValueError):
    """An argument lies outside the domain of the formula."""


class InfeasibleDesignError(ScmrefError, ValueError):
    """The equilibrium equation has no solution for this design."""

    def __init__(self, message, temperature=None):
        super().__init__(message)
        self.temperature = temperature


class SolverError(ScmrefError, RuntimeError):
    """A bracketing root search failed to converge."""

    def __init__(self, message, bracket=None, temperature=None):
        if bracket is not None:
            message = f"{message} (bracket [{bracket[0]:.9g}, {bracket[1]:.9g}])"
        super().__init__(message)
        self.bracket = bracket
        self.temperature = temperature


class SaturationError(ScmrefError, ValueError):
    """M1 would have to be effectively saturated (beta below the floor)."""


class DegenerateDesignError(ScmrefError, ValueError):
    """alpha - beta is so small that the M1/M2 ratio blows up."""


class ConfigError(ScmrefError, ValueError):
    """Invalid run configuration or input file."""
