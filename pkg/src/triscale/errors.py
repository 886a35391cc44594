"""Exception hierarchy shared by all triscale modules."""


class TriscaleError(Exception):
    """Base class for every error raised by the package."""


class InvalidInputError(TriscaleError, ValueError):
    """Non-finite numbers, negative populations or malformed state vectors."""


class ConstraintError(TriscaleError, ValueError):
    """A formula that needs ``gamma1 == gamma2`` was called with unequal rates."""


class DomainError(TriscaleError, ValueError):
    """Argument lies outside the region where an operation is defined."""


class NoEpidemic(TriscaleError):
    """The fast reproduction number is below one: the point maps to itself."""


class NoExit(TriscaleError):
    """The slow flow never destabilises the critical manifold (R0 <= 1)."""


class NumericalError(TriscaleError, RuntimeError):
    """A numerical procedure failed to converge."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class StiffnessError(NumericalError):
    """Step size underflow in the adaptive integrator."""

    def __init__(self, message, t_fail, **diagnostics):
        super().__init__(message, t_fail=t_fail, **diagnostics)
        self.t_fail = t_fail


class ConfigError(TriscaleError, ValueError):
    """Scenario configuration could not be parsed or validated."""
