"""Exception hierarchy shared by every module of the package."""


class QwfloError(Exception):
    """Base class for all package errors."""


class ConfigurationError(QwfloError, ValueError):
    """A problem, preset or run configuration is malformed or unsupported."""


class DomainError(QwfloError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class CapacityError(QwfloError, ValueError):
    """An encoding cannot hold the requested number of variables."""


class CapabilityError(QwfloError, RuntimeError):
    """The requested instance is too large for the chosen method."""


class ContractViolation(QwfloError, ValueError):
    """Inputs violate a documented precondition (e.g. overlapping supports)."""


class UnsupportedBasisError(QwfloError, ValueError):
    """A measurement basis that the simulator does not implement."""
