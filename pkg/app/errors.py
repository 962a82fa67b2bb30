"""Exception hierarchy shared by every module; each class carries its CLI exit code."""


class SlateMdpError(Exception):
    """Base class for all toolkit errors."""
    exit_code = 1


class ConfigError(SlateMdpError):
    """Invalid or infeasible configuration."""
    exit_code = 2

    def __init__(self, message: str, field: str = ""):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class InvalidIdError(SlateMdpError, IndexError):
    """A state or action id outside [0, N)."""
    exit_code = 2


class DomainError(SlateMdpError, ValueError):
    """An operation was applied outside its domain (terminal state, empty set, ...)."""


class ShapeError(SlateMdpError, ValueError):
    """Array dimensions do not fit the network or feature layout."""


class NotReadyError(SlateMdpError):
    """The replay buffer cannot serve a sample yet."""


class OracleRefusal(SlateMdpError):
    """The instance is too large to enumerate exactly."""
    exit_code = 3


class NumericalFault(SlateMdpError, FloatingPointError):
    """A network parameter became NaN or infinite."""
    exit_code = 4
