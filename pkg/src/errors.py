class SpdError(Exception):
    """Base class for every failure raised by the package."""


class InvalidArgumentError(SpdError, ValueError):
    """An argument is outside the operation's precondition."""


class InvalidStateError(SpdError, RuntimeError):
    """The object is not in a state where the operation is allowed."""


class ConfigurationError(SpdError, ValueError):
    """A config file, override or resource it points at is unusable."""


class ShapeError(SpdError, ValueError):
    """Tensor shapes do not agree with the network or each other."""
