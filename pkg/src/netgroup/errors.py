"""Exception hierarchy shared by every netgroup module."""


class NetgroupError(Exception):
    """Base class for all errors raised by netgroup."""


class ParameterError(NetgroupError, ValueError):
    """A model parameter violates its admissible range."""


class DegenerateModel(ParameterError):
    pass


class AlphaOutOfRange(ParameterError):
    pass


class DivisibilityError(ParameterError):
    """An exact distribution was requested outside the divisible regime."""


class EmptyRange(ParameterError):
    pass


class InputError(NetgroupError):
    """Problems with user-supplied files."""


class ParseError(InputError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyInput(InputError):
    pass


class DegeneratePartition(NetgroupError, ValueError):
    pass
