"""Exception hierarchy shared by the library and the CLI."""


class RFXError(Exception):
    """Base class for all rfx errors."""

    exit_code = 1


class ArgumentError(RFXError, ValueError):
    exit_code = 2


class ModelError(RFXError):
    """A model violates the linear mixture invariants."""

    exit_code = 4


class GenerationError(RFXError):
    exit_code = 4


class ConstructionError(RFXError):
    exit_code = 4


class StateError(RFXError):
    exit_code = 2
