"""Exception types shared across the package."""


class TransGlassoError(Exception):
    """Base class for every error raised by this package."""


class ParseError(TransGlassoError):
    """Malformed input file: ragged rows, non-numeric or non-finite cells."""


class DimensionError(TransGlassoError):
    """Inputs with incompatible or insufficient dimensions."""


class ContractError(TransGlassoError):
    """An argument violates a documented precondition."""


class NumericError(TransGlassoError):
    """Non-finite values appeared, or a numerically impossible request was made."""


class ConfigError(TransGlassoError):
    """Invalid configuration, e.g. a sparsity level exceeding the available slots."""


class SelectionError(TransGlassoError):
    """Every candidate in a tuning sweep failed, so no model can be selected."""
