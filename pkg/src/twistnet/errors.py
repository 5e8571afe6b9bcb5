"""Exception types shared across the package.

The CLI maps these onto process exit codes: config problems exit 1, data
problems exit 2, capacity refusals exit 3.
"""


class ShapeError(ValueError):
    """Operand shapes are incompatible for the requested operation."""


class CapacityError(RuntimeError):
    """A requested expansion would exceed a hard size cap."""


class DataError(ValueError):
    """A dataset or data file violates its contract."""


class ParseError(DataError):
    """A cell could not be parsed; message names row and column."""


class SchemaError(DataError):
    """Columns, labels, or config structure do not match expectations."""


class ConfigError(ValueError):
    """A run configuration is invalid; message lists every offending key."""


class StateError(RuntimeError):
    """An operation was called with stale or inconsistent cached state."""
