"""Exception types shared across the package."""


class RdpcganError(Exception):
    """Base class for all package errors."""


class ShapeError(RdpcganError, ValueError):
    """A tensor dimension does not match what an operation requires."""


class ConfigError(RdpcganError, ValueError):
    """An architecture, plan, or run configuration is inconsistent."""


class BudgetError(RdpcganError, ValueError):
    """A privacy-budget request cannot be satisfied."""


class DataError(RdpcganError, ValueError):
    """A dataset, schema, or CSV file is malformed."""
