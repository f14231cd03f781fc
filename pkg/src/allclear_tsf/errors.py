"""Exception hierarchy. The CLI maps each class onto a stable exit code."""


class AllClearError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(AllClearError, ValueError):
    """Invalid configuration or arguments (CLI exit code 2)."""


class DataError(AllClearError, ValueError):
    """Malformed or inconsistent input data (CLI exit code 3)."""


class SchemaMismatchError(DataError):
    """Instance parameters do not match what a model was trained on."""


class PartitionOverlapError(ConfigError):
    """Two partition sets that must be disjoint share a partition."""
