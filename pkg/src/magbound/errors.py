"""Package-wide exception types.

ConfigError: a requested computation is outside the validated parameter
range or violates a structural precondition (refuse early, loudly).
DataError: supplied data cannot support the requested analysis.
AssemblyError: an internal consistency check failed after construction.
"""


class ConfigError(ValueError):
    """Parameters outside the validated range or structurally unusable."""


class DataError(ValueError):
    """Input data unfit for the requested analysis."""


class AssemblyError(RuntimeError):
    """A constructed object failed its own consistency checks."""
