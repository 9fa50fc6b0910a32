"""Exception hierarchy shared by the library and the CLI exit-code mapping."""


class CrowdScoreError(Exception):
    """Base class for all errors raised by this package."""


class DataError(CrowdScoreError):
    """Malformed or insufficient input data (CLI exit code 2)."""


class ConfigError(CrowdScoreError):
    """Invalid configuration: bad GA settings, incomplete stats/weights,
    infeasible scenario (CLI exit code 3)."""
