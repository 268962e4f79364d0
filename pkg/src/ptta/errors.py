"""Exception hierarchy; the CLI maps these onto exit codes."""


class PttaError(Exception):
    """Base class for all library errors."""


class ConfigError(PttaError):
    """Invalid configuration or command usage (CLI exit code 2)."""


class DataFormatError(PttaError):
    """Malformed or inconsistent feature files (CLI exit code 2)."""


class NumericError(PttaError):
    """Non-finite or otherwise unusable numeric state (CLI exit code 3)."""
