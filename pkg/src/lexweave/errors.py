"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
NumericalError -> 4.
"""


class LexweaveError(Exception):
    """Base class for all package errors."""


class ConfigError(LexweaveError):
    """Invalid or inconsistent experiment configuration."""


class DataError(LexweaveError):
    """Malformed or missing input data (lexicon, embeddings, tables)."""


class NumericalError(LexweaveError):
    """Numerical failure: singular systems, non-finite losses, undefined statistics."""
