"""Exception types shared across the package."""


class EnsdecompError(Exception):
    """Base class for all package-specific errors."""


class DomainError(EnsdecompError, ValueError):
    """A value lies outside the domain required by a loss or operation."""


class ZeroWeightError(EnsdecompError, ValueError):
    """All voter weights are zero, so a weighted vote is undefined."""


class EmptyGridError(EnsdecompError, ValueError):
    """A prediction grid has no trials or no members."""


class SizeError(EnsdecompError, ValueError):
    """A collection does not meet a minimum-size requirement."""


class EmptyDataError(EnsdecompError, ValueError):
    """A dataset with zero rows was passed to a fitting routine."""


class LearnerError(EnsdecompError, RuntimeError):
    """A base learner failed; carries (trial, member) context when raised
    during tensor collection."""


class ParityError(EnsdecompError, ValueError):
    """An odd ensemble size was required but an even one was given."""


class ParseError(EnsdecompError, ValueError):
    """A file could not be parsed; message names the row/column."""


class SchemaError(EnsdecompError, ValueError):
    """File contents do not match the declared schema."""


class SplitError(EnsdecompError, ValueError):
    """A requested data split produced an empty part."""


class ConfigError(EnsdecompError, ValueError):
    """An experiment configuration is invalid; message names the key."""
