"""Shared exception types."""


class ContractViolationError(ValueError):
    """A precondition or invariant of an operation was violated."""


class FormatError(ValueError):
    """A file did not conform to its declared on-disk format."""


class ParseError(ValueError):
    """A caption could not be matched against the synthetic grammar."""


class ConfigError(ValueError):
    """A run configuration file contained unknown keys or bad values."""
