"""Exception types shared across the package.

The CLI maps these onto exit codes: validation problems (bad input data,
malformed files, out-of-range parameters) exit with 1, operating-system
I/O failures with 2, anything unexpected with 3.
"""


class TopicforgeError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(TopicforgeError, ValueError):
    """Input data, configuration, or file content failed validation."""


class CorpusError(ValidationError):
    """A corpus file is malformed (bad record, duplicate id, wrong type)."""


class EmptyVocabularyError(ValidationError):
    """No word survived the minimum-count filter."""


class ArchiveError(ValidationError):
    """A model archive is corrupt, truncated, or has an unsupported version."""
