"""Exception types shared across the toolkit."""


class EchokitError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(EchokitError):
    """An invariant or precondition was violated; the message names the field."""


class FormatError(EchokitError):
    """A file does not follow its declared container layout."""


class TruncationError(FormatError):
    """A container declares more payload than the file holds."""


class JoinError(EchokitError):
    """Prediction and label records could not be joined one-to-one."""


class ManifestConflictError(EchokitError):
    """The same slice id appeared more than once while building a manifest."""
