"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ValidationError and its subclasses are
exit 2, BackendError and subclasses exit 3, everything else (I/O, parsing,
configuration) exit 1.
"""


class SentTuneError(Exception):
    """Base class for all package errors."""


class ValidationError(SentTuneError):
    """A value violates a documented precondition or invariant."""


class ParseError(SentTuneError):
    """An input file line could not be parsed.

    Carries the offending line number when known.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        loc = ""
        if path is not None:
            loc = f"{path}: "
        if line is not None:
            loc += f"line {line}: "
        super().__init__(loc + message)


class ConfigError(SentTuneError):
    """A configuration file or option set is unusable."""


class ContaminationError(ValidationError):
    """A test set overlaps the data a model was trained on."""


class QuotaError(ValidationError):
    """A class-balanced set could not be filled; carries per-class shortfall."""

    def __init__(self, shortfall):
        self.shortfall = dict(shortfall)
        parts = ", ".join(f"{k}: {v}" for k, v in self.shortfall.items())
        super().__init__(f"class quota not met, shortfall {{{parts}}}")


class TapeError(SentTuneError):
    """Misuse of a gradient tape (e.g. a loss that was never recorded)."""


class CheckpointError(SentTuneError):
    """Base class for checkpoint serialization problems."""


class CheckpointFormatError(CheckpointError):
    """The file does not look like a checkpoint at all."""


class CheckpointVersionError(CheckpointError):
    """The checkpoint format version is not supported."""


class CheckpointTruncatedError(CheckpointError):
    """The file ends before the declared content does."""


class CheckpointIntegrityError(CheckpointError):
    """The manifest and the payload disagree about sizes or extents."""


class BackendError(SentTuneError):
    """Base class for labeler-backend failures."""


class BackendAuthError(BackendError):
    """Authentication or configuration failure; aborts the whole run."""


class BackendTransportError(BackendError):
    """A request failed in transit; retried per comment."""


class BackendResponseError(BackendError):
    """The backend answered with something unusable."""
