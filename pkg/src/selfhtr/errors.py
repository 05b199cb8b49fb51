"""Exception hierarchy shared across the toolkit."""


class SelfHTRError(Exception):
    """Base class for all toolkit errors."""


class IngestError(SelfHTRError):
    """Raw text could not be decoded or ingested."""


class CorpusError(SelfHTRError):
    """Corpus statistics or generation preconditions violated."""


class RenderError(SelfHTRError):
    """Word rendering failed (coverage gap, bad parameter ranges, ...)."""


class DataError(SelfHTRError):
    """Dataset loading problem (missing file, malformed manifest row, ...)."""


class CharsetError(SelfHTRError):
    """A transcription does not map losslessly through the charset."""


class ModelError(SelfHTRError):
    """Recognizer contract violation (bad input geometry, overlong target)."""


class NonFiniteLossError(ModelError):
    """A training step produced a non-finite loss.

    Carries diagnostics so the caller's divergence guard can report them.
    """

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class CheckpointError(SelfHTRError):
    """Checkpoint file is missing, corrupt, or from another format version."""


class DivergenceError(SelfHTRError):
    """Adaptation aborted by the divergence guard.

    ``last_checkpoint`` names the most recent usable checkpoint, when one
    was written.
    """

    def __init__(self, message: str, last_checkpoint: str | None = None,
                 reports: list | None = None):
        super().__init__(message)
        self.last_checkpoint = last_checkpoint
        self.reports = reports or []


class ConfigError(SelfHTRError):
    """Experiment configuration rejected; message names the offending field."""
