"""Exception types shared across the pipeline."""


class BotRevertsError(Exception):
    """Base class for all errors raised by this package."""


class DataError(BotRevertsError):
    """Malformed or contradictory input data (exit code 2 at the CLI)."""


class PipelineError(BotRevertsError):
    """A pipeline stage failed; message carries the stage name and cause."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
