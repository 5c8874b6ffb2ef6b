"""Exception types shared across the library."""


class NonFiniteError(ArithmeticError):
    """A computation produced NaN or Inf where finite values are required."""


class SessionFormatError(ValueError):
    """A session file or streamed record failed to parse or validate."""


class CheckpointError(ValueError):
    """A checkpoint file is malformed or incompatible with the model config."""


class ConfigError(ValueError):
    """A configuration value or configuration file is invalid."""


class TrainingAborted(RuntimeError):
    """Training stopped because the loss became non-finite."""

    def __init__(self, epoch: int, batch: int, message: str = ""):
        self.epoch = epoch
        self.batch = batch
        detail = message or "non-finite loss"
        super().__init__(f"{detail} at epoch {epoch}, batch {batch}")
