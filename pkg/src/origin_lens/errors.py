"""Exception types shared across the package."""


class OriginLensError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(OriginLensError, ValueError):
    """A tensor or image dimension does not match the operation's contract."""


class ImageFormatError(OriginLensError, ValueError):
    """A file could not be parsed as a supported image format."""


class ConfigError(OriginLensError, ValueError):
    """An invalid run configuration value."""


class CheckpointError(OriginLensError, ValueError):
    """A checkpoint or weight file is malformed or incompatible."""


class NotTrainedError(OriginLensError, RuntimeError):
    """Prediction was requested from a network that has not been trained."""


class TrainingDivergedError(OriginLensError, RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch, batch_index, loss):
        self.epoch = epoch
        self.batch_index = batch_index
        self.loss = loss
        super().__init__(
            f"non-finite loss {loss!r} at epoch {epoch}, minibatch {batch_index}"
        )


class StageError(OriginLensError, RuntimeError):
    """A pipeline stage is missing an upstream artifact."""
