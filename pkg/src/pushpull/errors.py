"""Exception types shared across the package."""


class PushPullError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(PushPullError):
    """Tensor shapes are incompatible for the requested operation."""


class ConfigError(PushPullError):
    """A configuration value violates its documented constraints."""


class DataFormatError(PushPullError):
    """A dataset file is malformed (bad magic, truncation, size mismatch)."""

    def __init__(self, message, path=None, offset=None):
        detail = message
        if path is not None:
            detail += f" [file: {path}]"
        if offset is not None:
            detail += f" [offset: {offset}]"
        super().__init__(detail)
        self.path = path
        self.offset = offset


class TrainingDiverged(PushPullError):
    """Loss became non-finite during training."""

    def __init__(self, epoch, step, checkpoint_path=None):
        msg = f"loss became non-finite at epoch {epoch}, step {step}"
        if checkpoint_path is not None:
            msg += f"; last good checkpoint saved to {checkpoint_path}"
        super().__init__(msg)
        self.epoch = epoch
        self.step = step
        self.checkpoint_path = checkpoint_path
