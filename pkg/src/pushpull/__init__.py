"""Push-pull convolutional layer and noise-robustness experiment harness."""

from .errors import (ConfigError, DataFormatError, PushPullError, ShapeError,
                     TrainingDiverged)
from .layers import PushPull, PushPullConfig
from .models import ModelSpec, build_lenet, build_model, build_wideresnet, lenet_spec, parameter_count, wrn_spec
from .optim import Parameter, Sgd, SgdConfig
from .perturb import PerturbationSpec, parse_grid
from .pull import derive_pull, pull_kernel_size

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DataFormatError", "PushPullError", "ShapeError",
    "TrainingDiverged", "PushPull", "PushPullConfig", "ModelSpec",
    "build_lenet", "build_model", "build_wideresnet", "lenet_spec",
    "parameter_count", "wrn_spec", "Parameter", "Sgd", "SgdConfig",
    "PerturbationSpec", "parse_grid", "derive_pull", "pull_kernel_size",
]
