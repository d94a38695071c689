"""Multi-scale network: config, parameters, blocks, gradients, checkpoints."""

from .config import DerivedShapes, ModelConfig, derive_shapes
from .gradcheck import (
    GradCheckReport,
    finite_difference_grads,
    run_gradient_check,
    tiny_gradcheck_config,
)
from .network import (
    classify,
    forward,
    fusion_block,
    loss_and_grad,
    loss_only,
    spatial_block,
    temporal_block,
)
from .params import (
    CheckpointError,
    ModelParams,
    build,
    is_learnable,
    learnable_names,
    load_params,
    param_manifest,
    save_params,
)

__all__ = [
    "CheckpointError",
    "DerivedShapes",
    "GradCheckReport",
    "ModelConfig",
    "ModelParams",
    "build",
    "classify",
    "derive_shapes",
    "finite_difference_grads",
    "forward",
    "fusion_block",
    "is_learnable",
    "learnable_names",
    "load_params",
    "loss_and_grad",
    "loss_only",
    "param_manifest",
    "run_gradient_check",
    "save_params",
    "spatial_block",
    "temporal_block",
    "tiny_gradcheck_config",
]
