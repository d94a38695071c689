"""Central finite-difference verification of the analytic gradients.

The probe perturbs every learnable scalar by +/-eps, re-runs the training
forward in float64, and compares (L+ - L-) / (2 eps) against the analytic
gradient. Relative error uses |a - b| / max(|a|, |b|, 1e-5); the floor keeps
finite-difference roundoff on near-zero gradients from registering as
disagreement while leaving any real defect orders of magnitude above the
tolerance.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .config import ModelConfig, derive_shapes
from .network import loss_and_grad, loss_only
from .params import build, is_learnable

DEFAULT_EPS = 1e-5
DEFAULT_TOLERANCE = 1e-4
ERROR_FLOOR = 1e-5


def tiny_gradcheck_config(**overrides) -> ModelConfig:
    """The small geometry used for exhaustive finite-difference checks.

    Pool sizes shrink to 2 so every stage keeps a non-empty feature map at
    a 32-sample window; dropout is 0 because a stochastic mask has no
    finite-difference counterpart.
    """
    base = dict(
        fs=32,
        channels=4,
        window_samples=32,
        ratios=(0.5, 0.25),
        num_temporal_maps=2,
        num_spatial_maps=2,
        temporal_pool=2,
        spatial_pool=2,
        fusion_pool=2,
        hidden_units=4,
        dropout_rate=0.0,
    )
    base.update(overrides)
    return ModelConfig(**base)


@dataclass
class GradCheckReport:
    max_rel_err: float
    tolerance: float
    n_parameters: int
    seconds: float
    worst_tensor: str
    per_tensor: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.max_rel_err < self.tolerance


def finite_difference_grads(
    params, cfg, x, labels, *, eps: float = DEFAULT_EPS, dropout_seed: int = 0,
) -> dict[str, np.ndarray]:
    """Numerical gradient of the training-mode loss for every learnable
    tensor, element by element."""
    shapes = derive_shapes(cfg)
    fd: dict[str, np.ndarray] = {}
    for name, value in params.items():
        if not is_learnable(name):
            continue
        grad = np.zeros_like(value)
        flat = value.reshape(-1)
        gflat = grad.reshape(-1)
        for idx in range(flat.size):
            original = flat[idx]
            probe = dict(params)
            bumped = value.copy()
            bumped.reshape(-1)[idx] = original + eps
            probe[name] = bumped
            loss_plus = loss_only(probe, cfg, x, labels, dropout_seed, shapes)
            bumped = value.copy()
            bumped.reshape(-1)[idx] = original - eps
            probe[name] = bumped
            loss_minus = loss_only(probe, cfg, x, labels, dropout_seed, shapes)
            gflat[idx] = (loss_plus - loss_minus) / (2.0 * eps)
        fd[name] = grad
    return fd


def relative_errors(analytic: dict, numeric: dict) -> dict[str, float]:
    errs = {}
    for name, a in analytic.items():
        b = numeric[name]
        denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), ERROR_FLOOR)
        errs[name] = float((np.abs(a - b) / denom).max())
    return errs


def run_gradient_check(
    cfg: ModelConfig | None = None,
    *,
    seed: int = 0,
    batch_size: int = 3,
    eps: float = DEFAULT_EPS,
    tolerance: float = DEFAULT_TOLERANCE,
    perturb_tensor: str | None = None,
) -> GradCheckReport:
    """Run the full check on a random batch.

    ``perturb_tensor`` is a self-test hook: it corrupts one analytic gradient
    before comparison so callers can confirm the check actually fails when
    gradients are wrong.
    """
    cfg = cfg or tiny_gradcheck_config()
    if cfg.dropout_rate > 0:
        raise ValueError(
            "gradient check requires dropout_rate 0; a random mask cannot be "
            "finite-differenced"
        )
    params, _ = build(cfg, seed)
    rng = np.random.default_rng(seed + 1)
    x = rng.standard_normal((batch_size, 1, cfg.channels, cfg.window_samples))
    labels = rng.integers(0, 2, size=batch_size)

    start = time.perf_counter()
    _, analytic, _ = loss_and_grad(params, cfg, x, labels, dropout_seed=0)
    if perturb_tensor is not None:
        analytic = dict(analytic)
        analytic[perturb_tensor] = analytic[perturb_tensor] + 1e-2
    numeric = finite_difference_grads(params, cfg, x, labels, eps=eps)
    per_tensor = relative_errors(analytic, numeric)
    seconds = time.perf_counter() - start

    worst = max(per_tensor, key=per_tensor.get)
    return GradCheckReport(
        max_rel_err=per_tensor[worst],
        tolerance=tolerance,
        n_parameters=sum(v.size for k, v in params.items() if is_learnable(k)),
        seconds=seconds,
        worst_tensor=worst,
        per_tensor=per_tensor,
    )
