"""Model hyperparameters and the shape algebra derived from them.

Every tensor shape in the network is a closed-form function of the config;
``derive_shapes`` computes them all up front and rejects geometries that
would produce an empty feature map, so shape errors surface at build time
rather than mid-training.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass

from ..data.layout import quadrant_geometry

DEFAULT_RATIOS = (0.5, 0.25, 0.125, 0.0625, 0.03125)


@dataclass(frozen=True)
class ModelConfig:
    fs: int
    channels: int
    window_samples: int
    ratios: tuple[float, ...] = DEFAULT_RATIOS
    num_temporal_maps: int = 15
    num_spatial_maps: int = 15
    temporal_pool: int = 8
    spatial_pool: int = 2
    fusion_pool: int = 4
    hidden_units: int = 32
    dropout_rate: float = 0.5
    leaky_slope: float = 0.01
    bn_momentum: float = 0.1
    bn_epsilon: float = 1e-5
    fusion_kernel_override: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "ratios", tuple(float(r) for r in self.ratios))
        if not self.ratios:
            raise ValueError("ratios must be non-empty")
        if any(not 0 < r <= 1 for r in self.ratios):
            raise ValueError("ratios must lie in (0, 1]")
        if any(a <= b for a, b in zip(self.ratios, self.ratios[1:])):
            raise ValueError("ratios must be strictly decreasing")
        if min(self.fs, self.window_samples, self.num_temporal_maps,
               self.num_spatial_maps, self.hidden_units) < 1:
            raise ValueError("fs, window_samples, map counts and hidden_units must be positive")
        if min(self.temporal_pool, self.spatial_pool, self.fusion_pool) < 1:
            raise ValueError("pool sizes must be >= 1")
        if not 0 <= self.dropout_rate < 1:
            raise ValueError("dropout_rate must be in [0, 1)")
        if not 0 <= self.leaky_slope < 1:
            raise ValueError("leaky_slope must be in [0, 1)")
        if self.bn_epsilon <= 0 or not 0 < self.bn_momentum <= 1:
            raise ValueError("bn_epsilon must be positive and bn_momentum in (0, 1]")

    def kernel_length(self, ratio: float) -> int:
        # ceil over the real product; the 1e-9 slack keeps float noise like
        # 0.3 * 100 == 30.000000000000004 from bumping the ceiling.
        return math.ceil(ratio * self.fs - 1e-9)

    def config_hash(self) -> str:
        payload = asdict(self)
        payload["ratios"] = list(payload["ratios"])
        return hashlib.sha256(
            json.dumps(payload, sort_keys=True).encode()
        ).hexdigest()


@dataclass(frozen=True)
class DerivedShapes:
    """Closed-form layer geometry for a config.

    ``t_cat`` is the concatenated temporal length, ``s_rows`` the stacked
    spatial rows (1 global + 2 hemisphere + 4 quadrant), ``t_f`` the fused
    length feeding the classifier head.
    """

    kernel_lengths: tuple[int, ...]
    conv_lengths: tuple[int, ...]
    pooled_lengths: tuple[int, ...]
    t_cat: int
    hemisphere_kernel: int
    quadrant_kernel: int
    quadrant_pad_rows: int
    padded_channels: int
    s_rows: int
    t_sp: int
    fusion_kernel: int
    fusion_pad_rows: int
    t_f: int
    flat_width: int
    n_classes: int = 2


GLOBAL_ROWS = 1
HEMISPHERE_ROWS = 2
QUADRANT_ROWS = 4


def derive_shapes(cfg: ModelConfig) -> DerivedShapes:
    if cfg.channels < 4:
        raise ValueError(f"need at least 4 channels, got {cfg.channels}")
    if cfg.channels % 2:
        raise ValueError(
            f"hemisphere kernel needs an even channel count, got {cfg.channels}"
        )
    kernels = tuple(cfg.kernel_length(r) for r in cfg.ratios)
    for r, k in zip(cfg.ratios, kernels):
        if k > cfg.window_samples:
            raise ValueError(
                f"temporal kernel for ratio {r} is {k} samples, "
                f"longer than the {cfg.window_samples}-sample window"
            )
    conv_lengths = tuple(cfg.window_samples - k + 1 for k in kernels)
    pooled = tuple(length // cfg.temporal_pool for length in conv_lengths)
    if min(pooled) < 1:
        raise ValueError(
            f"temporal_pool {cfg.temporal_pool} empties a branch "
            f"(conv lengths {conv_lengths})"
        )
    t_cat = sum(pooled)

    q, pad, padded = quadrant_geometry(cfg.channels)
    s_rows = GLOBAL_ROWS + HEMISPHERE_ROWS + QUADRANT_ROWS
    t_sp = t_cat // cfg.spatial_pool
    if t_sp < 1:
        raise ValueError(f"spatial_pool {cfg.spatial_pool} empties the {t_cat}-long feature map")

    fusion_kernel = cfg.fusion_kernel_override if cfg.fusion_kernel_override else s_rows
    if fusion_kernel < s_rows:
        raise ValueError(
            f"fusion_kernel_override {fusion_kernel} is smaller than the "
            f"{s_rows} stacked spatial rows"
        )
    t_f = t_sp // cfg.fusion_pool
    if t_f < 1:
        raise ValueError(f"fusion_pool {cfg.fusion_pool} empties the {t_sp}-long feature map")

    return DerivedShapes(
        kernel_lengths=kernels,
        conv_lengths=conv_lengths,
        pooled_lengths=pooled,
        t_cat=t_cat,
        hemisphere_kernel=cfg.channels // 2,
        quadrant_kernel=q,
        quadrant_pad_rows=pad,
        padded_channels=padded,
        s_rows=s_rows,
        t_sp=t_sp,
        fusion_kernel=fusion_kernel,
        fusion_pad_rows=fusion_kernel - s_rows,
        t_f=t_f,
        flat_width=cfg.num_spatial_maps * t_f,
    )
