"""Parameter store: seeded initialization and the on-disk checkpoint format.

Parameters live in an ordered name -> float64 array mapping. A checkpoint is
a directory holding ``params.json`` (config, tensor manifest, config hash)
and ``params.bin`` (all tensors concatenated as little-endian binary32 in
manifest order). In-memory math runs in float64; binary32 is the storage
precision, so a load -> save round trip is byte-exact.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .config import DerivedShapes, ModelConfig, derive_shapes

CHECKPOINT_VERSION = "emoscale-ckpt-v1"

ModelParams = dict[str, np.ndarray]

_BN_STATS = ("running_mean", "running_var")


def param_manifest(cfg: ModelConfig, shapes: DerivedShapes | None = None):
    """Yield (name, shape, kind) for every tensor, in canonical order.

    kind is one of "weight", "bias", "bn_scale", "bn_shift", "bn_stat";
    everything except "bn_stat" is learnable.
    """
    shapes = shapes or derive_shapes(cfg)
    entries = []
    for i, k in enumerate(shapes.kernel_lengths):
        entries.append((f"temporal.k{i}.weight", (cfg.num_temporal_maps, 1, 1, k), "weight"))
        entries.append((f"temporal.k{i}.bias", (cfg.num_temporal_maps,), "bias"))
    entries.extend(_bn_entries("temporal.bn", cfg.num_temporal_maps))
    spatial_heights = {
        "global": cfg.channels,
        "hemisphere": shapes.hemisphere_kernel,
        "quadrant": shapes.quadrant_kernel,
    }
    for branch, height in spatial_heights.items():
        entries.append(
            (f"spatial.{branch}.weight",
             (cfg.num_spatial_maps, cfg.num_temporal_maps, height, 1), "weight")
        )
        entries.append((f"spatial.{branch}.bias", (cfg.num_spatial_maps,), "bias"))
    entries.extend(_bn_entries("spatial.bn", cfg.num_spatial_maps))
    entries.append(
        ("fusion.weight",
         (cfg.num_spatial_maps, cfg.num_spatial_maps, shapes.fusion_kernel, 1), "weight")
    )
    entries.append(("fusion.bias", (cfg.num_spatial_maps,), "bias"))
    entries.extend(_bn_entries("fusion.bn", cfg.num_spatial_maps))
    entries.append(("head.fc1.weight", (cfg.hidden_units, shapes.flat_width), "weight"))
    entries.append(("head.fc1.bias", (cfg.hidden_units,), "bias"))
    entries.append(("head.fc2.weight", (shapes.n_classes, cfg.hidden_units), "weight"))
    entries.append(("head.fc2.bias", (shapes.n_classes,), "bias"))
    return entries


def _bn_entries(prefix: str, maps: int):
    return [
        (f"{prefix}.scale", (maps,), "bn_scale"),
        (f"{prefix}.shift", (maps,), "bn_shift"),
        (f"{prefix}.running_mean", (maps,), "bn_stat"),
        (f"{prefix}.running_var", (maps,), "bn_stat"),
    ]


def is_learnable(name: str) -> bool:
    return not name.endswith(_BN_STATS)


def learnable_names(params: ModelParams):
    return [name for name in params if is_learnable(name)]


def build(cfg: ModelConfig, seed: int) -> tuple[ModelParams, DerivedShapes]:
    """Initialize parameters from a seeded uniform fan-in scheme.

    Conv and affine tensors (weights and biases alike) draw from
    U(-1/sqrt(fan_in), 1/sqrt(fan_in)); batch-norm starts at identity
    (scale 1, shift 0) with running stats (mean 0, var 1).
    """
    shapes = derive_shapes(cfg)
    rng = np.random.default_rng(seed)
    params: ModelParams = {}
    fan_in = 0
    for name, shape, kind in param_manifest(cfg, shapes):
        if kind == "weight":
            fan_in = int(np.prod(shape[1:]))
            bound = 1.0 / math.sqrt(fan_in)
            params[name] = rng.uniform(-bound, bound, size=shape)
        elif kind == "bias":
            bound = 1.0 / math.sqrt(fan_in)  # fan-in of the paired weight
            params[name] = rng.uniform(-bound, bound, size=shape)
        elif kind == "bn_scale":
            params[name] = np.ones(shape)
        elif kind == "bn_shift":
            params[name] = np.zeros(shape)
        elif name.endswith("running_mean"):
            params[name] = np.zeros(shape)
        else:
            params[name] = np.ones(shape)
    return params, shapes


class CheckpointError(Exception):
    """Raised when a checkpoint directory is corrupt or mismatched."""


def save_params(params: ModelParams, cfg: ModelConfig, out_dir) -> Path:
    """Write a checkpoint directory; returns its path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = [{"name": name, "shape": list(arr.shape)} for name, arr in params.items()]
    payload = b"".join(
        np.ascontiguousarray(arr, dtype="<f4").tobytes() for arr in params.values()
    )
    cfg_dict = asdict(cfg)
    cfg_dict["ratios"] = list(cfg_dict["ratios"])
    meta = {
        "format_version": CHECKPOINT_VERSION,
        "config": cfg_dict,
        "config_sha256": cfg.config_hash(),
        "tensors": manifest,
    }
    (out_dir / "params.json").write_text(json.dumps(meta, indent=2) + "\n")
    (out_dir / "params.bin").write_bytes(payload)
    return out_dir


def load_params(
    ckpt_dir, expected_cfg: ModelConfig | None = None
) -> tuple[ModelParams, ModelConfig]:
    """Load a checkpoint, verifying the config hash and payload length."""
    ckpt_dir = Path(ckpt_dir)
    meta_path = ckpt_dir / "params.json"
    bin_path = ckpt_dir / "params.bin"
    if not meta_path.is_file() or not bin_path.is_file():
        raise CheckpointError(f"checkpoint incomplete at {ckpt_dir}")
    try:
        meta = json.loads(meta_path.read_text())
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"corrupt checkpoint metadata: {exc}") from exc
    if meta.get("format_version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"unknown checkpoint version {meta.get('format_version')!r}")
    cfg_dict = dict(meta["config"])
    cfg_dict["ratios"] = tuple(cfg_dict["ratios"])
    cfg = ModelConfig(**cfg_dict)
    if cfg.config_hash() != meta.get("config_sha256"):
        raise CheckpointError("checkpoint config hash does not match its stored config")
    if expected_cfg is not None and expected_cfg.config_hash() != cfg.config_hash():
        raise CheckpointError(
            "checkpoint was built with a different model config than requested"
        )
    payload = bin_path.read_bytes()
    total = sum(int(np.prod(t["shape"])) for t in meta["tensors"])
    if len(payload) != total * 4:
        raise CheckpointError(
            f"corrupt checkpoint payload: {len(payload)} bytes, expected {total * 4}"
        )
    flat = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    params: ModelParams = {}
    offset = 0
    for tensor in meta["tensors"]:
        size = int(np.prod(tensor["shape"]))
        params[tensor["name"]] = flat[offset : offset + size].reshape(tensor["shape"])
        offset += size
    return params, cfg
