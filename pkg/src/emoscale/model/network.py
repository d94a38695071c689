"""The multi-scale network: temporal block, asymmetric spatial block, fusion
layer, and binary classifier head, with exact analytic gradients.

Data flow (shapes for the 14-channel default at 128 Hz, window 128):

    x [n, 1, 14, 128]
      temporal: per ratio, (1 x k) conv -> leaky -> avg pool, concat along
      time in ratio order, batch norm            -> [n, 15, 14, 64]
      spatial: global (14 x 1) / hemisphere (7 x 1, step 7) / quadrant
      (4 x 1, step 4 on a 16-row zero-padded copy) branches, each bias ->
      leaky -> avg pool, stacked rows, batch norm -> [n, 15, 7, 32]
      fusion: (7 x 1) conv -> leaky -> avg pool -> batch norm
                                                   -> [n, 15, 1, 8]
      head: flatten -> affine -> leaky -> dropout -> affine -> [n, 2]

The backward pass differentiates every stage, batch-norm training statistics
included; finite differences against the same forward are the test oracle.
"""

from __future__ import annotations

import numpy as np

from .config import DerivedShapes, GLOBAL_ROWS, HEMISPHERE_ROWS, ModelConfig, derive_shapes
from .layers import (
    affine_backward,
    affine_forward,
    avgpool_backward,
    avgpool_forward,
    bn_backward,
    bn_forward_infer,
    bn_forward_train,
    dropout_backward,
    dropout_forward,
    leaky_backward,
    leaky_forward,
    row_conv_backward,
    row_conv_forward,
    softmax_cross_entropy,
    temporal_conv_backward,
    temporal_conv_forward,
)
from .params import ModelParams


def _pad_rows(z: np.ndarray, pad: int) -> np.ndarray:
    """Append ``pad`` zero rows after each hemisphere block."""
    if pad == 0:
        return z
    n, f, c, t = z.shape
    half = c // 2
    zp = np.zeros((n, f, c + 2 * pad, t))
    zp[:, :, :half] = z[:, :, :half]
    zp[:, :, half + pad : half + pad + half] = z[:, :, half:]
    return zp


def _unpad_rows(dzp: np.ndarray, pad: int, channels: int) -> np.ndarray:
    if pad == 0:
        return dzp
    half = channels // 2
    return np.concatenate(
        [dzp[:, :, :half], dzp[:, :, half + pad : half + pad + half]], axis=2
    )


def _bn_apply(params, prefix, x, cfg, training, cache):
    scale, shift = params[f"{prefix}.scale"], params[f"{prefix}.shift"]
    if not training:
        return bn_forward_infer(
            x, scale, shift,
            params[f"{prefix}.running_mean"], params[f"{prefix}.running_var"],
            cfg.bn_epsilon,
        )
    y, bn_cache, mean, _, unbiased = bn_forward_train(x, scale, shift, cfg.bn_epsilon)
    cache[f"{prefix}.cache"] = bn_cache
    m = cfg.bn_momentum
    updates = cache.setdefault("bn_updates", {})
    updates[f"{prefix}.running_mean"] = (
        (1 - m) * params[f"{prefix}.running_mean"] + m * mean
    )
    updates[f"{prefix}.running_var"] = (
        (1 - m) * params[f"{prefix}.running_var"] + m * unbiased
    )
    return y


def temporal_block(
    params: ModelParams, cfg: ModelConfig, shapes: DerivedShapes, x: np.ndarray,
    *, training: bool = False, cache: dict | None = None,
) -> np.ndarray:
    """[n, 1, C, T] -> [n, num_T, C, t_cat]."""
    if x.ndim != 4 or x.shape[1] != 1 or x.shape[2] != cfg.channels or x.shape[3] != cfg.window_samples:
        raise ValueError(
            f"expected input [n, 1, {cfg.channels}, {cfg.window_samples}], got {x.shape}"
        )
    if training and cache is None:
        cache = {}
    pieces = []
    for i, k in enumerate(shapes.kernel_lengths):
        conv, flat = temporal_conv_forward(
            x, params[f"temporal.k{i}.weight"], params[f"temporal.k{i}.bias"]
        )
        act, positive = leaky_forward(conv, cfg.leaky_slope)
        pooled, t_in = avgpool_forward(act, cfg.temporal_pool)
        pieces.append(pooled)
        if training:
            cache[f"t.k{i}.flat"] = flat
            cache[f"t.k{i}.pos"] = positive
            cache[f"t.k{i}.t_in"] = t_in
        if cache is not None:
            cache[f"t.k{i}.pre"] = conv
            cache[f"t.k{i}.act"] = act
    merged = np.concatenate(pieces, axis=3)
    return _bn_apply(params, "temporal.bn", merged, cfg, training, cache)


def spatial_block(
    params: ModelParams, cfg: ModelConfig, shapes: DerivedShapes, z: np.ndarray,
    *, training: bool = False, cache: dict | None = None,
) -> np.ndarray:
    """[n, num_T, C, t_cat] -> [n, num_S, s_rows, t_sp].

    Branch order along the row axis: global, hemisphere, quadrant.
    """
    if training and cache is None:
        cache = {}
    zp = _pad_rows(z, shapes.quadrant_pad_rows)
    branches = (
        ("global", z, cfg.channels, 1),
        ("hemisphere", z, shapes.hemisphere_kernel, shapes.hemisphere_kernel),
        ("quadrant", zp, shapes.quadrant_kernel, shapes.quadrant_kernel),
    )
    pieces = []
    for name, src, _, stride in branches:
        conv, _ = row_conv_forward(
            src, params[f"spatial.{name}.weight"], params[f"spatial.{name}.bias"], stride
        )
        act, positive = leaky_forward(conv, cfg.leaky_slope)
        pooled, t_in = avgpool_forward(act, cfg.spatial_pool)
        pieces.append(pooled)
        if training:
            cache[f"s.{name}.pos"] = positive
            cache[f"s.{name}.t_in"] = t_in
        if cache is not None:
            cache[f"s.{name}.pre"] = conv
    if training:
        cache["s.z"] = z
        cache["s.zp"] = zp
    stacked = np.concatenate(pieces, axis=2)
    return _bn_apply(params, "spatial.bn", stacked, cfg, training, cache)


def fusion_block(
    params: ModelParams, cfg: ModelConfig, shapes: DerivedShapes, s: np.ndarray,
    *, training: bool = False, cache: dict | None = None,
) -> np.ndarray:
    """[n, num_S, s_rows, t_sp] -> [n, num_S, 1, t_f].

    With ``fusion_kernel_override`` set, zero rows are appended so that a
    taller published kernel height can be used without convolving past the
    tensor edge.
    """
    if training and cache is None:
        cache = {}
    if shapes.fusion_pad_rows:
        n, f, rows, t = s.shape
        padded = np.zeros((n, f, rows + shapes.fusion_pad_rows, t))
        padded[:, :, :rows] = s
    else:
        padded = s
    conv, _ = row_conv_forward(padded, params["fusion.weight"], params["fusion.bias"], 1)
    act, positive = leaky_forward(conv, cfg.leaky_slope)
    pooled, t_in = avgpool_forward(act, cfg.fusion_pool)
    if training:
        cache["f.s_padded"] = padded
        cache["f.pos"] = positive
        cache["f.t_in"] = t_in
    if cache is not None:
        cache["f.pre"] = conv
    return _bn_apply(params, "fusion.bn", pooled, cfg, training, cache)


def classify(
    params: ModelParams, cfg: ModelConfig, f: np.ndarray,
    *, training: bool = False, dropout_seed: int = 0, cache: dict | None = None,
) -> np.ndarray:
    """[n, num_S, 1, t_f] -> logits [n, 2]."""
    if training and cache is None:
        cache = {}
    flat = f.reshape(f.shape[0], -1)
    if flat.shape[1] != params["head.fc1.weight"].shape[1]:
        raise ValueError(
            f"flattened width {flat.shape[1]} does not match head width "
            f"{params['head.fc1.weight'].shape[1]}"
        )
    hidden_pre = affine_forward(flat, params["head.fc1.weight"], params["head.fc1.bias"])
    hidden, positive = leaky_forward(hidden_pre, cfg.leaky_slope)
    if training:
        dropped, mask = dropout_forward(hidden, cfg.dropout_rate, dropout_seed)
        cache["c.flat"] = flat
        cache["c.pos"] = positive
        cache["c.mask"] = mask
        cache["c.dropped"] = dropped
    else:
        dropped = hidden
    return affine_forward(dropped, params["head.fc2.weight"], params["head.fc2.bias"])


def forward(
    params: ModelParams, cfg: ModelConfig, x: np.ndarray,
    training: bool = False, dropout_seed: int = 0,
    shapes: DerivedShapes | None = None,
):
    """Full forward pass; returns (logits, cache) with cache None in
    inference mode."""
    shapes = shapes or derive_shapes(cfg)
    cache: dict | None = {"bn_updates": {}} if training else None
    z = temporal_block(params, cfg, shapes, x, training=training, cache=cache)
    s = spatial_block(params, cfg, shapes, z, training=training, cache=cache)
    fused = fusion_block(params, cfg, shapes, s, training=training, cache=cache)
    if training:
        cache["f.out"] = fused
    logits = classify(
        params, cfg, fused, training=training, dropout_seed=dropout_seed, cache=cache
    )
    return logits, cache


def _backward(params, cfg, shapes, cache, dlogits):
    grads: dict[str, np.ndarray] = {}

    # head
    dropped = cache["c.dropped"]
    grads["head.fc2.weight"], grads["head.fc2.bias"], ddropped = affine_backward(
        dlogits, dropped, params["head.fc2.weight"]
    )
    dhidden = dropout_backward(ddropped, cache["c.mask"], cfg.dropout_rate)
    dhidden_pre = leaky_backward(dhidden, cache["c.pos"], cfg.leaky_slope)
    grads["head.fc1.weight"], grads["head.fc1.bias"], dflat = affine_backward(
        dhidden_pre, cache["c.flat"], params["head.fc1.weight"]
    )
    dfused = dflat.reshape(cache["f.out"].shape)

    # fusion block
    dpooled, grads["fusion.bn.scale"], grads["fusion.bn.shift"] = bn_backward(
        dfused, cache["fusion.bn.cache"], params["fusion.bn.scale"]
    )
    dact = avgpool_backward(dpooled, cfg.fusion_pool, cache["f.t_in"])
    dconv = leaky_backward(dact, cache["f.pos"], cfg.leaky_slope)
    grads["fusion.weight"], grads["fusion.bias"], ds_padded = row_conv_backward(
        dconv, cache["f.s_padded"], params["fusion.weight"], 1
    )
    ds = ds_padded[:, :, : shapes.s_rows, :] if shapes.fusion_pad_rows else ds_padded

    # spatial block
    dstacked, grads["spatial.bn.scale"], grads["spatial.bn.shift"] = bn_backward(
        ds, cache["spatial.bn.cache"], params["spatial.bn.scale"]
    )
    row_splits = (
        ("global", 0, GLOBAL_ROWS, 1),
        ("hemisphere", GLOBAL_ROWS, GLOBAL_ROWS + HEMISPHERE_ROWS, shapes.hemisphere_kernel),
        ("quadrant", GLOBAL_ROWS + HEMISPHERE_ROWS, shapes.s_rows, shapes.quadrant_kernel),
    )
    dz = np.zeros_like(cache["s.z"])
    for name, lo, hi, stride in row_splits:
        src = cache["s.zp"] if name == "quadrant" else cache["s.z"]
        dpooled = dstacked[:, :, lo:hi, :]
        dact = avgpool_backward(dpooled, cfg.spatial_pool, cache[f"s.{name}.t_in"])
        dconv = leaky_backward(dact, cache[f"s.{name}.pos"], cfg.leaky_slope)
        dw, db, dsrc = row_conv_backward(
            dconv, src, params[f"spatial.{name}.weight"], stride
        )
        grads[f"spatial.{name}.weight"] = dw
        grads[f"spatial.{name}.bias"] = db
        if name == "quadrant":
            dz += _unpad_rows(dsrc, shapes.quadrant_pad_rows, cfg.channels)
        else:
            dz += dsrc

    # temporal block
    dmerged, grads["temporal.bn.scale"], grads["temporal.bn.shift"] = bn_backward(
        dz, cache["temporal.bn.cache"], params["temporal.bn.scale"]
    )
    offset = 0
    for i, (k, pooled_len) in enumerate(
        zip(shapes.kernel_lengths, shapes.pooled_lengths)
    ):
        dpooled = dmerged[:, :, :, offset : offset + pooled_len]
        offset += pooled_len
        dact = avgpool_backward(dpooled, cfg.temporal_pool, cache[f"t.k{i}.t_in"])
        dconv = leaky_backward(dact, cache[f"t.k{i}.pos"], cfg.leaky_slope)
        dw, db = temporal_conv_backward(dconv, cache[f"t.k{i}.flat"], k)
        grads[f"temporal.k{i}.weight"] = dw
        grads[f"temporal.k{i}.bias"] = db
    return grads


def loss_and_grad(
    params: ModelParams, cfg: ModelConfig, x: np.ndarray, labels: np.ndarray,
    dropout_seed: int = 0, shapes: DerivedShapes | None = None,
):
    """Mean softmax cross-entropy and its exact parameter gradients.

    Returns (loss, grads, bn_updates); ``bn_updates`` holds the new
    running-statistic arrays for the caller to fold into the parameter store
    (they are batch statistics, not optimized tensors, so they ride along
    rather than appearing in ``grads``).
    """
    labels = np.asarray(labels)
    if labels.size == 0 or x.shape[0] == 0:
        raise ValueError("empty batch")
    if not np.isin(labels, (0, 1)).all():
        raise ValueError("labels must be binary")
    shapes = shapes or derive_shapes(cfg)
    logits, cache = forward(
        params, cfg, x, training=True, dropout_seed=dropout_seed, shapes=shapes
    )
    loss, dlogits, _ = softmax_cross_entropy(logits, labels.astype(np.int64))
    grads = _backward(params, cfg, shapes, cache, dlogits)
    return loss, grads, cache["bn_updates"]


def loss_only(
    params: ModelParams, cfg: ModelConfig, x: np.ndarray, labels: np.ndarray,
    dropout_seed: int = 0, shapes: DerivedShapes | None = None,
) -> float:
    """Training-mode loss without gradients (finite-difference probe)."""
    logits, _ = forward(
        params, cfg, x, training=True, dropout_seed=dropout_seed, shapes=shapes
    )
    loss, _, _ = softmax_cross_entropy(logits, np.asarray(labels).astype(np.int64))
    return float(loss)
