"""Differentiable layer primitives on float64 numpy arrays.

Each primitive exposes a forward returning (output, cache) and a backward
mapping the upstream gradient plus that cache to input/parameter gradients.
Activations move through [n, maps, rows, time] tensors throughout; the heavy
convolutions are phrased as matrix products so BLAS carries the cost.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


# -- leaky rectifier ---------------------------------------------------------

def leaky_forward(x: np.ndarray, slope: float):
    # max(x, slope * x) equals the leaky rectifier for slope in [0, 1)
    positive = x > 0
    out = x * slope
    np.maximum(x, out, out=out)
    return out, positive


def leaky_backward(g: np.ndarray, positive: np.ndarray, slope: float) -> np.ndarray:
    out = g * slope
    np.copyto(out, g, where=positive)
    return out


# -- time-axis average pooling (floor semantics, stride == size) -------------

def avgpool_forward(x: np.ndarray, pool: int):
    if pool == 1:
        return x, x.shape[3]
    n, f, h, t = x.shape
    tp = t // pool
    y = x[..., : tp * pool].reshape(n, f, h, tp, pool).mean(axis=4)
    return y, t


def avgpool_backward(g: np.ndarray, pool: int, t_in: int) -> np.ndarray:
    if pool == 1:
        return g
    n, f, h, tp = g.shape
    dx = np.zeros((n, f, h, t_in))
    dx[..., : tp * pool] = np.repeat(g / pool, pool, axis=3)
    return dx


# -- temporal convolution: kernel (1, k), stride 1, valid -------------------

def temporal_conv_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    """x: [n, 1, C, T], w: [F, 1, 1, k] -> [n, F, C, L] with L = T - k + 1."""
    n, _, c, t = x.shape
    f, k = w.shape[0], w.shape[3]
    length = t - k + 1
    windows = sliding_window_view(x[:, 0], k, axis=2)  # [n, C, L, k] view
    flat = windows.reshape(n * c * length, k)  # copy; reused in backward
    out = flat @ w.reshape(f, k).T
    out = out.reshape(n, c, length, f).transpose(0, 3, 1, 2) + b[None, :, None, None]
    return out, flat


def temporal_conv_backward(g: np.ndarray, flat: np.ndarray, k: int):
    """Weight/bias gradients only; the input is data, never differentiated."""
    n, f, c, length = g.shape
    db = g.sum(axis=(0, 2, 3))
    gm = g.transpose(1, 0, 2, 3).reshape(f, n * c * length)
    dw = (gm @ flat).reshape(f, 1, 1, k)
    return dw, db


# -- row convolution: kernel (K, 1), row stride S, full time width -----------

def row_conv_forward(z: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int):
    """z: [n, F, H, T], w: [O, F, K, 1] -> [n, O, R, T], R = (H - K)/S + 1."""
    n, _, h, t = z.shape
    o, _, k, _ = w.shape
    rows = (h - k) // stride + 1
    wk = w[:, :, :, 0]
    out = np.empty((n, o, rows, t))
    for r in range(rows):
        seg = z[:, :, r * stride : r * stride + k, :]
        out[:, :, r, :] = np.tensordot(seg, wk, axes=([1, 2], [1, 2])).transpose(0, 2, 1)
    return out + b[None, :, None, None], rows


def row_conv_backward(g: np.ndarray, z: np.ndarray, w: np.ndarray, stride: int):
    n, o, rows, t = g.shape
    wk = w[:, :, :, 0]
    k = wk.shape[2]
    db = g.sum(axis=(0, 2, 3))
    dw = np.zeros_like(wk)
    dz = np.zeros_like(z)
    for r in range(rows):
        gr = g[:, :, r, :]  # [n, O, T]
        seg = z[:, :, r * stride : r * stride + k, :]
        dw += np.tensordot(gr, seg, axes=([0, 2], [0, 3]))
        dz[:, :, r * stride : r * stride + k, :] += np.tensordot(
            gr, wk, axes=([1], [0])
        ).transpose(0, 2, 3, 1)
    return dw[:, :, :, None], db, dz


# -- batch normalization over the map axis -----------------------------------

def bn_forward_train(x: np.ndarray, scale: np.ndarray, shift: np.ndarray, eps: float):
    """Normalize with batch statistics over the (batch, rows, time) axes.

    Returns (y, cache, batch_mean, biased_var, unbiased_var); running-stat
    bookkeeping is the caller's job.
    """
    axes = (0, 2, 3)
    m = x.shape[0] * x.shape[2] * x.shape[3]
    mean = x.mean(axis=axes)
    centered = x - mean[None, :, None, None]
    var = (centered * centered).mean(axis=axes)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv_std[None, :, None, None]
    y = scale[None, :, None, None] * xhat + shift[None, :, None, None]
    unbiased = var * (m / (m - 1)) if m > 1 else var
    cache = (centered, inv_std, xhat, m)
    return y, cache, mean, var, unbiased


def bn_forward_infer(
    x: np.ndarray, scale: np.ndarray, shift: np.ndarray,
    running_mean: np.ndarray, running_var: np.ndarray, eps: float,
) -> np.ndarray:
    inv_std = 1.0 / np.sqrt(running_var + eps)
    return (
        scale[None, :, None, None] * (x - running_mean[None, :, None, None])
        * inv_std[None, :, None, None]
        + shift[None, :, None, None]
    )


def bn_backward(g: np.ndarray, cache, scale: np.ndarray):
    """Exact gradients through the batch statistics."""
    centered, inv_std, xhat, m = cache
    axes = (0, 2, 3)
    dscale = (g * xhat).sum(axis=axes)
    dshift = g.sum(axis=axes)
    dxhat = g * scale[None, :, None, None]
    inv = inv_std[None, :, None, None]
    dvar = (dxhat * centered).sum(axis=axes) * (-0.5) * inv_std**3
    dmean = (
        (dxhat * -inv).sum(axis=axes)
        + dvar * (-2.0 / m) * centered.sum(axis=axes)
    )
    dx = (
        dxhat * inv
        + dvar[None, :, None, None] * 2.0 * centered / m
        + dmean[None, :, None, None] / m
    )
    return dx, dscale, dshift


# -- classifier head pieces ---------------------------------------------------

def affine_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    return x @ w.T + b


def affine_backward(g: np.ndarray, x: np.ndarray, w: np.ndarray):
    return g.T @ x, g.sum(axis=0), g @ w


def dropout_forward(x: np.ndarray, rate: float, seed: int):
    """Inverted-scaling dropout; inference needs no rescaling."""
    if rate == 0.0:
        return x, None
    mask = np.random.default_rng(seed).random(x.shape) >= rate
    return x * mask / (1.0 - rate), mask


def dropout_backward(g: np.ndarray, mask, rate: float) -> np.ndarray:
    if mask is None:
        return g
    return g * mask / (1.0 - rate)


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy over the batch; returns (loss, dlogits, probs)."""
    n = logits.shape[0]
    if n == 0:
        raise ValueError("empty batch")
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_z
    loss = -log_probs[np.arange(n), labels].mean()
    probs = np.exp(log_probs)
    dlogits = probs.copy()
    dlogits[np.arange(n), labels] -= 1.0
    return loss, dlogits / n, probs
