"""Pure-numpy kernel backend: im2col views plus BLAS matmuls.

Gradient conventions match the numba backend exactly (up to float rounding
order): conv2d_dx/conv2d_dw are the reverse-mode gradients of conv2d with the
same stride/pad, conv_transpose2x2_* mirror the 2x2-stride-2 transposed conv.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def _out_size(size: int, k: int, stride: int, pad: int) -> int:
    return (size + 2 * pad - k) // stride + 1


def _windows(x: np.ndarray, kh: int, kw: int, stride: int, pad: int) -> np.ndarray:
    """(N, C, Ho, Wo, kh, kw) view of the padded input."""
    if pad:
        x = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    v = sliding_window_view(x, (kh, kw), axis=(2, 3))
    return v[:, :, ::stride, ::stride, :, :]


def conv2d(x: np.ndarray, w: np.ndarray, stride: int, pad: int) -> np.ndarray:
    """x (N, C, H, W) * w (O, C, kh, kw) -> (N, O, Ho, Wo)."""
    n = x.shape[0]
    o, c, kh, kw = w.shape
    v = _windows(x, kh, kw, stride, pad)
    ho, wo = v.shape[2], v.shape[3]
    cols = v.transpose(0, 2, 3, 1, 4, 5).reshape(n * ho * wo, c * kh * kw)
    y = cols @ w.reshape(o, -1).T
    return y.reshape(n, ho, wo, o).transpose(0, 3, 1, 2)


def conv2d_dx(w: np.ndarray, dy: np.ndarray, stride: int, pad: int, h: int, wid: int) -> np.ndarray:
    """Gradient of conv2d w.r.t. its input, given output grad dy (N, O, Ho, Wo)."""
    o, c, kh, kw = w.shape
    n, _, ho, wo = dy.shape
    dcols = dy.transpose(0, 2, 3, 1).reshape(n * ho * wo, o) @ w.reshape(o, -1)
    dcols = dcols.reshape(n, ho, wo, c, kh, kw)
    dxp = np.zeros((n, c, h + 2 * pad, wid + 2 * pad), dtype=dy.dtype)
    for ki in range(kh):
        for kj in range(kw):
            dxp[:, :, ki : ki + stride * ho : stride, kj : kj + stride * wo : stride] += (
                dcols[:, :, :, :, ki, kj].transpose(0, 3, 1, 2)
            )
    if pad:
        return dxp[:, :, pad : pad + h, pad : pad + wid]
    return dxp


def conv2d_dw(x: np.ndarray, dy: np.ndarray, stride: int, pad: int, kh: int, kw: int) -> np.ndarray:
    """Gradient of conv2d w.r.t. the weight."""
    n, c, _, _ = x.shape
    _, o, ho, wo = dy.shape
    v = _windows(x, kh, kw, stride, pad)
    cols = v.transpose(0, 2, 3, 1, 4, 5).reshape(n * ho * wo, c * kh * kw)
    dw = dy.transpose(0, 2, 3, 1).reshape(n * ho * wo, o).T @ cols
    return dw.reshape(o, c, kh, kw)


def conv_transpose2x2(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """x (N, C, H, W) * w (C, O, 2, 2) -> (N, O, 2H, 2W); stride 2, no overlap."""
    n, c, h, wid = x.shape
    o = w.shape[1]
    t = np.tensordot(x, w, axes=([1], [0]))  # (n, h, w, o, 2, 2)
    y = t.transpose(0, 3, 1, 4, 2, 5).reshape(n, o, 2 * h, 2 * wid)
    return np.ascontiguousarray(y)


def _dy_blocks(dy: np.ndarray) -> np.ndarray:
    """(N, O, 2H, 2W) -> (N, H, W, O, 2, 2) per input-position blocks."""
    n, o, ho, wo = dy.shape
    return dy.reshape(n, o, ho // 2, 2, wo // 2, 2).transpose(0, 2, 4, 1, 3, 5)


def conv_transpose2x2_dx(w: np.ndarray, dy: np.ndarray) -> np.ndarray:
    blocks = _dy_blocks(dy)
    dx = np.tensordot(blocks, w, axes=([3, 4, 5], [1, 2, 3]))  # (n, h, w, c)
    return np.ascontiguousarray(dx.transpose(0, 3, 1, 2))


def conv_transpose2x2_dw(x: np.ndarray, dy: np.ndarray) -> np.ndarray:
    blocks = _dy_blocks(dy)
    return np.tensordot(x, blocks, axes=([0, 2, 3], [0, 1, 2]))  # (c, o, 2, 2)


def maxpool3x3s2p1(x: np.ndarray):
    """3x3 stride-2 pad-1 max pool: returns (y, argmax) with window-local argmax in [0, 9)."""
    n, c, h, w = x.shape
    neg = np.finfo(x.dtype).min
    xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)), constant_values=neg)
    v = sliding_window_view(xp, (3, 3), axis=(2, 3))[:, :, ::2, ::2, :, :]
    flat = v.reshape(*v.shape[:4], 9)
    arg = flat.argmax(axis=-1).astype(np.int8)
    y = np.take_along_axis(flat, arg[..., None].astype(np.intp), axis=-1)[..., 0]
    return np.ascontiguousarray(y), arg


def maxpool3x3s2p1_dx(arg: np.ndarray, dy: np.ndarray, h: int, w: int) -> np.ndarray:
    n, c, ho, wo = dy.shape
    dx = np.zeros((n, c, h, w), dtype=dy.dtype)
    ni, ci, ii, ji = np.indices((n, c, ho, wo), sparse=False)
    src_i = 2 * ii - 1 + (arg.astype(np.intp) // 3)
    src_j = 2 * ji - 1 + (arg.astype(np.intp) % 3)
    np.add.at(dx, (ni, ci, src_i, src_j), dy)
    return dx
