"""Numba-jitted kernel backend, cached to disk after first compile.

Inputs are padded into a scratch buffer once so the hot loops run without
bounds checks and the innermost output-row loops stay vectorizable.
Accumulation is float64 regardless of input dtype; parallel loops only ever
write thread-owned output slices, so results are bitwise deterministic for
any thread count.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange


@njit(cache=True)
def _pad(x, pad):
    n, c, h, w = x.shape
    xp = np.zeros((n, c, h + 2 * pad, w + 2 * pad), dtype=x.dtype)
    xp[:, :, pad : pad + h, pad : pad + w] = x
    return xp


@njit(cache=True, parallel=True)
def _conv2d_padded(xp, w, stride, ho, wo):
    n, c = xp.shape[0], xp.shape[1]
    o, _, kh, kw = w.shape
    y = np.empty((n, o, ho, wo), dtype=xp.dtype)
    for nn in prange(n * o):
        ni = nn // o
        oi = nn % o
        acc = np.empty(wo, dtype=np.float64)
        for i in range(ho):
            acc[:] = 0.0
            i0 = i * stride
            for ci in range(c):
                for ki in range(kh):
                    row = xp[ni, ci, i0 + ki]
                    for kj in range(kw):
                        wv = w[oi, ci, ki, kj]
                        for j in range(wo):
                            acc[j] += wv * row[j * stride + kj]
            for j in range(wo):
                y[ni, oi, i, j] = acc[j]
    return y


def conv2d(x, w, stride, pad):
    kh = w.shape[2]
    ho = (x.shape[2] + 2 * pad - kh) // stride + 1
    wo = (x.shape[3] + 2 * pad - w.shape[3]) // stride + 1
    xp = _pad(x, pad) if pad else x
    return _conv2d_padded(xp, w, stride, ho, wo)


@njit(cache=True, parallel=True)
def _conv2d_dx_padded(w, dy, stride, hp, wp):
    o, c, kh, kw = w.shape
    n, _, ho, wo = dy.shape
    dxp = np.zeros((n, c, hp, wp), dtype=dy.dtype)
    for ni in prange(n):
        for oi in range(o):
            for i in range(ho):
                i0 = i * stride
                for ki in range(kh):
                    for kj in range(kw):
                        for ci in range(c):
                            wv = w[oi, ci, ki, kj]
                            row = dxp[ni, ci, i0 + ki]
                            for j in range(wo):
                                row[j * stride + kj] += wv * dy[ni, oi, i, j]
    return dxp


def conv2d_dx(w, dy, stride, pad, h, wid):
    dxp = _conv2d_dx_padded(w, dy, stride, h + 2 * pad, wid + 2 * pad)
    if pad:
        return np.ascontiguousarray(dxp[:, :, pad : pad + h, pad : pad + wid])
    return dxp


@njit(cache=True, parallel=True)
def _conv2d_dw_padded(xp, dy, stride, kh, kw):
    n, c = xp.shape[0], xp.shape[1]
    _, o, ho, wo = dy.shape
    dw = np.empty((o, c, kh, kw), dtype=xp.dtype)
    for oi in prange(o):
        for ci in range(c):
            for ki in range(kh):
                for kj in range(kw):
                    acc = 0.0
                    for ni in range(n):
                        for i in range(ho):
                            row = xp[ni, ci, i * stride + ki]
                            drow = dy[ni, oi, i]
                            for j in range(wo):
                                acc += row[j * stride + kj] * drow[j]
                    dw[oi, ci, ki, kj] = acc
    return dw


def conv2d_dw(x, dy, stride, pad, kh, kw):
    xp = _pad(x, pad) if pad else x
    return _conv2d_dw_padded(xp, dy, stride, kh, kw)


@njit(cache=True, parallel=True)
def conv_transpose2x2(x, w):
    n, c, h, wid = x.shape
    o = w.shape[1]
    y = np.empty((n, o, 2 * h, 2 * wid), dtype=x.dtype)
    for ni in prange(n):
        a = np.empty((4, wid), dtype=np.float64)
        for oi in range(o):
            for i in range(h):
                a[:, :] = 0.0
                for ci in range(c):
                    row = x[ni, ci, i]
                    for j in range(wid):
                        xv = row[j]
                        a[0, j] += xv * w[ci, oi, 0, 0]
                        a[1, j] += xv * w[ci, oi, 0, 1]
                        a[2, j] += xv * w[ci, oi, 1, 0]
                        a[3, j] += xv * w[ci, oi, 1, 1]
                for j in range(wid):
                    y[ni, oi, 2 * i, 2 * j] = a[0, j]
                    y[ni, oi, 2 * i, 2 * j + 1] = a[1, j]
                    y[ni, oi, 2 * i + 1, 2 * j] = a[2, j]
                    y[ni, oi, 2 * i + 1, 2 * j + 1] = a[3, j]
    return y


@njit(cache=True, parallel=True)
def conv_transpose2x2_dx(w, dy):
    c, o = w.shape[0], w.shape[1]
    n, _, ho, wo = dy.shape
    h, wid = ho // 2, wo // 2
    dx = np.empty((n, c, h, wid), dtype=dy.dtype)
    for ni in prange(n):
        acc = np.empty(wid, dtype=np.float64)
        for ci in range(c):
            for i in range(h):
                acc[:] = 0.0
                for oi in range(o):
                    r0 = dy[ni, oi, 2 * i]
                    r1 = dy[ni, oi, 2 * i + 1]
                    w00 = w[ci, oi, 0, 0]
                    w01 = w[ci, oi, 0, 1]
                    w10 = w[ci, oi, 1, 0]
                    w11 = w[ci, oi, 1, 1]
                    for j in range(wid):
                        acc[j] += (r0[2 * j] * w00 + r0[2 * j + 1] * w01
                                   + r1[2 * j] * w10 + r1[2 * j + 1] * w11)
                for j in range(wid):
                    dx[ni, ci, i, j] = acc[j]
    return dx


@njit(cache=True, parallel=True)
def conv_transpose2x2_dw(x, dy):
    n, c, h, wid = x.shape
    o = dy.shape[1]
    dw = np.empty((c, o, 2, 2), dtype=x.dtype)
    for ci in prange(c):
        for oi in range(o):
            a00 = 0.0
            a01 = 0.0
            a10 = 0.0
            a11 = 0.0
            for ni in range(n):
                for i in range(h):
                    row = x[ni, ci, i]
                    r0 = dy[ni, oi, 2 * i]
                    r1 = dy[ni, oi, 2 * i + 1]
                    for j in range(wid):
                        xv = row[j]
                        a00 += xv * r0[2 * j]
                        a01 += xv * r0[2 * j + 1]
                        a10 += xv * r1[2 * j]
                        a11 += xv * r1[2 * j + 1]
            dw[ci, oi, 0, 0] = a00
            dw[ci, oi, 0, 1] = a01
            dw[ci, oi, 1, 0] = a10
            dw[ci, oi, 1, 1] = a11
    return dw


@njit(cache=True, parallel=True)
def maxpool3x3s2p1(x):
    n, c, h, w = x.shape
    ho = (h + 2 - 3) // 2 + 1
    wo = (w + 2 - 3) // 2 + 1
    y = np.empty((n, c, ho, wo), dtype=x.dtype)
    arg = np.empty((n, c, ho, wo), dtype=np.int8)
    for ni in prange(n):
        for ci in range(c):
            for i in range(ho):
                for j in range(wo):
                    best = -np.inf
                    besta = 0
                    for ki in range(3):
                        ii = 2 * i + ki - 1
                        if ii < 0 or ii >= h:
                            continue
                        for kj in range(3):
                            jj = 2 * j + kj - 1
                            if jj < 0 or jj >= w:
                                continue
                            v = x[ni, ci, ii, jj]
                            if v > best:
                                best = v
                                besta = 3 * ki + kj
                    y[ni, ci, i, j] = best
                    arg[ni, ci, i, j] = besta
    return y, arg


@njit(cache=True, parallel=True)
def maxpool3x3s2p1_dx(arg, dy, h, w):
    n, c, ho, wo = dy.shape
    dx = np.zeros((n, c, h, w), dtype=dy.dtype)
    for ni in prange(n):
        for ci in range(c):
            for i in range(ho):
                for j in range(wo):
                    a = arg[ni, ci, i, j]
                    dx[ni, ci, 2 * i - 1 + a // 3, 2 * j - 1 + a % 3] += dy[ni, ci, i, j]
    return dx
