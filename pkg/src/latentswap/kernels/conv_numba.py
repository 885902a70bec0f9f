"""Numba-compiled convolution primitives.

Same contracts as conv_numpy. Gather/scatter (im2col / col2im) runs in
compiled loops; each primitive then issues a single BLAS matmul over the
whole batch (np.dot is supported inside @njit). Columns are packed so
every output element is an independent dot product over the kernel axis,
which keeps results reproducible and independent of batch size.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _pad2d(x, pad):
    n, c, h, w = x.shape
    if pad == 0:
        return np.ascontiguousarray(x)
    xp = np.zeros((n, c, h + 2 * pad, w + 2 * pad), dtype=x.dtype)
    xp[:, :, pad : pad + h, pad : pad + w] = x
    return xp


@njit(cache=True)
def _im2col_kxl(xp, kh, kw, stride, oh, ow):
    """(Ci*KH*KW, N*OH*OW) column matrix."""
    n, c, _, _ = xp.shape
    ll = oh * ow
    cols = np.empty((c * kh * kw, n * ll), dtype=xp.dtype)
    for c0 in range(c):
        for a in range(kh):
            for b in range(kw):
                row = ((c0 * kh) + a) * kw + b
                for b0 in range(n):
                    base = b0 * ll
                    for i in range(oh):
                        ii = stride * i + a
                        off = base + i * ow
                        for j in range(ow):
                            cols[row, off + j] = xp[b0, c0, ii, stride * j + b]
    return cols


@njit(cache=True)
def conv_down_with_cols(x, w, stride, pad):
    """(output, columns); the columns can be fed to conv_weight_grad_cols."""
    n, ci, h, wd = x.shape
    co = w.shape[0]
    kh = w.shape[2]
    kw = w.shape[3]
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (wd + 2 * pad - kw) // stride + 1
    cols = _im2col_kxl(_pad2d(x, pad), kh, kw, stride, oh, ow)
    w2 = np.ascontiguousarray(w.reshape(co, ci * kh * kw))
    flat = np.dot(w2, cols)  # (Co, N*OH*OW)
    ll = oh * ow
    out = np.empty((n, co, oh, ow), dtype=x.dtype)
    for b0 in range(n):
        for c0 in range(co):
            base = b0 * ll
            for i in range(oh):
                off = base + i * ow
                for j in range(ow):
                    out[b0, c0, i, j] = flat[c0, off + j]
    return out, cols


@njit(cache=True)
def conv_down(x, w, stride, pad):
    out, _ = conv_down_with_cols(x, w, stride, pad)
    return out


@njit(cache=True)
def conv_weight_grad_cols(cols, g):
    """Weight gradient (Co, Ci*KH*KW flat) from cached forward columns."""
    n, co, oh, ow = g.shape
    ll = oh * ow
    gpack = np.empty((co, n * ll), dtype=g.dtype)
    for c0 in range(co):
        for b0 in range(n):
            base = b0 * ll
            for i in range(oh):
                off = base + i * ow
                for j in range(ow):
                    gpack[c0, off + j] = g[b0, c0, i, j]
    return np.dot(gpack, cols.T)


@njit(cache=True)
def spread_up(x, w, stride, pad):
    n, ci, h, wd = x.shape
    co = w.shape[1]
    kh = w.shape[2]
    kw = w.shape[3]
    oh = (h - 1) * stride - 2 * pad + kh
    ow = (wd - 1) * stride - 2 * pad + kw
    ll = h * wd
    xpack = np.empty((ci, n * ll), dtype=x.dtype)
    for c0 in range(ci):
        for b0 in range(n):
            base = b0 * ll
            for i in range(h):
                off = base + i * wd
                for j in range(wd):
                    xpack[c0, off + j] = x[b0, c0, i, j]
    w2 = np.ascontiguousarray(w.reshape(ci, co * kh * kw).T)
    cols = np.dot(w2, xpack)  # (Co*KH*KW, N*H*W)
    outp = np.zeros((n, co, oh + 2 * pad, ow + 2 * pad), dtype=x.dtype)
    for c0 in range(co):
        for a in range(kh):
            for b in range(kw):
                row = ((c0 * kh) + a) * kw + b
                for b0 in range(n):
                    base = b0 * ll
                    for i in range(h):
                        ii = stride * i + a
                        off = base + i * wd
                        for j in range(wd):
                            outp[b0, c0, ii, stride * j + b] += cols[row, off + j]
    return np.ascontiguousarray(outp[:, :, pad : pad + oh, pad : pad + ow])


@njit(cache=True)
def conv_weight_grad(x, g, stride, pad):
    n, ci, h, wd = x.shape
    co = g.shape[1]
    oh = g.shape[2]
    ow = g.shape[3]
    kh = h + 2 * pad - stride * (oh - 1)
    kw = wd + 2 * pad - stride * (ow - 1)
    cols = _im2col_kxl(_pad2d(x, pad), kh, kw, stride, oh, ow)
    dw = conv_weight_grad_cols(cols, g)
    return np.ascontiguousarray(dw.reshape(co, ci, kh, kw))
