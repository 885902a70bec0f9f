"""Pure-numpy convolution primitives (im2col / col2im + BLAS matmul).

Three primitives cover every convolution in the model, including all
backward passes (see kernels/__init__.py for the exact correspondences):

  conv_down        strided cross-correlation, spatial downsampling
  spread_up        its adjoint (transposed convolution), spatial upsampling
  conv_weight_grad correlation of an input with an output-shaped gradient

Layouts: activations are (N, C, H, W); conv_down weights are
(C_out, C_in, KH, KW); spread_up weights are (C_in, C_out, KH, KW).
"""

import numpy as np


def _im2col(x, kh, kw, stride, pad, oh, ow):
    n, c, _, _ = x.shape
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    cols = np.empty((n, c, kh, kw, oh, ow), dtype=x.dtype)
    for a in range(kh):
        for b in range(kw):
            cols[:, :, a, b] = xp[:, :, a : a + stride * oh : stride, b : b + stride * ow : stride]
    return cols.reshape(n, c * kh * kw, oh * ow)


def conv_down_with_cols(x, w, stride, pad):
    """(output, columns); the columns can be fed to conv_weight_grad_cols."""
    n, ci, h, wd = x.shape
    co, _, kh, kw = w.shape
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (wd + 2 * pad - kw) // stride + 1
    cols = _im2col(x, kh, kw, stride, pad, oh, ow)
    out = np.matmul(w.reshape(co, -1), cols)
    return np.ascontiguousarray(out.reshape(n, co, oh, ow)), cols


def conv_down(x, w, stride, pad):
    return conv_down_with_cols(x, w, stride, pad)[0]


def conv_weight_grad_cols(cols, g):
    """Weight gradient (Co, Ci*KH*KW flat) from cached forward columns."""
    n, co, oh, ow = g.shape
    gm = g.reshape(n, co, oh * ow)
    return np.matmul(gm, cols.transpose(0, 2, 1)).sum(axis=0)


def spread_up(x, w, stride, pad):
    n, ci, h, wd = x.shape
    _, co, kh, kw = w.shape
    oh = (h - 1) * stride - 2 * pad + kh
    ow = (wd - 1) * stride - 2 * pad + kw
    cols = np.matmul(w.reshape(ci, -1).T, x.reshape(n, ci, h * wd))
    cols = cols.reshape(n, co, kh, kw, h, wd)
    outp = np.zeros((n, co, oh + 2 * pad, ow + 2 * pad), dtype=x.dtype)
    for a in range(kh):
        for b in range(kw):
            outp[:, :, a : a + stride * h : stride, b : b + stride * wd : stride] += cols[:, :, a, b]
    return np.ascontiguousarray(outp[:, :, pad : pad + oh, pad : pad + ow])


def conv_weight_grad(x, g, stride, pad):
    n, ci, h, wd = x.shape
    _, co, oh, ow = g.shape
    kh = h + 2 * pad - stride * (oh - 1)
    kw = wd + 2 * pad - stride * (ow - 1)
    cols = _im2col(x, kh, kw, stride, pad, oh, ow)
    gm = g.reshape(n, co, oh * ow)
    dw = np.matmul(gm, cols.transpose(0, 2, 1)).sum(axis=0)
    return np.ascontiguousarray(dw.reshape(co, ci, kh, kw))
