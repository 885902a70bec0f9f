"""Numba inverse-mapped bilinear warp; same contract as warp_numpy."""

import numpy as np
from numba import njit


@njit(cache=True)
def warp_bilinear(image, lin, c_out, mu_src, out_h, out_w):
    h, w, ch = image.shape
    mx = int(np.floor(mu_src[0]))
    my = int(np.floor(mu_src[1]))
    mfx = image.dtype.type(mu_src[0] - np.floor(mu_src[0]))
    mfy = image.dtype.type(mu_src[1] - np.floor(mu_src[1]))
    a00 = image.dtype.type(lin[0, 0])
    a01 = image.dtype.type(lin[0, 1])
    a10 = image.dtype.type(lin[1, 0])
    a11 = image.dtype.type(lin[1, 1])
    cx = image.dtype.type(c_out[0])
    cy = image.dtype.type(c_out[1])
    one = image.dtype.type(1)

    out = np.empty((out_h, out_w, ch), dtype=image.dtype)
    for r in range(out_h):
        py = image.dtype.type(r) - cy
        for q in range(out_w):
            px = image.dtype.type(q) - cx
            ux = a00 * px + a01 * py + mfx
            uy = a10 * px + a11 * py + mfy
            fx = np.floor(ux)
            fy = np.floor(uy)
            tx = ux - fx
            ty = uy - fy
            ix = int(fx) + mx
            iy = int(fy) + my
            ix0 = min(max(ix, 0), w - 1)
            ix1 = min(max(ix + 1, 0), w - 1)
            iy0 = min(max(iy, 0), h - 1)
            iy1 = min(max(iy + 1, 0), h - 1)
            for k in range(ch):
                out[r, q, k] = (
                    image[iy0, ix0, k] * ((one - ty) * (one - tx))
                    + image[iy0, ix1, k] * ((one - ty) * tx)
                    + image[iy1, ix0, k] * (ty * (one - tx))
                    + image[iy1, ix1, k] * (ty * tx)
                )
    return out
