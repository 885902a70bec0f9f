"""Pure-numpy inverse-mapped bilinear warp with edge replication.

The sampling position for output pixel p is A @ (p - c) + mu, where mu is
the source-side anchor. mu is split into integer and fractional parts up
front: the fractional part joins the floating-point arithmetic while the
integer part is applied to gather indices as exact integer math. With that
split, translating the source anchor by whole pixels shifts the gather
indices and nothing else, which makes integer-translation equivariance
bit-exact instead of merely approximate.
"""

import numpy as np


def warp_bilinear(image, lin, c_out, mu_src, out_h, out_w):
    h, w, _ = image.shape
    m_int = np.floor(mu_src)
    m_frac = (mu_src - m_int).astype(image.dtype)
    mx, my = int(m_int[0]), int(m_int[1])

    px = np.arange(out_w, dtype=image.dtype) - image.dtype.type(c_out[0])
    py = np.arange(out_h, dtype=image.dtype) - image.dtype.type(c_out[1])
    lin = lin.astype(image.dtype)
    ux = lin[0, 0] * px[None, :] + lin[0, 1] * py[:, None] + m_frac[0]
    uy = lin[1, 0] * px[None, :] + lin[1, 1] * py[:, None] + m_frac[1]

    fx = np.floor(ux)
    fy = np.floor(uy)
    tx = (ux - fx)[:, :, None]
    ty = (uy - fy)[:, :, None]
    ix = fx.astype(np.int64) + mx
    iy = fy.astype(np.int64) + my

    ix0 = np.clip(ix, 0, w - 1)
    ix1 = np.clip(ix + 1, 0, w - 1)
    iy0 = np.clip(iy, 0, h - 1)
    iy1 = np.clip(iy + 1, 0, h - 1)

    v00 = image[iy0, ix0]
    v01 = image[iy0, ix1]
    v10 = image[iy1, ix0]
    v11 = image[iy1, ix1]
    one = image.dtype.type(1)
    return (
        v00 * ((one - ty) * (one - tx))
        + v01 * ((one - ty) * tx)
        + v10 * (ty * (one - tx))
        + v11 * (ty * tx)
    )
