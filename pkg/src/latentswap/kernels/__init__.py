"""Backend-dispatched array kernels.

Importing this module binds conv_down / spread_up / conv_weight_grad /
warp_bilinear to the backend chosen in latentswap.backend. The adjoint
relations used for backpropagation (x is (N,C,H,W)):

  y = conv_down(x, w)    w: (Co, Ci, KH, KW)
      dx = spread_up(g, w)          (same weight array, axes reinterpreted)
      dw = conv_weight_grad(x, g)

  y = spread_up(x, w)    w: (Ci, Co, KH, KW)
      dx = conv_down(g, w)
      dw = conv_weight_grad(g, x)   (note the swapped roles)
"""

from ..backend import ACTIVE

if ACTIVE == "numba":
    from .conv_numba import (
        conv_down,
        conv_down_with_cols,
        conv_weight_grad,
        conv_weight_grad_cols,
        spread_up,
    )
    from .warp_numba import warp_bilinear
else:
    from .conv_numpy import (
        conv_down,
        conv_down_with_cols,
        conv_weight_grad,
        conv_weight_grad_cols,
        spread_up,
    )
    from .warp_numpy import warp_bilinear

__all__ = [
    "conv_down",
    "conv_down_with_cols",
    "conv_weight_grad",
    "conv_weight_grad_cols",
    "spread_up",
    "warp_bilinear",
]
