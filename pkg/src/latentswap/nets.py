"""Network stacks: encoder, residual decoder with shortcuts, discriminators.

Every stack is `depth` Conv-Norm-LeakyReLU blocks with kernel 4, stride 2,
padding 1 (the geometry that maps 256 -> 8 over five layers and back).
Normalization is the statistic-free per-location channel l2 norm with
learnable per-channel scale/shift, so nothing depends on batch composition.

Initialization: fan-in-scaled Gaussians everywhere except the decoder's
output layer and the discriminators' final fully connected layer, which
start at zero. Zero output layers make the generator an exact identity at
step 0 and start every discriminator score at 0.5.
"""

import numpy as np

from . import autograd as ag
from .autograd import Tensor
from .errors import ContractError

NORM_EPS = 1e-8


def l2norm(x, alpha, beta, eps=NORM_EPS):
    """x / max(||x||_2, eps) * alpha + beta, norm over channels per location."""
    n2 = ag.sum_axis(ag.mul(x, x), axis=1, keepdims=True)
    denom = ag.sqrt(ag.clamp(n2, lo=eps * eps))
    return ag.add(ag.mul(ag.div(x, denom), alpha), beta)


class ConvBlock:
    """conv(4,2,1) -> channel l2 norm -> leaky relu."""

    def __init__(self, rng, name, c_in, c_out, slope, dtype, transpose=False):
        self.name = name
        self.slope = slope
        self.transpose = transpose
        fan_in = c_in * 16
        shape = (c_in, c_out, 4, 4) if transpose else (c_out, c_in, 4, 4)
        std = np.sqrt(2.0 / fan_in)
        self.w = Tensor(
            rng.normal(0.0, std, shape).astype(dtype), requires_grad=True, name=f"{name}.w"
        )
        self.alpha = Tensor(
            np.ones((1, c_out, 1, 1), dtype=dtype), requires_grad=True, name=f"{name}.alpha"
        )
        self.beta = Tensor(
            np.zeros((1, c_out, 1, 1), dtype=dtype), requires_grad=True, name=f"{name}.beta"
        )

    def __call__(self, x):
        op = ag.conv2d_transpose if self.transpose else ag.conv2d
        h = op(x, self.w, stride=2, pad=1)
        return ag.leaky_relu(l2norm(h, self.alpha, self.beta), self.slope)

    def parameters(self):
        return [self.w, self.alpha, self.beta]


class OutputDeconv:
    """Final decoder layer: deconv + bias + 2*tanh, zero-initialized."""

    def __init__(self, name, c_in, c_out, dtype):
        self.name = name
        self.w = Tensor(
            np.zeros((c_in, c_out, 4, 4), dtype=dtype), requires_grad=True, name=f"{name}.w"
        )
        self.b = Tensor(
            np.zeros((1, c_out, 1, 1), dtype=dtype), requires_grad=True, name=f"{name}.b"
        )

    def __call__(self, x):
        h = ag.add(ag.conv2d_transpose(x, self.w, stride=2, pad=1), self.b)
        return ag.mul(ag.tanh(h), 2.0)

    def parameters(self):
        return [self.w, self.b]


class Encoder:
    def __init__(self, rng, config, dtype=np.float32):
        chans = config.encoder_channels()
        self.depth = config.depth
        self.blocks = []
        c_prev = 3
        for k, c in enumerate(chans):
            self.blocks.append(
                ConvBlock(rng, f"enc.{k}", c_prev, c, config.leaky_slope, dtype)
            )
            c_prev = c

    def __call__(self, x):
        """Returns (latent, shortcuts); shortcuts hold all but the deepest output."""
        shortcuts = []
        h = x
        for k, block in enumerate(self.blocks):
            h = block(h)
            if k < self.depth - 1:
                shortcuts.append(h)
        return h, shortcuts

    def parameters(self):
        return [p for b in self.blocks for p in b.parameters()]


class Decoder:
    """Mirror stack consuming [z_new, z_ref] plus encoder shortcuts."""

    def __init__(self, rng, config, dtype=np.float32):
        chans = config.encoder_channels()
        d = config.depth
        self.depth = d
        self.blocks = []
        c_in = 2 * config.latent_channels
        for k in range(d - 1):
            c_out = chans[d - 2 - k]
            self.blocks.append(
                ConvBlock(rng, f"dec.{k}", c_in, c_out, config.leaky_slope, dtype, transpose=True)
            )
            # next layer sees this output concatenated with the matching shortcut
            c_in = 2 * c_out
        self.out = OutputDeconv(f"dec.{d - 1}", c_in, 3, dtype)

    def __call__(self, z_cat, shortcuts):
        if len(shortcuts) != self.depth - 1:
            raise ContractError(
                f"decoder needs {self.depth - 1} shortcut activations, got {len(shortcuts)}"
            )
        h = z_cat
        for k, block in enumerate(self.blocks):
            h = block(h)
            h = ag.concat([h, shortcuts[self.depth - 2 - k]], axis=1)
        return self.out(h)

    def parameters(self):
        return [p for b in self.blocks for p in b.parameters()] + self.out.parameters()


class Discriminator:
    """Conv stack + fully connected sigmoid head, conditioned on label maps.

    The label vector enters as n constant-valued channels concatenated to
    the image. `input_size` is the spatial size this instance consumes
    (full resolution for the fine discriminator, half for the coarse one).
    """

    def __init__(self, rng, config, input_size, name, dtype=np.float32):
        chans = config.encoder_channels()
        self.name = name
        self.blocks = []
        c_prev = 3 + config.n_attributes
        for k, c in enumerate(chans):
            self.blocks.append(
                ConvBlock(rng, f"{name}.{k}", c_prev, c, config.leaky_slope, dtype)
            )
            c_prev = c
        feat_hw = input_size >> config.depth
        feat_dim = chans[-1] * feat_hw * feat_hw
        self.fc_w = Tensor(
            np.zeros((feat_dim, 1), dtype=dtype), requires_grad=True, name=f"{name}.fc.w"
        )
        self.fc_b = Tensor(np.zeros((1,), dtype=dtype), requires_grad=True, name=f"{name}.fc.b")

    def __call__(self, x):
        """x already carries the label channels; returns scores of shape (N, 1)."""
        h = x
        for block in self.blocks:
            h = block(h)
        flat = ag.reshape(h, (h.shape[0], -1))
        return ag.sigmoid(ag.add(ag.matmul(flat, self.fc_w), self.fc_b))

    def parameters(self):
        return [p for b in self.blocks for p in b.parameters()] + [self.fc_w, self.fc_b]


def named_parameters(net):
    return {p.name: p for p in net.parameters()}
