"""Core model: latent encoding, part exchange, residual decoding, scoring.

The generator encodes an image into a latent tensor split channel-wise into
one part per attribute; swapping the i-th parts of two images yields the
codes of the two novel-attribute images. The decoder sees the concatenation
of the new code with the reference code plus the reference image's encoder
shortcuts, and emits a residual in [-2, 2] that is added onto the source
image and clipped back to [-1, 1].

Public functions here take HWC float arrays in [-1, 1]; the Tensor-level
helpers (suffix _t) are what the training loop drives in NCHW batches.
"""

from dataclasses import dataclass

import numpy as np

from . import autograd as ag
from .autograd import Tensor
from .config import ModelConfig
from .errors import ConfigError, ContractError, ShapeError
from .nets import Decoder, Discriminator, Encoder


@dataclass(frozen=True)
class AttributeLabelVector:
    """Binary attribute marks plus their names."""

    bits: tuple
    attribute_names: tuple

    def __post_init__(self):
        if len(self.bits) != len(self.attribute_names):
            raise ContractError("bits and attribute_names length mismatch")
        if any(b not in (0, 1) for b in self.bits):
            raise ContractError(f"label bits must be 0 or 1, got {self.bits}")


def flip_label(label, i, value):
    """Copy of `label` with bits[i] = value; the input is untouched."""
    if not 0 <= i < len(label.bits):
        raise IndexError(f"attribute index {i} out of range for n={len(label.bits)}")
    if value not in (0, 1):
        raise ContractError(f"flip value must be 0 or 1, got {value}")
    bits = tuple(value if k == i else b for k, b in enumerate(label.bits))
    return AttributeLabelVector(bits, label.attribute_names)


@dataclass
class LatentCode:
    """n per-attribute feature blocks plus the encoder's shortcut activations."""

    parts: list
    shortcuts: list
    n: int

    def __post_init__(self):
        if len(self.parts) != self.n:
            raise ShapeError(f"expected {self.n} parts, got {len(self.parts)}")
        shapes = {tuple(np.shape(p)) for p in self.parts}
        if len(shapes) != 1:
            raise ShapeError(f"latent parts disagree in shape: {sorted(shapes)}")


class ModelParams:
    """The four networks plus their configuration; one parameter-set handle."""

    def __init__(self, config: ModelConfig, seed=0, dtype=np.float32):
        self.config = config
        self.dtype = dtype
        rng = np.random.Generator(np.random.PCG64(seed))
        self.encoder = Encoder(rng, config, dtype)
        self.decoder = Decoder(rng, config, dtype)
        self.d1 = Discriminator(rng, config, config.image_size, "d1", dtype)
        self.d2 = Discriminator(rng, config, config.image_size // 2, "d2", dtype)

    def generator_parameters(self):
        return self.encoder.parameters() + self.decoder.parameters()

    def discriminator_parameters(self):
        return self.d1.parameters() + self.d2.parameters()

    def all_parameters(self):
        return self.generator_parameters() + self.discriminator_parameters()


# ---------------------------------------------------------------------------
# Tensor-level graph builders (batched NCHW)


def encode_t(model, x):
    """Encode a batch; returns (parts, shortcuts) with the tape attached."""
    latent, shortcuts = model.encoder(x)
    n = model.config.n_attributes
    per = model.config.latent_channels // n
    parts = [ag.narrow(latent, 1, k * per, (k + 1) * per) for k in range(n)]
    return parts, shortcuts


def decode_t(model, parts_new, parts_ref, shortcuts):
    """Residual batch from [z_new, z_ref] concatenation plus ref shortcuts."""
    z_cat = ag.concat(list(parts_new) + list(parts_ref), axis=1)
    return model.decoder(z_cat, shortcuts)


def compose_t(image, residual):
    return ag.clamp(ag.add(image, residual), -1.0, 1.0)


def label_maps(bits, size, dtype=np.float32):
    """Broadcast an (N, n) bit array to (N, n, size, size) condition channels."""
    bits = np.asarray(bits, dtype=dtype)
    return np.ascontiguousarray(
        np.broadcast_to(bits[:, :, None, None], bits.shape + (size, size))
    )


def discriminate_t(model, which, images, bits):
    """Score a batch under one discriminator; `which` is 1 (fine) or 2 (coarse)."""
    cfg = model.config
    if which == 2:
        images = ag.avg_pool2(images)
    size = images.shape[2]
    maps = Tensor(label_maps(bits, size, dtype=model.dtype))
    net = model.d1 if which == 1 else model.d2
    return net(ag.concat([images, maps], axis=1))


# ---------------------------------------------------------------------------
# Public single-image operations (HWC arrays in [-1, 1])


def _check_image(image, config):
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ShapeError(f"expected (H, W, 3) image, got {image.shape}")
    h, w = image.shape[:2]
    if h != w:
        raise ConfigError(f"non-square image {h}x{w} not supported")
    if h != config.image_size:
        raise ConfigError(f"image size {h} does not match configured {config.image_size}")
    if h % (1 << config.depth) != 0:
        raise ConfigError(f"image size {h} not divisible by 2^depth")
    lo, hi = float(image.min()), float(image.max())
    if lo < -1.0 or hi > 1.0:
        raise ContractError(f"image values outside [-1, 1]: min={lo}, max={hi}")
    return image


def to_nchw(image, dtype=np.float32):
    return np.ascontiguousarray(np.transpose(image, (2, 0, 1))[None]).astype(dtype, copy=False)


def to_hwc(batch):
    return np.ascontiguousarray(np.transpose(np.asarray(batch)[0], (1, 2, 0)))


def encode(image, model):
    """LatentCode of one image; deterministic given (image, parameters)."""
    image = _check_image(image, model.config)
    with ag.no_grad():
        parts, shortcuts = encode_t(model, Tensor(to_nchw(image, model.dtype)))
    return LatentCode(
        parts=[p.data[0] for p in parts],
        shortcuts=[s.data[0] for s in shortcuts],
        n=model.config.n_attributes,
    )


def exchange(z_a, z_b, i):
    """Swap the i-th latent parts; shortcut activations stay with their image."""
    if not 0 <= i < z_a.n:
        raise IndexError(f"attribute index {i} out of range for n={z_a.n}")
    if z_a.n != z_b.n or np.shape(z_a.parts[0]) != np.shape(z_b.parts[0]):
        raise ShapeError("latent codes are not shape-compatible")
    parts_c = list(z_a.parts)
    parts_d = list(z_b.parts)
    parts_c[i], parts_d[i] = z_b.parts[i], z_a.parts[i]
    z_c = LatentCode(parts_c, z_a.shortcuts, z_a.n)
    z_d = LatentCode(parts_d, z_b.shortcuts, z_b.n)
    return z_c, z_d


def decode(z_new, z_ref, model):
    """Residual image (HWC, values in [-2, 2]) for z_new against z_ref."""
    if not z_ref.shortcuts:
        raise ContractError("reference latent code carries no shortcut activations")
    if np.shape(z_new.parts[0]) != np.shape(z_ref.parts[0]):
        raise ShapeError("latent codes are not shape-compatible")
    with ag.no_grad():
        residual = decode_t(
            model,
            [Tensor(np.asarray(p)[None]) for p in z_new.parts],
            [Tensor(np.asarray(p)[None]) for p in z_ref.parts],
            [Tensor(np.asarray(s)[None]) for s in z_ref.shortcuts],
        )
    return to_hwc(residual.data)


def compose(image, residual):
    """clamp(image + residual, -1, 1), elementwise."""
    image = np.asarray(image)
    residual = np.asarray(residual)
    if image.shape != residual.shape:
        raise ShapeError(f"shape mismatch: image {image.shape} vs residual {residual.shape}")
    return np.clip(image + residual, -1.0, 1.0)


def l2_normalize(x, alpha=1.0, beta=0.0, eps=1e-8):
    """x / max(||x||_2, eps) * alpha + beta over the channel axis.

    `x` is (C,), (C, H, W) or (N, C, H, W); the norm runs over C at every
    spatial location. No running statistics are involved.
    """
    x = np.asarray(x)
    if x.dtype != np.float64:
        x = x.astype(np.float32)
    axis = 0 if x.ndim in (1, 3) else 1
    n = np.sqrt(np.sum(x * x, axis=axis, keepdims=True))
    return x / np.maximum(n, eps) * alpha + beta


def discriminate(image, label, scale, model):
    """Conditional realism score in (0, 1) from one discriminator scale."""
    if scale not in (1, 2):
        raise ContractError(f"scale must be 1 or 2, got {scale}")
    if len(label.bits) != model.config.n_attributes:
        raise ContractError(
            f"label has {len(label.bits)} bits, model expects {model.config.n_attributes}"
        )
    image = _check_image(image, model.config)
    with ag.no_grad():
        score = discriminate_t(
            model,
            scale,
            Tensor(to_nchw(image, model.dtype)),
            np.asarray([label.bits]),
        )
    return float(score.data[0, 0])
