"""Desk-scale synthetic dataset with an exact oracle classifier.

Each image is a smooth bright background (a per-image random coarse grid,
bilinearly upsampled) onto which dark attribute marks are painted in
disjoint, reserved regions:

  bangs       a dark band across the top
  smile       a dark filled ellipse near the bottom center
  eyeglasses  two dark lens disks plus a bridge across the middle

Mark styles (extent, intensity, pattern) vary per image, but every style
fully covers a small probe box inside its reserved region, and no other
mark or background feature ever darkens that box. The oracle measures the
probe box's mean intensity against a threshold calibrated from clean
renders, which makes it exact on clean data and robustly thresholded on
generated images. Rendering is a pure function of (seed, index, bits):
all style draws happen whether or not a mark is painted, so toggling one
attribute bit changes nothing else.
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import ArrayDataset, AttributeTable, denormalize, save_image, serialize_attribute_file
from .errors import ConfigError, DataError

AVAILABLE_ATTRIBUTES = ("bangs", "smile", "eyeglasses")


@dataclass
class SyntheticSpec:
    image_size: int = 64
    attribute_names: tuple = ("bangs", "smile")
    seed: int = 0

    def __post_init__(self):
        unknown = [a for a in self.attribute_names if a not in AVAILABLE_ATTRIBUTES]
        if unknown:
            raise ConfigError(
                f"no renderer for attributes {unknown}; available: {AVAILABLE_ATTRIBUTES}"
            )
        if self.image_size < 32:
            raise ConfigError("synthetic images need image_size >= 32")

    @property
    def n_attributes(self):
        return len(self.attribute_names)


def probe_box(name, size):
    """(row0, row1, col0, col1) of the region the oracle measures."""
    s = size
    if name == "bangs":
        return (s // 16, s // 4, s // 3, 2 * s // 3)
    if name == "smile":
        return (int(0.80 * s), int(0.86 * s), int(0.46 * s), int(0.54 * s))
    if name == "eyeglasses":
        # inside the left lens disk
        cx, cy, r = 0.35 * s, 0.45 * s, 0.035 * s
        return (int(cy - r), int(cy + r) + 1, int(cx - r), int(cx + r) + 1)
    raise ConfigError(f"unknown attribute {name!r}")


def _paint_bangs(img, rng, s):
    depth = int(rng.uniform(0.25, 0.30) * s)
    top = s // 16
    pattern = rng.integers(0, 4)
    shade = rng.uniform(-0.95, -0.55)
    spans = {
        0: (0, s),                       # full
        1: (0, int(0.70 * s)),           # swept left
        2: (int(0.30 * s), s),           # swept right
        3: (int(0.22 * s), int(0.78 * s)),  # center patch
    }
    c0, c1 = spans[int(pattern)]
    tint = rng.uniform(-0.05, 0.05, size=3)
    img[top:depth, c0:c1] = np.clip(shade + tint, -1.0, -0.5)


def _paint_smile(img, rng, s):
    cx, cy = 0.5 * s, 0.83 * s
    rx = rng.uniform(0.14, 0.20) * s
    ry = rng.uniform(0.06, 0.09) * s
    base = np.array([rng.uniform(-0.2, 0.2), rng.uniform(-0.95, -0.75), rng.uniform(-0.95, -0.75)])
    yy, xx = np.mgrid[0:s, 0:s]
    mask = ((xx - cx) / rx) ** 2 + ((yy - cy) / ry) ** 2 <= 1.0
    img[mask] = np.clip(base, -1.0, 0.3)


def _paint_eyeglasses(img, rng, s):
    r = rng.uniform(0.08, 0.11) * s
    shade = rng.uniform(-0.9, -0.6)
    tint = rng.uniform(-0.05, 0.05, size=3)
    color = np.clip(shade + tint, -1.0, -0.5)
    yy, xx = np.mgrid[0:s, 0:s]
    for cx in (0.35 * s, 0.65 * s):
        mask = (xx - cx) ** 2 + (yy - 0.45 * s) ** 2 <= r * r
        img[mask] = color
    bry = int(0.45 * s)
    img[bry - 1 : bry + 1, int(0.42 * s) : int(0.58 * s)] = color


_PAINTERS = {"bangs": _paint_bangs, "smile": _paint_smile, "eyeglasses": _paint_eyeglasses}


def render_image(spec, index, bits):
    """Clean float image in [-1, 1] for sample `index` with the given bits."""
    rng = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(spec.seed, spawn_key=(1, index)))
    )
    s = spec.image_size
    coarse = rng.uniform(0.05, 0.75, size=(4, 4, 3)).astype(np.float64)
    grid = np.linspace(0, 3, s)
    i0 = np.clip(np.floor(grid).astype(int), 0, 2)
    frac = grid - i0
    rows = coarse[i0] * (1 - frac)[:, None, None] + coarse[i0 + 1] * frac[:, None, None]
    img = rows[:, i0] * (1 - frac)[None, :, None] + rows[:, i0 + 1] * frac[None, :, None]
    # draw every style unconditionally so bit flips change only their own mark
    for k, name in enumerate(spec.attribute_names):
        sub = rng.spawn(1)[0]
        if bits[k]:
            _PAINTERS[name](img, sub, s)
    return img.astype(np.float32)


def _box_stat(image, box):
    r0, r1, c0, c1 = box
    return float(np.mean(image[r0:r1, c0:c1]))


@dataclass
class SyntheticOracle:
    """Region-statistic classifier; exact on clean renders by construction."""

    attribute_names: tuple
    image_size: int
    thresholds: dict = field(default_factory=dict)

    def classify(self, image, i):
        """1 when the attribute's probe region is darker than the threshold."""
        name = self.attribute_names[i]
        stat = _box_stat(np.asarray(image), probe_box(name, self.image_size))
        return 1 if stat < self.thresholds[name] else 0

    def to_dict(self):
        return {
            "attribute_names": list(self.attribute_names),
            "image_size": self.image_size,
            "thresholds": dict(self.thresholds),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["attribute_names"]), int(d["image_size"]), dict(d["thresholds"]))


def oracle_classify(oracle, image, i):
    return oracle.classify(image, i)


def calibrate_oracle(spec, samples=128):
    """Fix thresholds from clean renders before any training happens.

    The threshold per attribute is the midpoint between the mean probe
    statistic of clean positives and clean negatives.
    """
    oracle = SyntheticOracle(tuple(spec.attribute_names), spec.image_size)
    for k, name in enumerate(spec.attribute_names):
        stats = {0: [], 1: []}
        for j in range(samples):
            bits = [(j >> a) & 1 for a in range(spec.n_attributes)]
            bits[k] = j % 2
            img = render_image(spec, 10_000_000 + j, bits)
            stats[bits[k]].append(_box_stat(img, probe_box(name, spec.image_size)))
        oracle.thresholds[name] = float((np.mean(stats[0]) + np.mean(stats[1])) / 2.0)
    return oracle


def generate_synthetic(spec, count, out_dir=None):
    """`count` random-bit renders plus their table and calibrated oracle.

    Returns (ArrayDataset, SyntheticOracle); when out_dir is given, also
    writes PNG files, attributes.txt in the standard annotation format,
    and oracle.json.
    """
    if count < 1:
        raise DataError("count must be positive")
    rng = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(spec.seed, spawn_key=(0,)))
    )
    bits = rng.integers(0, 2, size=(count, spec.n_attributes)).astype(np.uint8)
    filenames = [f"synth_{k:06d}.png" for k in range(count)]
    images = np.stack(
        [denormalize(render_image(spec, k, bits[k])) for k in range(count)]
    )
    table = AttributeTable(list(spec.attribute_names), filenames, bits)
    oracle = calibrate_oracle(spec)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for fname, img in zip(filenames, images):
            save_image(out_dir / fname, img)
        (out_dir / "attributes.txt").write_text(serialize_attribute_file(table))
        import json

        (out_dir / "oracle.json").write_text(json.dumps(oracle.to_dict(), indent=2) + "\n")
    return ArrayDataset(table, images, name=str(out_dir or "synthetic")), oracle
