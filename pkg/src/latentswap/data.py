"""Attribute annotations, pixel normalization, and pair-batch sampling.

The annotation text format is the usual face-attribute layout: a count
line, a header line of attribute names, then one row per image of
"filename v1 ... vn" with entries in {-1, 1}. -1 maps to bit 0, 1 to bit 1.
The synthetic dataset writer emits the same format, so both real and
synthetic data go through one parser.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import AttributeFileParseError, DataError


@dataclass
class AttributeTable:
    attribute_names: list
    filenames: list
    bits: np.ndarray  # (n_images, n_attributes) uint8

    def __post_init__(self):
        if len(set(self.filenames)) != len(self.filenames):
            raise DataError("duplicate filenames in attribute table")
        if self.bits.shape != (len(self.filenames), len(self.attribute_names)):
            raise DataError(
                f"bits shape {self.bits.shape} inconsistent with "
                f"{len(self.filenames)} rows x {len(self.attribute_names)} attributes"
            )

    def row(self, filename):
        return self.bits[self.filenames.index(filename)]

    def attribute_index(self, name):
        try:
            return self.attribute_names.index(name)
        except ValueError:
            raise DataError(
                f"unknown attribute {name!r}; valid names: {', '.join(self.attribute_names)}"
            ) from None

    def pools(self, i):
        """(positive_indices, negative_indices) for attribute i."""
        col = self.bits[:, i]
        return np.flatnonzero(col == 1), np.flatnonzero(col == 0)


def parse_attribute_file(stream):
    """Parse the annotation format from an iterable of text lines."""
    if isinstance(stream, (str, Path)):
        stream = Path(stream).read_text().splitlines()
    lines = [ln.rstrip("\n") for ln in stream]
    if not lines:
        raise AttributeFileParseError("empty attribute file", 1)
    try:
        declared = int(lines[0].strip())
    except ValueError:
        raise AttributeFileParseError(f"expected an image count, got {lines[0]!r}", 1) from None
    if len(lines) < 2:
        raise AttributeFileParseError("missing attribute-name header", 2)
    names = lines[1].split()
    if not names:
        raise AttributeFileParseError("empty attribute-name header", 2)
    filenames = []
    rows = []
    for lineno, line in enumerate(lines[2:], start=3):
        if not line.strip():
            continue
        fields = line.split()
        if len(fields) != len(names) + 1:
            raise AttributeFileParseError(
                f"expected filename + {len(names)} values, got {len(fields)} fields", lineno
            )
        values = []
        for v in fields[1:]:
            if v == "1":
                values.append(1)
            elif v == "-1":
                values.append(0)
            else:
                raise AttributeFileParseError(f"attribute value must be -1 or 1, got {v!r}", lineno)
        filenames.append(fields[0])
        rows.append(values)
    if len(rows) != declared:
        raise AttributeFileParseError(
            f"declared {declared} images but found {len(rows)} rows", len(lines)
        )
    return AttributeTable(names, filenames, np.asarray(rows, dtype=np.uint8))


def serialize_attribute_file(table):
    """Inverse of parse_attribute_file."""
    out = [str(len(table.filenames)), " ".join(table.attribute_names)]
    for fname, row in zip(table.filenames, table.bits):
        out.append(fname + " " + " ".join("1" if b else "-1" for b in row))
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# pixel value mapping


def normalize(image_u8):
    """uint8 RGB -> float32 in [-1, 1] via v / 127.5 - 1."""
    return (np.asarray(image_u8).astype(np.float32) / np.float32(127.5)) - np.float32(1.0)


def denormalize(image):
    """float [-1, 1] -> uint8, rounding half away from zero; inverse of normalize."""
    v = (np.clip(np.asarray(image, dtype=np.float64), -1.0, 1.0) + 1.0) * 127.5
    return np.floor(v + 0.5).clip(0, 255).astype(np.uint8)


def load_image(path):
    return np.asarray(Image.open(path).convert("RGB"))


def save_image(path, image_u8):
    Image.fromarray(np.asarray(image_u8, dtype=np.uint8)).save(path)


# ---------------------------------------------------------------------------
# datasets + sampling


class ArrayDataset:
    """All images of a dataset directory resident in memory as uint8."""

    def __init__(self, table, images, name=""):
        self.table = table
        self.images = images  # (M, H, W, 3) uint8
        self.name = name

    @property
    def attribute_names(self):
        return self.table.attribute_names

    @classmethod
    def from_dir(cls, root):
        root = Path(root)
        attr_path = root / "attributes.txt"
        if not attr_path.exists():
            raise DataError(f"{root}: no attributes.txt")
        table = parse_attribute_file(attr_path)
        images = []
        for fname in table.filenames:
            p = root / fname
            if not p.exists():
                raise DataError(f"{root}: listed image {fname} is missing")
            images.append(load_image(p))
        return cls(table, np.stack(images), name=str(root))

    def batch(self, indices):
        """(images NCHW float32 in [-1,1], bits (N, n) uint8)."""
        imgs = normalize(self.images[indices])
        return np.ascontiguousarray(imgs.transpose(0, 3, 1, 2)), self.table.bits[indices]


def sample_pair_batches(table, i, batch_size, rng):
    """One (positive, negative) pair of index batches for attribute i.

    Uniform draws without replacement inside the call; deterministic under
    a seeded rng. The training loop uses EpochPairSampler instead, which
    additionally guarantees exact epoch coverage.
    """
    pos, neg = table.pools(i)
    name = table.attribute_names[i]
    if len(pos) == 0:
        raise DataError(f"attribute {name!r} has no positive examples")
    if len(neg) == 0:
        raise DataError(f"attribute {name!r} has no negative examples")
    batch_a = rng.choice(pos, size=batch_size, replace=len(pos) < batch_size)
    batch_b = rng.choice(neg, size=batch_size, replace=len(neg) < batch_size)
    return batch_a, batch_b


class EpochPairSampler:
    """Epoch-permutation sampler with integer cursors.

    Permutations are derived deterministically from (seed, attribute, pool,
    epoch) through SeedSequence spawn keys, so the whole data order is a
    pure function of the seed and two cursors, and checkpoint resume only
    has to persist the cursors. Pools cycle with reshuffling on exhaustion.
    """

    def __init__(self, table, i, batch_size, seed):
        self.pos, self.neg = table.pools(i)
        name = table.attribute_names[i]
        if len(self.pos) == 0:
            raise DataError(f"attribute {name!r} has no positive examples")
        if len(self.neg) == 0:
            raise DataError(f"attribute {name!r} has no negative examples")
        self.i = i
        self.batch_size = batch_size
        self.seed = seed
        self.pos_cursor = 0
        self.neg_cursor = 0
        self._perms = {}

    def _perm_rng(self, pool_id, epoch):
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.i, pool_id, epoch))
        return np.random.Generator(np.random.PCG64(ss))

    def _draw(self, pool, pool_id, cursor):
        size = len(pool)
        out = np.empty(self.batch_size, dtype=np.int64)
        for k in range(self.batch_size):
            epoch, offset = divmod(cursor, size)
            cached = self._perms.get(pool_id)
            if cached is None or cached[0] != epoch:
                perm = pool[self._perm_rng(pool_id, epoch).permutation(size)]
                cached = (epoch, perm)
                self._perms[pool_id] = cached
            out[k] = cached[1][offset]
            cursor += 1
        return out, cursor

    def next_batch(self):
        """(positive_indices, negative_indices), advancing both cursors."""
        batch_a, self.pos_cursor = self._draw(self.pos, 0, self.pos_cursor)
        batch_b, self.neg_cursor = self._draw(self.neg, 1, self.neg_cursor)
        return batch_a, batch_b

    def state(self):
        return {"pos_cursor": self.pos_cursor, "neg_cursor": self.neg_cursor}

    def load_state(self, state):
        self.pos_cursor = int(state["pos_cursor"])
        self.neg_cursor = int(state["neg_cursor"])
