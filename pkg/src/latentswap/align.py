"""5-point landmark alignment: similarity solve + bilinear crop.

The five landmarks (left eye, right eye, nose, left mouth corner, right
mouth corner) are mapped by a least-squares similarity transform
(rotation + uniform scale + translation, no shear, no reflection) onto a
canonical template, and the image is resampled bilinearly with edge
replication. The template is the widely used five-point layout defined on
a 112x96 crop, shifted to center horizontally in a square and rescaled to
the requested output size.
"""

from dataclasses import dataclass

import numpy as np

from .errors import AlignmentError, ShapeError
from .kernels import warp_bilinear

# (x, y) on the reference 112x96 crop: eyes, nose, mouth corners
_TEMPLATE_112x96 = np.array(
    [
        [30.2946, 51.6963],
        [65.5318, 51.5014],
        [48.0252, 71.7366],
        [33.5493, 92.3655],
        [62.7299, 92.2041],
    ],
    dtype=np.float64,
)


@dataclass(frozen=True)
class LandmarkSet:
    """Five (x, y) pixel positions: eyes, nose, mouth corners."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.shape != (5, 2):
            raise ShapeError(f"landmarks must be (5, 2), got {pts.shape}")
        object.__setattr__(self, "points", pts)


def canonical_template(output_size):
    """Template coordinates scaled to a square output of the given size."""
    pts = _TEMPLATE_112x96.copy()
    pts[:, 0] += (112.0 - 96.0) / 2.0  # center the 96-wide layout in a square
    return pts * (output_size / 112.0)


def similarity_transform(src, dst):
    """Least-squares similarity mapping src points onto dst points.

    Returns (scale, rotation 2x2 with det +1, src centroid, dst centroid,
    rms residual). The transform is T(x) = scale * R @ (x - mu_src) + mu_dst.
    """
    src = np.asarray(src, dtype=np.float64)
    dst = np.asarray(dst, dtype=np.float64)
    if src.shape != dst.shape or src.ndim != 2 or src.shape[1] != 2:
        raise ShapeError(f"point sets must both be (k, 2), got {src.shape} and {dst.shape}")
    mu_s = src.mean(axis=0)
    mu_d = dst.mean(axis=0)
    xs = src - mu_s
    xd = dst - mu_d
    var_s = float((xs * xs).sum()) / len(src)
    if var_s <= 0.0:
        raise AlignmentError("landmarks are coincident; no similarity transform exists")
    cov = xd.T @ xs / len(src)
    u, s, vt = np.linalg.svd(cov)
    if s[1] <= 1e-9 * max(s[0], 1.0):
        raise AlignmentError("landmarks are collinear; similarity transform is degenerate")
    d = np.ones(2)
    if np.linalg.det(u) * np.linalg.det(vt) < 0:
        d[1] = -1.0
    rot = u @ np.diag(d) @ vt
    scale = float((s * d).sum()) / var_s
    fitted = scale * xs @ rot.T + mu_d
    residual = float(np.sqrt(np.mean(np.sum((fitted - dst) ** 2, axis=1))))
    return scale, rot, mu_s, mu_d, residual


def align_and_crop(image, landmarks, output_size):
    """Aligned square crop in [-1, 1] floats.

    `image` may be uint8 RGB or an already-normalized float array. Samples
    outside the source are filled by edge replication. Returns (crop,
    rms_residual of the landmark fit).
    """
    if isinstance(landmarks, LandmarkSet):
        pts = landmarks.points
    else:
        pts = LandmarkSet(np.asarray(landmarks)).points
    image = np.asarray(image)
    if image.dtype == np.uint8:
        from .data import normalize

        image = normalize(image)
    image = np.ascontiguousarray(image, dtype=np.float32)

    template = canonical_template(output_size)
    scale, rot, mu_s, mu_d, residual = similarity_transform(pts, template)
    # inverse map: output pixel p -> source coordinate R^T/s (p - mu_d) + mu_s
    lin = rot.T / scale
    crop = warp_bilinear(image, lin, mu_d, mu_s, output_size, output_size)
    return crop, residual


def parse_landmark_file(stream):
    """Parse the 5-landmark annotation format: count, header, rows of 10 ints.

    Returns {filename: (5, 2) float array of (x, y)}.
    """
    from pathlib import Path

    from .errors import AttributeFileParseError

    if isinstance(stream, (str, Path)):
        stream = Path(stream).read_text().splitlines()
    lines = [ln.rstrip("\n") for ln in stream]
    if not lines:
        raise AttributeFileParseError("empty landmark file", 1)
    try:
        declared = int(lines[0].strip())
    except ValueError:
        raise AttributeFileParseError(f"expected a count, got {lines[0]!r}", 1) from None
    out = {}
    for lineno, line in enumerate(lines[2:], start=3):
        if not line.strip():
            continue
        fields = line.split()
        if len(fields) != 11:
            raise AttributeFileParseError(
                f"expected filename + 10 coordinates, got {len(fields)} fields", lineno
            )
        try:
            vals = [float(v) for v in fields[1:]]
        except ValueError:
            raise AttributeFileParseError("non-numeric landmark coordinate", lineno) from None
        out[fields[0]] = np.asarray(vals, dtype=np.float64).reshape(5, 2)
    if len(out) != declared:
        raise AttributeFileParseError(
            f"declared {declared} rows but found {len(out)}", len(lines)
        )
    return out
