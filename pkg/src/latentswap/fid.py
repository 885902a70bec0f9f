"""Fréchet distance between Gaussian fits of image feature distributions.

d^2 = ||mu_1 - mu_2||^2 + Tr(C_1 + C_2 - 2 (C_1 C_2)^{1/2})

The matrix square root is taken by eigendecomposition of the symmetrized
product (C_1 C_2 + C_2 C_1) / 2 with negative eigenvalues clipped to zero.
Inputs must be positive semidefinite within tolerance (checked, loud
failure otherwise), and the square root must reconstruct its clipped
target within tolerance. Feature extraction is pluggable; the default
desk-scale extractor is a fixed seeded random projection of
8x8-downsampled pixels, deterministic and dependency-free. An
inception-style extractor can be registered for externally comparable
numbers, which are explicitly not a target here.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, NumericsError

SQRT_RESIDUAL_RTOL = 1e-4


@dataclass
class GaussianStats:
    mu: np.ndarray
    cov: np.ndarray
    count: int

    def __post_init__(self):
        if self.cov.shape != (self.mu.size, self.mu.size):
            raise ContractError(
                f"covariance shape {self.cov.shape} does not match mean dimension {self.mu.size}"
            )
        asym = float(np.abs(self.cov - self.cov.T).max()) if self.cov.size else 0.0
        if asym > 1e-6:
            raise ContractError(f"covariance asymmetric beyond tolerance: {asym}")
        if self.count < 2:
            raise ContractError("GaussianStats needs count >= 2")


def gaussian_stats(features):
    """Sample mean and unbiased covariance, covariance symmetrized."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] < 2:
        raise ContractError(
            f"need a (m, d) feature matrix with m >= 2, got shape {features.shape}"
        )
    mu = features.mean(axis=0)
    centered = features - mu
    cov = centered.T @ centered / (features.shape[0] - 1)
    cov = (cov + cov.T) / 2.0
    return GaussianStats(mu, cov, features.shape[0])


def _require_psd(cov, which):
    eigs = np.linalg.eigvalsh(cov)
    floor = -SQRT_RESIDUAL_RTOL * max(float(eigs[-1]), 1e-30)
    if eigs[0] < floor:
        raise NumericsError(
            f"{which} covariance is not positive semidefinite within tolerance "
            f"(smallest eigenvalue {eigs[0]:.3e})"
        )


def fid(s1, s2):
    """Squared Fréchet distance between two Gaussian fits; symmetric in its args.

    Sample covariances of two finite sets never commute exactly, so the
    symmetrized product routinely carries small negative eigenvalues; the
    clipping absorbs them. What must hold is (a) the input covariances are
    PSD within tolerance and (b) the eigendecomposition square root
    reconstructs its clipped target to within 1e-4 of ||C1 C2||.
    """
    if s1.mu.size != s2.mu.size:
        raise ContractError(f"dimension mismatch: {s1.mu.size} vs {s2.mu.size}")
    _require_psd(s1.cov, "first")
    _require_psd(s2.cov, "second")
    diff = s1.mu - s2.mu
    mean_term = float(diff @ diff)
    prod = s1.cov @ s2.cov
    sym = (prod + prod.T) / 2.0
    eigvals, vecs = np.linalg.eigh(sym)
    clipped = np.clip(eigvals, 0.0, None)
    root = (vecs * np.sqrt(clipped)) @ vecs.T
    target = (vecs * clipped) @ vecs.T
    residual = float(np.linalg.norm(root @ root - target))
    norm = float(np.linalg.norm(prod))
    if norm > 0 and residual > SQRT_RESIDUAL_RTOL * norm:
        raise NumericsError(
            f"matrix square root residual {residual:.3e} exceeds "
            f"{SQRT_RESIDUAL_RTOL:.0e} * ||C1 C2|| = {SQRT_RESIDUAL_RTOL * norm:.3e}"
        )
    trace_term = float(np.trace(s1.cov) + np.trace(s2.cov) - 2.0 * np.sqrt(clipped).sum())
    return max(mean_term + trace_term, 0.0)


@dataclass(frozen=True)
class FeatureExtractor:
    """Deterministic map from an HWC image in [-1, 1] to a d-vector."""

    name: str
    dim: int
    fn: object

    def __call__(self, image):
        out = np.asarray(self.fn(np.asarray(image)), dtype=np.float64)
        if out.shape != (self.dim,):
            raise ContractError(
                f"extractor {self.name} produced shape {out.shape}, expected ({self.dim},)"
            )
        return out


def _downsample_to(image, target):
    h = image.shape[0]
    if h % target:
        raise ContractError(f"image size {h} not divisible by extractor patch {target}")
    f = h // target
    return image.reshape(target, f, target, f, 3).mean(axis=(1, 3))


def make_projection_extractor(dim=16, patch=8, seed=71):
    """Fixed seeded random projection of downsampled pixels.

    Keep the feature dimension well below the sample counts you feed to
    gaussian_stats: covariances estimated from too few samples make the
    symmetrized product indefinite enough to trip the fid() guard.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    w = rng.standard_normal((dim, patch * patch * 3)) / np.sqrt(patch * patch * 3)

    def fn(image):
        return w @ _downsample_to(image.astype(np.float64), patch).ravel()

    return FeatureExtractor(name=f"proj{dim}-p{patch}", dim=dim, fn=fn)


_REGISTRY = {}


def register_extractor(name, factory):
    _REGISTRY[name] = factory


def get_extractor(name="default"):
    if name in _REGISTRY:
        return _REGISTRY[name]()
    raise ContractError(f"unknown feature extractor {name!r}; registered: {sorted(_REGISTRY)}")


register_extractor("default", make_projection_extractor)


def features_of(images, extractor):
    """Stack extractor outputs over an iterable of HWC images."""
    return np.stack([extractor(img) for img in images])
