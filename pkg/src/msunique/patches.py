"""Patch matrix extraction and ZCA whitening.

Patches are p x p x 3 blocks of a YGCr image, vectorized into columns of a
(3 p^2) x n matrix. The vectorization order is fixed and is part of the
model bank file format: Y-plane samples in row-major order, then G, then
Cr. Training uses random patch positions; scoring uses the non-overlapping
raster tiling.

Whitening statistics are fit once on the training patch matrix and then
reused, frozen, for every image at scoring time; refitting per image would
make feature vectors incomparable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from msunique.colorspace import YgcrImage

__all__ = [
    "PatchMatrix",
    "WhiteningTransform",
    "extract_random_patches",
    "extract_tiled_patches",
    "fit_whitening",
    "apply_whitening",
]

# covariance eigenvalues below this are treated as exactly zero
RANK_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class PatchMatrix:
    """Vectorized image patches, one patch per column."""

    patch_side: int
    data: np.ndarray  # (3 * patch_side**2, count) float64

    def __post_init__(self):
        if self.patch_side < 1:
            raise ValueError("patch side must be positive")
        if self.data.ndim != 2 or self.data.shape[0] != 3 * self.patch_side**2:
            raise ValueError("patch matrix must have 3*p*p rows")

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @property
    def count(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True, eq=False)
class WhiteningTransform:
    """Frozen ZCA whitening statistics: x -> zca @ (x - mean).

    zca = U (L + eps I)^(-1/2) U^T for the eigendecomposition U L U^T of
    the centered-data covariance, which makes it symmetric (the property
    that distinguishes ZCA from other whitenings).
    """

    mean: np.ndarray  # (dim,)
    zca: np.ndarray  # (dim, dim), symmetric
    epsilon: float

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def _plane_windows(plane: np.ndarray, rows, cols, p: int) -> np.ndarray:
    wins = sliding_window_view(plane, (p, p))
    return wins[rows, cols].reshape(len(rows), p * p)


def extract_random_patches(
    img: YgcrImage, count: int, patch_side: int, rng: np.random.Generator
) -> PatchMatrix:
    """Extract `count` random patches, corners uniform over valid positions.

    Deterministic given the generator state: the same seeded rng yields a
    bit-identical matrix.
    """
    p = patch_side
    if count < 1:
        raise ValueError("count must be positive")
    if img.height < p or img.width < p:
        raise ValueError(f"image {img.height}x{img.width} smaller than patch side {p}")
    rows = rng.integers(0, img.height - p + 1, size=count)
    cols = rng.integers(0, img.width - p + 1, size=count)
    data = np.concatenate(
        [_plane_windows(plane, rows, cols, p) for plane in (img.y, img.g, img.cr)],
        axis=1,
    ).T
    return PatchMatrix(p, np.ascontiguousarray(data, dtype=np.float64))


def extract_tiled_patches(img: YgcrImage, patch_side: int) -> PatchMatrix:
    """Tile the image with non-overlapping patches in raster order.

    The image is cropped to floor multiples of the patch side; tiles run
    left to right, then top to bottom. Columns reassembled in the same
    order reproduce the cropped image exactly.
    """
    p = patch_side
    if img.height < p or img.width < p:
        raise ValueError(f"image {img.height}x{img.width} smaller than patch side {p}")
    th, tw = img.height // p, img.width // p

    def tiles(plane):
        cropped = plane[: th * p, : tw * p]
        return (
            cropped.reshape(th, p, tw, p).swapaxes(1, 2).reshape(th * tw, p * p)
        )

    data = np.concatenate([tiles(pl) for pl in (img.y, img.g, img.cr)], axis=1).T
    return PatchMatrix(p, np.ascontiguousarray(data, dtype=np.float64))


def fit_whitening(patches: PatchMatrix, epsilon: float) -> WhiteningTransform:
    """Fit ZCA whitening on a patch matrix.

    The covariance of the centered columns (normalized by the patch count)
    is eigendecomposed; eigenvalues are clamped at >= 0 and those below
    RANK_TOLERANCE are treated as exactly zero, relying on epsilon for
    invertibility. A rank-deficient covariance with epsilon == 0 is an
    error rather than a silently exploding direction.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    if patches.count < 2:
        raise ValueError("need at least 2 patches to fit whitening")
    x = patches.data
    mean = x.mean(axis=1)
    centered = x - mean[:, None]
    cov = (centered @ centered.T) / patches.count
    cov = 0.5 * (cov + cov.T)
    evals, evecs = np.linalg.eigh(cov)
    evals = np.where(evals < RANK_TOLERANCE, 0.0, evals)
    if epsilon == 0.0 and evals.min() == 0.0:
        raise ValueError(
            "rank-deficient covariance with epsilon = 0; use a positive epsilon"
        )
    zca = (evecs / np.sqrt(evals + epsilon)) @ evecs.T
    zca = 0.5 * (zca + zca.T)
    return WhiteningTransform(mean, zca, float(epsilon))


def apply_whitening(w: WhiteningTransform, patches: PatchMatrix) -> PatchMatrix:
    """Replace each column x by zca @ (x - mean)."""
    if patches.dim != w.dim:
        raise ValueError(f"dimension mismatch: patches {patches.dim}, whitening {w.dim}")
    return PatchMatrix(patches.patch_side, w.zca @ (patches.data - w.mean[:, None]))
