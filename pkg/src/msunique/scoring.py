"""Feature generation and the rank-correlation quality score.

An image is tiled into non-overlapping patches, whitened with the bank's
frozen transform, and filtered through every model. Each response is scaled
by its filter's sharpness weight (edge 2, neutral 1, color 0.5) and weak
responses are suppressed to exactly zero. Reference and distorted feature
vectors are compared with the tenth power of their Spearman correlation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from msunique.colorspace import to_ygcr
from msunique.decoder import forward_responses
from msunique.filterbank import FilterBank
from msunique.imageio import RgbImage
from msunique.patches import apply_whitening, extract_tiled_patches

__all__ = [
    "FeatureVector",
    "QualityRecord",
    "image_features",
    "suppress",
    "spearman",
    "quality_score",
]

SCORE_EXPONENT = 10


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """Weighted filter responses for one image.

    `values` is patch-major: all filters for patch 0 (models in ascending
    width order, filters in column order within a model), then patch 1, and
    so on. `filter_weights` holds the per-filter weights for one patch
    block, so the unweighted response behind any entry is recoverable.
    """

    values: np.ndarray  # (patch_count * sum of hidden widths,)
    filter_weights: np.ndarray  # (sum of hidden widths,)
    patch_count: int
    suppressed: bool

    def __post_init__(self):
        if self.values.size != self.patch_count * self.filter_weights.size:
            raise ValueError("feature length must be patch_count * filter count")


@dataclass(frozen=True)
class QualityRecord:
    reference_id: str
    distorted_id: str
    spearman_rho: float
    score: float


def _filter_weights(bank: FilterBank) -> np.ndarray:
    return np.array(
        [label.weight for labels in bank.labels for label in labels], dtype=np.float64
    )


def image_features(bank: FilterBank, img) -> FeatureVector:
    """Compute the suppressed, sharpness-weighted feature vector of an image.

    The image is cut into non-overlapping patch_side tiles (edges that do
    not fill a tile are dropped), whitened with the transform frozen at
    training time, and pushed through every model's forward filters.
    """
    p = bank.patch_side
    if img.height < p or img.width < p:
        raise ValueError(f"image too small: need at least {p}x{p} pixels")
    tiles = extract_tiled_patches(img, p)
    whitened = apply_whitening(bank.whitening, tiles)
    # rows = patches, columns = filters in model order
    raw = np.concatenate(
        [forward_responses(m, whitened).T for m in bank.models], axis=1
    )
    weights = _filter_weights(bank)
    features = FeatureVector(
        values=(raw * weights).ravel(),
        filter_weights=weights,
        patch_count=tiles.count,
        suppressed=False,
    )
    return suppress(features, bank.suppression_tau)


def suppress(v: FeatureVector, tau: float) -> FeatureVector:
    """Zero every entry whose unweighted response falls below tau.

    Weights are powers of two, so comparing the weighted entry against
    tau * weight is exact and equivalent to comparing the raw sigmoid
    response against tau. Idempotent; tau = 0 is the identity.
    """
    if tau < 0:
        raise ValueError("suppression threshold must be non-negative")
    grid = v.values.reshape(v.patch_count, v.filter_weights.size).copy()
    grid[grid < tau * v.filter_weights] = 0.0
    return FeatureVector(grid.ravel(), v.filter_weights, v.patch_count, True)


def spearman(x, y) -> float:
    """Spearman rank correlation with average ranks for ties."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != y.size:
        raise ValueError("input vectors must have equal length")
    if x.size < 2:
        raise ValueError("need at least two samples")
    rx = rankdata(x)
    ry = rankdata(y)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    sx = float(dx @ dx)
    sy = float(dy @ dy)
    if sx == 0.0 or sy == 0.0:
        raise ValueError("zero rank variance")
    return float(np.clip((dx @ dy) / np.sqrt(sx * sy), -1.0, 1.0))


def quality_score(
    bank: FilterBank,
    ref: RgbImage,
    dist: RgbImage,
    reference_id: str = "",
    distorted_id: str = "",
) -> QualityRecord:
    """Full-reference quality of `dist` against `ref`.

    Both images are converted to YGCr, featurized through the bank, and
    compared by Spearman correlation; the reported score is rho ** 10, so
    an undistorted copy scores 1 and rank disagreement decays fast.
    """
    if (ref.height, ref.width) != (dist.height, dist.width):
        raise ValueError("dimension mismatch between the two images")
    f_ref = image_features(bank, to_ygcr(ref))
    f_dist = image_features(bank, to_ygcr(dist))
    rho = spearman(f_ref.values, f_dist.values)
    return QualityRecord(reference_id, distorted_id, rho, rho**SCORE_EXPONENT)
