"""Seeded synthetic images for the test suite.

Gradient + oriented gratings + smoothed noise, with correlated channels,
so patches look enough like natural image statistics for training and
scoring tests without shipping any image data.
"""

import numpy as np
from scipy.ndimage import gaussian_filter

from msunique.imageio import RgbImage


def natural_image(rng, height: int = 64, width: int = 64) -> RgbImage:
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    yy /= height
    xx /= width
    fx = rng.uniform(3.0, 9.0)
    fy = rng.uniform(2.0, 7.0)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    base = (
        0.45
        + 0.2 * xx
        + 0.18 * np.sin(2.0 * np.pi * fx * xx + phase) * np.cos(np.pi * fy * yy)
        + 0.22 * gaussian_filter(rng.standard_normal((height, width)), 1.5)
    )
    r = np.clip(base + 0.02 * rng.standard_normal((height, width)), 0.0, 1.0)
    g = np.clip(0.92 * base + 0.02 * rng.standard_normal((height, width)), 0.0, 1.0)
    b = np.clip(0.78 * base + 0.02 * rng.standard_normal((height, width)), 0.0, 1.0)
    return RgbImage(r, g, b)


def blurred(img: RgbImage, sigma: float) -> RgbImage:
    return RgbImage(
        *[np.clip(gaussian_filter(c, sigma), 0.0, 1.0) for c in (img.r, img.g, img.b)]
    )


def noisy(img: RgbImage, sigma: float, rng) -> RgbImage:
    return RgbImage(
        *[
            np.clip(c + sigma * rng.standard_normal(c.shape), 0.0, 1.0)
            for c in (img.r, img.g, img.b)
        ]
    )
