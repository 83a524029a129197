"""Shared helpers for the demo scripts: seeded synthetic images.

Gradient + oriented gratings + smoothed noise with correlated channels,
so the demos run end to end without shipping any image data.
"""

from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from msunique.imageio import RgbImage

OUTPUT_DIR = Path(__file__).resolve().parent.parent / "demo_output"


def make_image(rng, height: int = 96, width: int = 96) -> RgbImage:
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


def blur(img: RgbImage, sigma: float) -> RgbImage:
    return RgbImage(
        *[np.clip(gaussian_filter(c, sigma), 0.0, 1.0) for c in (img.r, img.g, img.b)]
    )


def add_noise(img: RgbImage, sigma: float, rng) -> RgbImage:
    return RgbImage(
        *[
            np.clip(c + sigma * rng.standard_normal(c.shape), 0.0, 1.0)
            for c in (img.r, img.g, img.b)
        ]
    )


def output_dir() -> Path:
    OUTPUT_DIR.mkdir(exist_ok=True)
    return OUTPUT_DIR
