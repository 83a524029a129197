"""Raster image loading and dataset manifest parsing.

Binary (P6) and ASCII (P3) PPM files are decoded natively; PNG is handled
through Pillow when it is installed. Images are always 8-bit, 3-channel,
and are scaled to [0, 1] floats on load (value v maps to v / 255).
Grayscale input is rejected: the rest of the pipeline is defined on
3-channel data.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "RgbImage",
    "SubjectiveEntry",
    "load_image",
    "save_ppm",
    "parse_manifest",
    "write_manifest",
]

MANIFEST_HEADER = ["dist_path", "ref_path", "score", "std"]

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
_WHITESPACE = b" \t\n\r\x0b\x0c"


@dataclass(frozen=True, eq=False)
class RgbImage:
    """An 8-bit-sourced RGB image as three float planes in [0, 1]."""

    r: np.ndarray
    g: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        for plane in (self.r, self.g, self.b):
            if plane.ndim != 2 or plane.shape != self.r.shape:
                raise ValueError("RGB planes must be 2-D and share dimensions")
            if plane.size == 0:
                raise ValueError("empty image")
            lo, hi = plane.min(), plane.max()
            if not (np.isfinite(lo) and np.isfinite(hi) and lo >= 0.0 and hi <= 1.0):
                raise ValueError("RGB samples must lie in [0, 1]")

    @property
    def height(self) -> int:
        return self.r.shape[0]

    @property
    def width(self) -> int:
        return self.r.shape[1]


@dataclass(frozen=True)
class SubjectiveEntry:
    """One manifest row: a distorted/reference pair with its subjective score."""

    dist_path: str
    ref_path: str
    score: float
    std: float | None = None

    def __post_init__(self):
        if not self.dist_path or not self.ref_path:
            raise ValueError("manifest paths must be non-empty")
        if self.std is not None and self.std < 0:
            raise ValueError("score std must be >= 0")


def load_image(path) -> RgbImage:
    """Decode a PPM (P6/P3) or PNG file into an RgbImage."""
    raw = Path(path).read_bytes()
    if raw[:2] in (b"P6", b"P3"):
        return _load_ppm(raw)
    if raw[: len(_PNG_SIGNATURE)] == _PNG_SIGNATURE:
        return _load_png(path)
    if raw[:2] in (b"P1", b"P2", b"P4", b"P5"):
        raise ValueError("grayscale/bitmap PNM input is rejected; 3-channel input required")
    raise ValueError(f"unsupported image format: {path}")


def _header_tokens(raw: bytes, start: int, count: int) -> tuple[list[bytes], int]:
    """Read `count` whitespace-separated header tokens, honoring # comments.

    Returns the tokens and the offset of the single whitespace byte that
    terminates the last token.
    """
    tokens: list[bytes] = []
    pos = start
    while len(tokens) < count:
        while pos < len(raw) and raw[pos : pos + 1] in _WHITESPACE:
            pos += 1
        if pos < len(raw) and raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos : pos + 1] != b"\n":
                pos += 1
            continue
        tok_start = pos
        while pos < len(raw) and raw[pos : pos + 1] not in _WHITESPACE:
            pos += 1
        if pos == tok_start:
            raise ValueError("malformed image header")
        tokens.append(raw[tok_start:pos])
    return tokens, pos


def _load_ppm(raw: bytes) -> RgbImage:
    magic = raw[:2]
    try:
        tokens, pos = _header_tokens(raw, 2, 3)
        width, height, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise ValueError(f"malformed image header: {exc}") from None
    if width <= 0 or height <= 0:
        raise ValueError("malformed image header: non-positive dimensions")
    if maxval > 255:
        raise ValueError("unsupported bit depth (more than 8 bits per channel)")
    if maxval != 255:
        raise ValueError(f"unsupported maxval {maxval}; only 255 is accepted")

    nsamples = width * height * 3
    if magic == b"P6":
        # exactly one whitespace byte separates the header from pixel data
        data = raw[pos + 1 : pos + 1 + nsamples]
        if len(data) < nsamples:
            raise ValueError("malformed image: truncated pixel data")
        arr = np.frombuffer(data, dtype=np.uint8).reshape(height, width, 3)
    else:
        try:
            tokens, _ = _header_tokens(raw, pos, nsamples)
        except ValueError:
            raise ValueError("malformed image: truncated pixel data") from None
        try:
            values = [int(t) for t in tokens]
        except ValueError:
            raise ValueError("malformed image: non-numeric sample") from None
        arr = np.array(values, dtype=np.int64).reshape(height, width, 3)
        if arr.min() < 0 or arr.max() > maxval:
            raise ValueError("malformed image: sample out of range")

    planes = arr.astype(np.float64) / 255.0
    return RgbImage(planes[:, :, 0], planes[:, :, 1], planes[:, :, 2])


def _load_png(path) -> RgbImage:
    try:
        from PIL import Image
    except ImportError:
        raise ValueError("PNG support requires Pillow (pip install Pillow)") from None
    with Image.open(path) as im:
        if im.mode != "RGB":
            raise ValueError(
                f"unsupported PNG mode {im.mode!r}; only 8-bit RGB is accepted"
            )
        arr = np.asarray(im, dtype=np.uint8)
    planes = arr.astype(np.float64) / 255.0
    return RgbImage(planes[:, :, 0], planes[:, :, 1], planes[:, :, 2])


def save_ppm(img: RgbImage, path) -> None:
    """Write an RgbImage as binary PPM (P6, maxval 255).

    Quantization to 8 bits happens here and only here, so an image loaded
    from an 8-bit source round-trips exactly.
    """
    stacked = np.stack([img.r, img.g, img.b], axis=-1)
    quantized = np.clip(np.rint(stacked * 255.0), 0, 255).astype(np.uint8)
    header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + quantized.tobytes())


def parse_manifest(path) -> list[SubjectiveEntry]:
    """Parse a dataset manifest CSV into SubjectiveEntry rows.

    The header must be exactly `dist_path,ref_path,score,std`; the std field
    may be empty. Relative paths are resolved against the manifest's
    directory.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != MANIFEST_HEADER:
        raise ValueError(
            "manifest missing header; expected 'dist_path,ref_path,score,std'"
        )
    base = path.parent
    entries = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 4:
            raise ValueError(f"manifest row {lineno}: expected 4 columns, got {len(row)}")
        dist, ref, score_s, std_s = (field.strip() for field in row)
        try:
            score = float(score_s)
        except ValueError:
            raise ValueError(f"manifest row {lineno}: non-numeric score {score_s!r}") from None
        if std_s == "":
            std = None
        else:
            try:
                std = float(std_s)
            except ValueError:
                raise ValueError(f"manifest row {lineno}: non-numeric std {std_s!r}") from None
        try:
            entries.append(
                SubjectiveEntry(_resolve(dist, base), _resolve(ref, base), score, std)
            )
        except ValueError as exc:
            raise ValueError(f"manifest row {lineno}: {exc}") from None
    return entries


def write_manifest(entries, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_HEADER)
        for e in entries:
            writer.writerow(
                [e.dist_path, e.ref_path, repr(e.score), "" if e.std is None else repr(e.std)]
            )


def _resolve(p: str, base: Path) -> str:
    if not p:
        return p
    candidate = Path(p)
    return p if candidate.is_absolute() else str(base / candidate)
