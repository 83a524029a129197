"""The multi-model filter bank: training, sharpness labels, persistence.

A bank holds one whitening transform plus several decoders of different
hidden widths trained on the same whitened patch matrix. Each learned
forward filter (a column of W1) is labeled by the bias-corrected kurtosis
of its weights: heavy-tailed filters capture edges and are up-weighted in
scoring, near-uniform filters capture color and are down-weighted.

Banks persist to a little-endian binary container ("MSUB", version 1) with
a CRC32 trailer; loading a saved bank reproduces every numeric field
bit-exactly.
"""

from __future__ import annotations

import enum
import struct
import zlib
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from msunique.decoder import DecoderModel, TrainingConfig, train_decoder
from msunique.imageio import RgbImage, save_ppm
from msunique.patches import (
    PatchMatrix,
    WhiteningTransform,
    apply_whitening,
    fit_whitening,
)

__all__ = [
    "FilterKind",
    "FilterLabel",
    "FilterBank",
    "BankFormatError",
    "DEFAULT_SIZES",
    "kurtosis_bias_corrected",
    "classify_filters",
    "train_bank",
    "save_bank",
    "load_bank",
    "export_filter_mosaic",
]

DEFAULT_SIZES = (81, 121, 169, 400, 625)
EDGE_THRESHOLD = 5.0
COLOR_THRESHOLD = 2.0
DEFAULT_EPSILON = 0.1
DEFAULT_SUPPRESSION_TAU = 0.025

_MAGIC = b"MSUB"
_VERSION = 1


class BankFormatError(Exception):
    """A model bank file is missing, corrupt, or of the wrong format."""


class FilterKind(enum.IntEnum):
    # values are the on-disk byte codes
    COLOR = 0
    NEUTRAL = 1
    EDGE = 2


_KIND_WEIGHT = {FilterKind.EDGE: 2.0, FilterKind.NEUTRAL: 1.0, FilterKind.COLOR: 0.5}


@dataclass(frozen=True)
class FilterLabel:
    kind: FilterKind
    kurtosis: float

    @property
    def weight(self) -> float:
        return _KIND_WEIGHT[self.kind]


@dataclass(frozen=True, eq=False)
class FilterBank:
    """A trained multi-model set plus everything needed to score images."""

    patch_side: int
    whitening: WhiteningTransform
    models: tuple[DecoderModel, ...]  # ascending hidden width
    labels: tuple[tuple[FilterLabel, ...], ...]  # one label per hidden unit
    config: TrainingConfig
    suppression_tau: float

    def __post_init__(self):
        widths = [m.hidden for m in self.models]
        if len(set(widths)) != len(widths):
            raise ValueError("models must have pairwise distinct hidden widths")
        if any(m.input_dim != 3 * self.patch_side**2 for m in self.models):
            raise ValueError("model input dim must equal 3 * patch_side^2")
        if len(self.labels) != len(self.models) or any(
            len(ls) != m.hidden for ls, m in zip(self.labels, self.models)
        ):
            raise ValueError("need one label per hidden unit per model")

    @property
    def total_filters(self) -> int:
        return sum(m.hidden for m in self.models)


def kurtosis_bias_corrected(x) -> float:
    """Bias-corrected sample kurtosis (Pearson convention, normal -> 3).

    With central moments m_q = mean((x - mean(x))^q) and k1 = m4 / m2^2,
    returns ((n+1) k1 - 3(n-1)) (n-1) / ((n-2)(n-3)) + 3. Requires n >= 4
    and nonzero variance.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    n = x.size
    if n < 4:
        raise ValueError("too few samples for bias-corrected kurtosis (need n >= 4)")
    dev = x - x.mean()
    m2 = float(np.mean(dev**2))
    if m2 == 0.0:
        raise ValueError("zero variance")
    k1 = float(np.mean(dev**4)) / (m2 * m2)
    return ((n + 1) * k1 - 3 * (n - 1)) * ((n - 1) / ((n - 2) * (n - 3))) + 3.0


def classify_filters(
    m: DecoderModel,
    edge_threshold: float = EDGE_THRESHOLD,
    color_threshold: float = COLOR_THRESHOLD,
) -> list[FilterLabel]:
    """Label every forward filter of a model as edge, color, or neutral.

    Each W1 column is zero-centered and scaled to unit L2 norm before its
    bias-corrected kurtosis is measured (kurtosis is scale-free, so the
    normalization is cosmetic but fixed for reproducibility). Kurtosis above
    the edge threshold labels an edge filter, below the color threshold a
    color filter; the unassigned gap in between is neutral with weight 1.
    A degenerate constant filter is neutral with kurtosis recorded as 0.
    """
    labels = []
    for j in range(m.hidden):
        v = m.w1[:, j]
        centered = v - v.mean()
        norm = float(np.sqrt(centered @ centered))
        if norm == 0.0:
            labels.append(FilterLabel(FilterKind.NEUTRAL, 0.0))
            continue
        k = kurtosis_bias_corrected(centered / norm)
        if k > edge_threshold:
            kind = FilterKind.EDGE
        elif k < color_threshold:
            kind = FilterKind.COLOR
        else:
            kind = FilterKind.NEUTRAL
        labels.append(FilterLabel(kind, k))
    return labels


def train_bank(
    patches: PatchMatrix,
    sizes: Sequence[int] = DEFAULT_SIZES,
    cfg: TrainingConfig | None = None,
    epsilon: float = DEFAULT_EPSILON,
    suppression_tau: float = DEFAULT_SUPPRESSION_TAU,
    on_iteration: Callable[[int, int, float], None] | None = None,
) -> FilterBank:
    """Fit whitening, then train one decoder per hidden width.

    All decoders see the same whitened matrix; the seed is offset by the
    model index so initializations differ across widths. `on_iteration(h,
    iteration, J)` streams per-epoch objective values.
    """
    sizes = tuple(sorted(int(s) for s in sizes))
    if not sizes:
        raise ValueError("need at least one model size")
    if len(set(sizes)) != len(sizes):
        raise ValueError("model sizes must be distinct")
    if sizes[0] < 1:
        raise ValueError("model sizes must be positive")
    cfg = cfg if cfg is not None else TrainingConfig()

    whitening = fit_whitening(patches, epsilon)
    whitened = apply_whitening(whitening, patches)

    models = []
    labels = []
    for index, h in enumerate(sizes):
        cb = None
        if on_iteration is not None:
            cb = lambda it, j, h=h: on_iteration(h, it, j)
        model = train_decoder(whitened, h, replace(cfg, seed=cfg.seed + index), cb)
        models.append(model)
        labels.append(tuple(classify_filters(model)))
    return FilterBank(
        patch_side=patches.patch_side,
        whitening=whitening,
        models=tuple(models),
        labels=tuple(labels),
        config=cfg,
        suppression_tau=float(suppression_tau),
    )


def _f64_bytes(arr: np.ndarray) -> bytes:
    return np.ascontiguousarray(arr, dtype="<f8").tobytes()


def _serialize(bank: FilterBank) -> bytes:
    cfg = bank.config
    out = bytearray()
    out += _MAGIC
    out += struct.pack("<I", _VERSION)
    out += struct.pack(
        "<IddddIqdI",
        bank.patch_side,
        bank.whitening.epsilon,
        cfg.rho,
        cfg.beta,
        cfg.lam,
        cfg.epochs,
        cfg.seed,
        bank.suppression_tau,
        len(bank.models),
    )
    out += struct.pack("<I", bank.whitening.dim)
    out += _f64_bytes(bank.whitening.mean)
    out += _f64_bytes(bank.whitening.zca)
    for model, labels in zip(bank.models, bank.labels):
        out += struct.pack("<I", model.hidden)
        out += _f64_bytes(model.w1)
        out += _f64_bytes(model.b1)
        out += _f64_bytes(model.w2)
        out += _f64_bytes(model.b2)
        out += bytes(int(lb.kind) for lb in labels)
        out += _f64_bytes(np.array([lb.kurtosis for lb in labels]))
    out += struct.pack("<I", zlib.crc32(bytes(out)))
    return bytes(out)


class _Reader:
    def __init__(self, buf: bytes, pos: int):
        self.buf = buf
        self.pos = pos

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise BankFormatError("truncated model bank file")
        chunk = self.buf[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def f64(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(8 * count), dtype="<f8").astype(np.float64)


def save_bank(bank: FilterBank, path) -> None:
    Path(path).write_bytes(_serialize(bank))


def load_bank(path) -> FilterBank:
    """Load a model bank, verifying structure and checksum.

    Raises BankFormatError for a wrong magic, an unsupported version, a
    truncated payload, or a CRC mismatch.
    """
    try:
        buf = Path(path).read_bytes()
    except OSError as exc:
        raise BankFormatError(f"cannot read model bank: {exc}") from None
    if len(buf) < 8 or buf[:4] != _MAGIC:
        raise BankFormatError("not a model bank")
    (version,) = struct.unpack("<I", buf[4:8])
    if version != _VERSION:
        raise BankFormatError(f"unsupported model bank version {version}")

    r = _Reader(buf, 8)
    p, epsilon, rho, beta, lam, epochs, seed, tau, model_count = r.unpack("<IddddIqdI")
    (dim,) = r.unpack("<I")
    mean = r.f64(dim)
    zca = r.f64(dim * dim).reshape(dim, dim)

    models = []
    labels = []
    for _ in range(model_count):
        (h,) = r.unpack("<I")
        w1 = r.f64(dim * h).reshape(dim, h)
        b1 = r.f64(h)
        w2 = r.f64(h * dim).reshape(h, dim)
        b2 = r.f64(dim)
        codes = r.take(h)
        kurtoses = r.f64(h)
        try:
            kinds = [FilterKind(c) for c in codes]
        except ValueError:
            raise BankFormatError("invalid filter label code") from None
        models.append(DecoderModel(w1, b1, w2, b2))
        labels.append(
            tuple(FilterLabel(kind, float(k)) for kind, k in zip(kinds, kurtoses))
        )

    if len(buf) - r.pos < 4:
        raise BankFormatError("truncated model bank file")
    if len(buf) - r.pos > 4:
        raise BankFormatError("trailing bytes after model bank payload")
    (stored_crc,) = struct.unpack("<I", buf[r.pos :])
    if stored_crc != zlib.crc32(buf[: r.pos]):
        raise BankFormatError("model bank checksum mismatch")

    try:
        return FilterBank(
            patch_side=p,
            whitening=WhiteningTransform(mean, zca, epsilon),
            models=tuple(models),
            labels=tuple(labels),
            config=TrainingConfig(rho=rho, beta=beta, lam=lam, epochs=epochs, seed=seed),
            suppression_tau=tau,
        )
    except ValueError as exc:
        raise BankFormatError(f"inconsistent model bank contents: {exc}") from None


def export_filter_mosaic(bank: FilterBank, model_index: int, path, kind: str = "all") -> int:
    """Write a PPM grid visualizing one model's forward filters.

    Each W1 column becomes a patch-side tile: the column is min-max
    normalized to [0, 1] (a constant column renders mid-gray) and its Y/G/Cr
    slices map to the output's R/G/B channels. Tiles are laid out in column
    order, ceil(sqrt(count)) per row; unused grid cells are mid-gray.
    `kind` restricts the export to "edge" or "color" filters. Returns the
    number of tiles written.
    """
    if kind not in ("all", "edge", "color"):
        raise ValueError("kind must be 'all', 'edge', or 'color'")
    model = bank.models[model_index]
    labels = bank.labels[model_index]
    wanted = {"edge": FilterKind.EDGE, "color": FilterKind.COLOR}.get(kind)
    selected = [
        j for j in range(model.hidden) if wanted is None or labels[j].kind == wanted
    ]
    if not selected:
        raise ValueError(f"model has no {kind} filters to export")

    p = bank.patch_side
    side = int(np.ceil(np.sqrt(len(selected))))
    canvas = np.full((side * p, side * p, 3), 0.5)
    for slot, j in enumerate(selected):
        col = model.w1[:, j]
        span = col.max() - col.min()
        tile = np.full(col.shape, 0.5) if span == 0 else (col - col.min()) / span
        planes = tile.reshape(3, p, p)
        r0 = (slot // side) * p
        c0 = (slot % side) * p
        for ch in range(3):
            canvas[r0 : r0 + p, c0 : c0 + p, ch] = planes[ch]
    save_ppm(RgbImage(canvas[:, :, 0], canvas[:, :, 1], canvas[:, :, 2]), path)
    return len(selected)
