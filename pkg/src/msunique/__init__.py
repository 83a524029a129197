"""Multi-model sharpness-weighted unsupervised image quality estimation.

The pipeline in one paragraph: image patches are moved into a YGCr
representation (BT.601 luma, the raw green channel, the Cr chroma plane),
decorrelated with ZCA whitening, and fed to several single-hidden-layer
linear decoders trained unsupervised with a KL sparsity penalty. Each
learned filter is classified as edge-like or color-like by the bias
corrected kurtosis of its weights; at scoring time the filter responses of
the non-overlapping tiles of a reference and a distorted image are weighted
by that classification, weak activations are suppressed, and the quality
score is the 10th power of the Spearman correlation between the two feature
vectors. An evaluation module implements the usual validation protocol
(logistic regression, PCC / SROCC / RMSE / outlier ratio, histogram
distances).
"""

from msunique.colorspace import YgcrImage, channel_cross_correlation, to_ygcr
from msunique.decoder import (
    DecoderModel,
    TrainingConfig,
    forward_responses,
    init_model,
    objective_and_gradient,
    reconstruct,
    train_decoder,
)
from msunique.evaluation import (
    EvaluationReport,
    HistogramDistances,
    RegressionFit,
    evaluate,
    export_scatter,
    fit_logistic,
    histogram_distances,
    outlier_ratio,
    pcc,
    rmse,
    srocc,
)
from msunique.filterbank import (
    BankFormatError,
    FilterBank,
    FilterKind,
    FilterLabel,
    classify_filters,
    export_filter_mosaic,
    kurtosis_bias_corrected,
    load_bank,
    save_bank,
    train_bank,
)
from msunique.imageio import (
    RgbImage,
    SubjectiveEntry,
    load_image,
    parse_manifest,
    save_ppm,
    write_manifest,
)
from msunique.patches import (
    PatchMatrix,
    WhiteningTransform,
    apply_whitening,
    extract_random_patches,
    extract_tiled_patches,
    fit_whitening,
)
from msunique.scoring import (
    FeatureVector,
    QualityRecord,
    image_features,
    quality_score,
    spearman,
    suppress,
)

__version__ = "0.1.0"

__all__ = [
    "BankFormatError",
    "DecoderModel",
    "EvaluationReport",
    "FeatureVector",
    "FilterBank",
    "FilterKind",
    "FilterLabel",
    "HistogramDistances",
    "PatchMatrix",
    "QualityRecord",
    "RegressionFit",
    "RgbImage",
    "SubjectiveEntry",
    "TrainingConfig",
    "WhiteningTransform",
    "YgcrImage",
    "apply_whitening",
    "channel_cross_correlation",
    "classify_filters",
    "evaluate",
    "export_filter_mosaic",
    "export_scatter",
    "extract_random_patches",
    "extract_tiled_patches",
    "fit_logistic",
    "fit_whitening",
    "forward_responses",
    "histogram_distances",
    "image_features",
    "init_model",
    "kurtosis_bias_corrected",
    "load_bank",
    "load_image",
    "objective_and_gradient",
    "outlier_ratio",
    "parse_manifest",
    "pcc",
    "quality_score",
    "reconstruct",
    "rmse",
    "save_bank",
    "save_ppm",
    "spearman",
    "srocc",
    "suppress",
    "to_ygcr",
    "train_bank",
    "train_decoder",
    "write_manifest",
]
