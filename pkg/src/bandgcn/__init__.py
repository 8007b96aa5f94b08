"""Frequency-band seizure detection on EEG montage graphs.

The pipeline: parse or synthesize multichannel EEG, band-pass each channel
into canonical frequency bands, cut 6 s windows labeled by seizure overlap,
extract 11 statistical features per one-second frame per channel, balance
classes by minority interpolation, and train a small graph convolutional
classifier over the 23-node bipolar montage graph, one model per band.
"""

from .balance import FeatureDataset, SmoteOversampler, knn_minority, smote
from .evaluate import (
    ConfusionMatrix,
    CvResult,
    MetricsReport,
    confusion,
    cross_validate,
    kfold_split,
    metrics,
    pr_auc,
    repeat_runs,
    roc_auc,
)
from .features import (
    FEATURE_NAMES,
    SegmentFeatureExtractor,
    extract_segment_features,
    hjorth,
    moments,
    shape_stats,
    spectral_entropy,
    window_features,
)
from .gcn import (
    GcnClassifier,
    GcnConfig,
    GcnParams,
    adam_step,
    backward,
    forward,
    forward_backward,
    init_params,
    load_checkpoint,
    loss,
    predict,
    save_checkpoint,
    train,
)
from .graphs import (
    MONTAGE_CHANNELS,
    EegGraph,
    Montage,
    adjacency_sha256,
    build_adjacency,
    build_montage_graph,
    normalize,
    validate,
)
from .pipeline import (
    ConfigError,
    DataError,
    ExperimentConfig,
    InvariantError,
    SynthesisParams,
    load_config,
    run_experiment,
    run_full,
    write_run_outputs,
)
from .preprocess import (
    CANONICAL_BANDS,
    BandDefinition,
    WindowSegment,
    bandpass,
    extract_ictal_only,
    label_windows,
    segment,
)
from .signal_io import (
    AnnotationError,
    ChannelLabel,
    EdfParseError,
    Recording,
    SeizureAnnotation,
    SynthesisSpec,
    load_annotations,
    parse_edf,
    read_edf,
    synthesize_recording,
    write_edf,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotationError",
    "BandDefinition",
    "CANONICAL_BANDS",
    "ChannelLabel",
    "ConfigError",
    "ConfusionMatrix",
    "CvResult",
    "DataError",
    "EdfParseError",
    "EegGraph",
    "ExperimentConfig",
    "FEATURE_NAMES",
    "FeatureDataset",
    "GcnClassifier",
    "GcnConfig",
    "GcnParams",
    "InvariantError",
    "MetricsReport",
    "MONTAGE_CHANNELS",
    "Montage",
    "Recording",
    "SegmentFeatureExtractor",
    "SeizureAnnotation",
    "SmoteOversampler",
    "SynthesisParams",
    "SynthesisSpec",
    "WindowSegment",
    "adam_step",
    "adjacency_sha256",
    "backward",
    "bandpass",
    "build_adjacency",
    "build_montage_graph",
    "confusion",
    "cross_validate",
    "extract_ictal_only",
    "extract_segment_features",
    "forward",
    "forward_backward",
    "hjorth",
    "init_params",
    "kfold_split",
    "knn_minority",
    "label_windows",
    "load_annotations",
    "load_checkpoint",
    "load_config",
    "loss",
    "metrics",
    "moments",
    "normalize",
    "parse_edf",
    "pr_auc",
    "predict",
    "read_edf",
    "repeat_runs",
    "roc_auc",
    "run_experiment",
    "run_full",
    "save_checkpoint",
    "segment",
    "shape_stats",
    "smote",
    "spectral_entropy",
    "synthesize_recording",
    "train",
    "validate",
    "window_features",
    "write_edf",
    "write_run_outputs",
]
