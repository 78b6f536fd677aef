"""Training-free detection of AI-generated video from temporal dynamics.

Scores a clip by the sample standard deviation of the second-order
differences of its inter-frame embedding distances; generated clips move
more smoothly than real ones, so a low deviation ranks as generated.
"""

from .encoders import (
    EncoderConfig,
    EncoderKind,
    ExternalModelSession,
    encode,
    encode_batch,
    luminance_grid,
)
from .errors import (
    ConfigError,
    D3Error,
    DecodeError,
    DegenerateVectorError,
    EmptySourceError,
    EncoderNumericError,
    EntryError,
    FrameTooSmallError,
    ManifestError,
    ModelError,
    ShapeError,
    TooFewFramesError,
    UndefinedMetricError,
)
from .features import (
    DetectionScore,
    DistanceKind,
    EmbeddingSeries,
    FeatureOrder,
    ScalarSeries,
    d3_score,
    first_order_cosine,
    first_order_l2,
    second_order_diff,
    sigma_score,
)
from .frames import FrameSequence, SamplingPolicy, preprocess, sample_frames
from .harness import (
    DetectionRecord,
    DetectionRun,
    ManifestEntry,
    RunConfig,
    SweepResult,
    compute_series,
    config_digest,
    config_from_dict,
    config_to_dict,
    emit_report,
    evaluate,
    load_manifest,
    parse_scores,
    run_detection,
)
from .metrics import (
    EvalReport,
    ScoredLabel,
    SubsetMetrics,
    auroc,
    average_precision,
    evaluate_subsets,
)
from .robustness import (
    Perturbation,
    PerturbationKind,
    apply_perturbation,
    default_grid,
    degradation_rows,
    find_baseline,
    gaussian_kernel,
    grid_from_levels,
    sweep,
)
from .synth import (
    DynamicsParams,
    Trajectory,
    make_corpus,
    render_clip,
    simulate_second_order,
    smooth_clone,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "D3Error",
    "DecodeError",
    "DegenerateVectorError",
    "DetectionRecord",
    "DetectionRun",
    "DetectionScore",
    "DistanceKind",
    "DynamicsParams",
    "EmbeddingSeries",
    "EmptySourceError",
    "EncoderConfig",
    "EncoderKind",
    "EncoderNumericError",
    "EntryError",
    "EvalReport",
    "ExternalModelSession",
    "FeatureOrder",
    "FrameSequence",
    "FrameTooSmallError",
    "ManifestEntry",
    "ManifestError",
    "ModelError",
    "Perturbation",
    "PerturbationKind",
    "RunConfig",
    "SamplingPolicy",
    "ScalarSeries",
    "ScoredLabel",
    "ShapeError",
    "SubsetMetrics",
    "SweepResult",
    "TooFewFramesError",
    "Trajectory",
    "UndefinedMetricError",
    "apply_perturbation",
    "auroc",
    "average_precision",
    "compute_series",
    "config_digest",
    "config_from_dict",
    "config_to_dict",
    "d3_score",
    "default_grid",
    "degradation_rows",
    "emit_report",
    "encode",
    "encode_batch",
    "evaluate",
    "evaluate_subsets",
    "find_baseline",
    "first_order_cosine",
    "first_order_l2",
    "gaussian_kernel",
    "grid_from_levels",
    "load_manifest",
    "luminance_grid",
    "make_corpus",
    "parse_scores",
    "preprocess",
    "render_clip",
    "run_detection",
    "sample_frames",
    "second_order_diff",
    "sigma_score",
    "simulate_second_order",
    "smooth_clone",
    "sweep",
]
