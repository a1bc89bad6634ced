"""Toolkit for motion-grounded video reasoning traces.

Parse and validate structured reasoning traces, derive discrete motion
descriptors from bounding-box tracks, score predictions with the full
trajectory-grounded reward stack, and densify sparse keyframe annotations
into motion-supervised training records.
"""

__version__ = "0.1.0"

from .trace import (
    Box,
    Direction,
    EvidenceItem,
    FormatReport,
    FreeText,
    MotionTag,
    ParseError,
    Scale,
    Speed,
    Trace,
    Violation,
    extract_motion_tags,
    extract_tracks,
    normalize_name,
    parse_trace,
    serialize_trace,
    validate_format,
)
from .motion import (
    MotionComputeError,
    MotionConfig,
    MotionDescriptor,
    Track,
    TrackTooShortError,
    ZeroDurationError,
    ZeroVectorError,
    bin_scale,
    bin_speed,
    box_area,
    box_diagonal,
    centroid,
    motion_descriptor,
    net_displacement,
    normalized_speed,
    quantize_direction,
    scale_log_ratio,
)
from .rewards import (
    GroundTruthRecord,
    ObjectKeyframes,
    RewardBreakdown,
    RewardConfig,
    VocabularyMismatchError,
    bin_match_score,
    iou,
    reward_accuracy,
    reward_format,
    reward_grounding,
    reward_spatial,
    reward_temporal,
    reward_trajectory,
    rouge_l_f1,
    score,
    score_detailed,
)
from .records import AnnotationRecord, SchemaError, read_records, write_records
from .augment import (
    DensifyConfig,
    augment_record,
    compute_descriptors,
    densify_track,
    inject_motion_tags,
    lerp_box,
)
from .synthetic import (
    InfeasibleSpecError,
    SyntheticSpec,
    generate_synthetic,
    reference_descriptor,
)
from .config import ToolkitConfig, config_digest, load_toolkit_config

__all__ = [name for name in dir() if not name.startswith("_")]
