"""Evaluation engine and RL reward kernel for object-grounded reasoning traces."""

from .benchmark import (
    CATEGORIES,
    AnswerObject,
    Benchmark,
    CategoryCounts,
    GtAnswer,
    PredictionRecord,
    Sample,
    TraceObject,
    load_manifest,
    load_predictions,
    sample_from_record,
)
from .errors import (
    EmptyMaskError,
    MalformedRleError,
    ManifestError,
    PredictionError,
    ReportError,
    SegAlignmentError,
    ShapeMismatchError,
    TagGrammarError,
    VrtEvalError,
)
from .evaluate import (
    EvaluationResult,
    RunConfig,
    emit_report,
    evaluate_benchmark,
    evaluate_predictions,
    score_sample,
)
from .masks import (
    BinaryMask,
    Box,
    RleCounts,
    box_iou,
    decode_rle,
    dedup_masks,
    encode_rle,
    iou,
    iou_flagged,
    tight_box,
)
from .matching import Assignment, MatchResult, apply_threshold, greedy_match, hungarian_match
from .metrics import (
    MetricsReport,
    ReportCell,
    SampleScore,
    aggregate,
    answer_score,
    logic_quality,
    trace_match,
    visual_quality,
)
from .parsing import ObjectTag, ParsedOutput, parse_model_output, parse_object_tags
from .rewards import (
    GroupRewards,
    RewardBreakdown,
    format_reward_seg,
    format_reward_thinking,
    matching_iou_reward,
    reward_variance_filter,
    total_reward,
)

__version__ = "0.1.0"
