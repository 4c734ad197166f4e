"""Reward bindings for ML training loops.

Thin, stateless wrappers over the vrt-eval core so a trainer can score
rollouts without touching core types: masks go in as dense boolean
arrays (zero-copy) or RLE JSON objects, ground truth as a manifest-style
mapping or a core Sample, and results come back as plain dicts and
floats. Every function here is numerically identical to the core
implementation on the same inputs.
"""

from __future__ import annotations

from vrt_eval import PredictionRecord, RunConfig, parse_model_output, score_sample
from vrt_eval import matching_iou_reward as _core_iou_reward
from vrt_eval import total_reward as _core_total_reward
from vrt_eval.errors import VrtEvalError

from ._ingest import BridgeConversionError, as_mask, as_masks, as_sample, to_dense

__all__ = [
    "BridgeConversionError",
    "as_mask",
    "as_masks",
    "as_sample",
    "to_dense",
    "total_reward",
    "iou_reward",
    "format_rewards",
    "evaluate_sample",
]

__version__ = "0.1.0"


def total_reward(raw_text, masks, gt, lam: float = 0.1,
                 gt_scope: str = "answer_only") -> dict:
    """Full reward breakdown for one rollout as a flat record.

    ``masks`` are the rollout's emitted masks in generation order, one
    per [SEG] token in ``raw_text``.
    """
    parsed = parse_model_output(raw_text, as_masks(masks))
    sample = as_sample(gt)
    breakdown = _core_total_reward(parsed, sample, lam=lam, gt_scope=gt_scope)
    return breakdown.to_record()


def iou_reward(pred_masks, gt_masks, lam: float = 0.1) -> float:
    """Matching-based IoU reward over two mask sets (any accepted form)."""
    return _core_iou_reward(as_masks(pred_masks), as_masks(gt_masks), lam=lam)


def format_rewards(raw_text, masks) -> dict:
    """Both binary format rewards: ``{"format_think": 0|1, "format_seg": 0|1}``."""
    parsed = parse_model_output(raw_text, as_masks(masks))
    return {
        "format_think": 1 if parsed.thinking_format_ok else 0,
        "format_seg": 1 if parsed.answer_segmented else 0,
    }


def evaluate_sample(raw_text, masks, gt, tau: float = 0.5,
                    mode: str = "mask") -> dict:
    """Metric-side scores for one sample, as the core evaluator computes them."""
    sample = as_sample(gt)
    try:
        record = PredictionRecord(id=sample.id, raw_text=raw_text,
                                  masks=tuple(as_masks(masks)))
    except VrtEvalError as err:
        raise BridgeConversionError(f"bad prediction masks: {err}") from err
    score = score_sample(sample, record, RunConfig(tau=tau, mode=mode))
    return {
        "id": score.id,
        "lq": score.lq,
        "matched_count": score.matched_count,
        "gt_count": score.gt_count,
        "matched_ious": list(score.matched_ious),
        "answer_iou": score.answer_iou,
        "flags": list(score.flags),
    }
