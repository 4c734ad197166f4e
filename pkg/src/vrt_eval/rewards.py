"""Reward functions for reinforcement fine-tuning loops.

The total reward is a plain sum of three terms: a thinking-format reward
(think region before answer region, both well-formed), a segmentation
format reward (the answer actually emits [SEG]-bound masks), and a
matching-based IoU reward. The IoU term pairs predicted and ground-truth
masks greedily by highest IoU, averages the matched IoUs, and subtracts
``lam`` for every unmatched mask on either side, so it is order
invariant and penalizes both false positives and false negatives.

Everything here is a pure function with no caches or global state;
trainers may call at any frequency from any number of workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .benchmark import Sample
from .errors import ShapeMismatchError
from .masks import BinaryMask, iou
from .matching import Assignment, greedy_match
from .parsing import ParsedOutput

GT_SCOPES = ("answer_only", "joint")


@dataclass(frozen=True)
class RewardBreakdown:
    format_think: int
    format_seg: int
    iou_reward: float
    total: float
    matched_count: int
    unmatched_count: int

    def to_record(self) -> dict:
        """Flat JSON-ready record."""
        return {
            "format_think": self.format_think,
            "format_seg": self.format_seg,
            "iou_reward": self.iou_reward,
            "total": self.total,
            "matched_count": self.matched_count,
            "unmatched_count": self.unmatched_count,
        }


@dataclass(frozen=True)
class GroupRewards:
    """Total rewards of the N sampled candidates for one training sample."""

    id: str
    rewards: tuple[float, ...]

    def __post_init__(self):
        if len(self.rewards) < 2:
            raise ValueError(f"group {self.id}: needs >= 2 rewards for variance")

    @property
    def std(self) -> float:
        """Population (divide-by-N) standard deviation."""
        return float(np.std(np.asarray(self.rewards, dtype=float)))


def format_reward_thinking(parsed: ParsedOutput) -> int:
    """1 iff exactly one well-formed think region precedes one answer region."""
    return 1 if parsed.thinking_format_ok else 0


def format_reward_seg(parsed: ParsedOutput) -> int:
    """1 iff the answer region emits at least one [SEG]-bound mask."""
    return 1 if parsed.answer_segmented else 0


def _canonical_order(masks: list[BinaryMask]) -> list[int]:
    # Content-based order (area desc, then pixel bytes) so that greedy
    # tie-breaking cannot depend on the input permutation.
    return sorted(range(len(masks)), key=lambda i: masks[i].content_key())


def _match_masks(pred_masks, gt_masks) -> Assignment:
    preds = list(pred_masks)
    gts = list(gt_masks)
    for group in (preds, gts):
        for m in group[1:]:
            if m.shape != group[0].shape:
                raise ShapeMismatchError(f"mask shapes differ: {group[0].shape} vs {m.shape}")
    if preds and gts and preds[0].shape != gts[0].shape:
        raise ShapeMismatchError(
            f"prediction masks are {preds[0].shape}, ground truth {gts[0].shape}"
        )
    pred_order = _canonical_order(preds)
    gt_order = _canonical_order(gts)
    w = np.zeros((len(preds), len(gts)))
    for i, pi in enumerate(pred_order):
        for j, gj in enumerate(gt_order):
            w[i, j] = iou(preds[pi], gts[gj])
    return greedy_match(w)


def _iou_reward_detail(pred_masks, gt_masks, lam: float) -> tuple[float, int, int]:
    assignment = _match_masks(pred_masks, gt_masks)
    matched = len(assignment.pairs)
    unmatched = (assignment.n_pred - matched) + (assignment.n_gt - matched)
    mean = sum(w for _, _, w in assignment.pairs) / matched if matched else 0.0
    return mean - lam * unmatched, matched, unmatched


def matching_iou_reward(pred_masks, gt_masks, lam: float = 0.1) -> float:
    """Mean greedily-matched IoU minus ``lam`` per unmatched mask.

    Unmatched predictions are false positives and unmatched ground
    truths are false negatives; both cost ``lam``. The mean term is 0
    when nothing matches, so 1 pred and 1 gt with zero overlap score
    ``-2 * lam``. A perfect prediction of every gt object scores 1.0.
    """
    return _iou_reward_detail(pred_masks, gt_masks, lam)[0]


def total_reward(parsed: ParsedOutput, gt: Sample, lam: float = 0.1,
                 gt_scope: str = "answer_only") -> RewardBreakdown:
    """Sum of the two format rewards and the matching IoU reward.

    ``gt_scope`` picks the mask sets for the IoU term: ``answer_only``
    scores predicted answer masks against ground-truth answer objects
    (ground truth during RL carries answer objects only); ``joint`` adds
    the trace masks on both sides.
    """
    if gt_scope not in GT_SCOPES:
        raise ValueError(f"gt_scope must be one of {GT_SCOPES}, got {gt_scope!r}")
    ft = format_reward_thinking(parsed)
    fs = format_reward_seg(parsed)
    if gt_scope == "answer_only":
        preds = parsed.answer_masks
        gts = gt.answer_masks
    else:
        preds = parsed.trace_masks + parsed.answer_masks
        gts = gt.trace_masks + gt.answer_masks
    iou_r, matched, unmatched = _iou_reward_detail(preds, gts, lam)
    return RewardBreakdown(
        format_think=ft,
        format_seg=fs,
        iou_reward=iou_r,
        total=ft + fs + iou_r,
        matched_count=matched,
        unmatched_count=unmatched,
    )


def reward_variance_filter(groups, k: int) -> list[str]:
    """Ids of the k groups with the largest reward standard deviation.

    Ties break by id ascending; k beyond the population returns all ids.
    """
    groups = list(groups)
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    sizes = {len(g.rewards) for g in groups}
    if len(sizes) > 1:
        raise ValueError(f"groups must share one candidate count, got {sorted(sizes)}")
    ranked = sorted(groups, key=lambda g: (-g.std, g.id))
    return [g.id for g in ranked[:k]]
