"""Per-sample trace scoring and benchmark-level aggregation.

Three numbers per sample: logic quality (fraction of ground-truth trace
objects recovered by matched predictions), the matched IoUs feeding the
pooled visual-quality average, and the answer score (mean IoU of
predicted vs ground-truth answer objects). Aggregation produces one
report cell per category plus Overall, as percentages rounded half away
from zero to one decimal.

Per-sample scoring is independent across samples; aggregation pools
counts and sums, so it is order-independent.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from .benchmark import CATEGORIES, Sample
from .errors import ReportError, ShapeMismatchError
from .masks import BinaryMask, box_iou, iou, tight_box
from .matching import MatchResult, apply_threshold, hungarian_match
from .parsing import ParsedOutput

MODES = ("mask", "box")


def _pair_weight(pred: BinaryMask, gt: BinaryMask, mode: str) -> float:
    if mode == "mask":
        return iou(pred, gt)
    if pred.is_empty() or gt.is_empty():
        return 0.0
    return box_iou(tight_box(pred), tight_box(gt))


def _weight_matrix(preds, gts, mode: str) -> np.ndarray:
    w = np.zeros((len(preds), len(gts)))
    for i, p in enumerate(preds):
        for j, g in enumerate(gts):
            w[i, j] = _pair_weight(p, g, mode)
    return w


def trace_match(pred: ParsedOutput, gt: Sample, tau: float = 0.5,
                mode: str = "mask") -> MatchResult:
    """Optimally pair predicted trace masks with ground-truth trace masks.

    Box mode converts both sides to tight boxes before scoring overlap.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    shape = (gt.image_h, gt.image_w)
    for m in pred.trace_masks:
        if m.shape != shape:
            raise ShapeMismatchError(
                f"sample {gt.id}: predicted mask is {m.shape}, image is {shape}"
            )
    w = _weight_matrix(pred.trace_masks, gt.trace_masks, mode)
    return apply_threshold(hungarian_match(w), tau)


def logic_quality(match: MatchResult, gt_count: int) -> float:
    """Fraction of ground-truth trace objects recovered: |matched| / gt_count."""
    if gt_count < 1:
        raise ValueError("gt_count must be >= 1 (benchmark forbids empty traces)")
    return len(match.matched) / gt_count


def visual_quality(matched_ious) -> float:
    """Mean IoU over matched trace objects; 0.0 when nothing matched."""
    ious = list(matched_ious)
    if not ious:
        return 0.0
    return sum(ious) / len(ious)


def answer_score(pred_masks, gt_masks, mode: str = "mask") -> float:
    """Mean IoU between predicted and ground-truth answer objects.

    A single gt object scores its plain IoU. Multiple objects are paired
    optimally with no threshold; unmatched gt objects contribute 0, so
    the denominator is always the gt object count. An empty prediction
    set scores 0.0 (the caller flags it).
    """
    gts = list(gt_masks)
    if not gts:
        raise ValueError("gt_masks may not be empty")
    preds = list(pred_masks)
    if not preds:
        return 0.0
    shape = gts[0].shape
    for m in preds:
        if m.shape != shape:
            raise ShapeMismatchError(f"predicted mask is {m.shape}, expected {shape}")
    assignment = hungarian_match(_weight_matrix(preds, gts, mode))
    return sum(w for _, _, w in assignment.pairs) / len(gts)


@dataclass(frozen=True)
class SampleScore:
    """Scores for one sample, plus the categories it aggregates into."""

    id: str
    matched_count: int
    gt_count: int
    matched_ious: tuple[float, ...]
    lq: float
    answer_iou: float
    categories: frozenset[str]
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class ReportCell:
    r_lq: float
    r_vq: float
    a: float
    n_samples: int

    def to_json(self) -> dict:
        return {"r_lq": self.r_lq, "r_vq": self.r_vq, "a": self.a,
                "n_samples": self.n_samples}

    @classmethod
    def from_json(cls, obj: dict) -> "ReportCell":
        return cls(float(obj["r_lq"]), float(obj["r_vq"]), float(obj["a"]),
                   int(obj["n_samples"]))


@dataclass(frozen=True)
class MetricsReport:
    """Per-category and overall score cells, percentage-scaled and rounded."""

    cells: tuple[tuple[str, ReportCell], ...]
    overall: ReportCell
    tau: float
    mode: str
    lq_aggregation: str

    def cell(self, category: str) -> ReportCell:
        for name, cell in self.cells:
            if name == category:
                return cell
        raise KeyError(category)

    def to_json_obj(self) -> dict:
        return {
            "schema": "vrt-eval-report/1",
            "tau": self.tau,
            "mode": self.mode,
            "lq_aggregation": self.lq_aggregation,
            "categories": {name: cell.to_json() for name, cell in self.cells},
            "overall": self.overall.to_json(),
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "MetricsReport":
        try:
            cells = tuple(
                (name, ReportCell.from_json(obj["categories"][name]))
                for name in CATEGORIES
                if name in obj["categories"]
            )
            return cls(
                cells=cells,
                overall=ReportCell.from_json(obj["overall"]),
                tau=float(obj["tau"]),
                mode=str(obj["mode"]),
                lq_aggregation=str(obj["lq_aggregation"]),
            )
        except (KeyError, TypeError, ValueError) as err:
            raise ReportError(f"bad report object: {err}") from err


def round1(value: float) -> float:
    """Round half away from zero to one decimal, on the shortest repr."""
    return float(Decimal(repr(value)).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


def _cell(scores: list[SampleScore], lq_aggregation: str) -> ReportCell:
    if not scores:
        return ReportCell(0.0, 0.0, 0.0, 0)
    if lq_aggregation == "macro":
        lq = sum(s.lq for s in scores) / len(scores)
    else:
        lq = sum(s.matched_count for s in scores) / sum(s.gt_count for s in scores)
    pooled = [v for s in scores for v in s.matched_ious]
    vq = sum(pooled) / len(pooled) if pooled else 0.0
    a = sum(s.answer_iou for s in scores) / len(scores)
    return ReportCell(round1(lq * 100), round1(vq * 100), round1(a * 100), len(scores))


def aggregate(scores, tau: float = 0.5, mode: str = "mask",
              lq_aggregation: str = "macro") -> MetricsReport:
    """Build the category x {R-LQ, R-VQ, A} report over all sample scores.

    Logic quality is macro-averaged per sample by default (micro pools
    matched/gt counts instead); visual quality always pools matched IoUs
    across samples. A sample carrying several categories contributes to
    each of them, and to Overall exactly once.
    """
    scores = list(scores)
    if not scores:
        raise ReportError("cannot aggregate an empty score list")
    if lq_aggregation not in ("macro", "micro"):
        raise ValueError(f"lq_aggregation must be macro or micro, got {lq_aggregation!r}")
    for s in scores:
        if not s.categories:
            raise ReportError(f"sample {s.id}: score carries no category")
    cells = tuple(
        (c, _cell([s for s in scores if c in s.categories], lq_aggregation))
        for c in CATEGORIES
    )
    return MetricsReport(
        cells=cells,
        overall=_cell(scores, lq_aggregation),
        tau=tau,
        mode=mode,
        lq_aggregation=lq_aggregation,
    )
