"""Batch evaluation of a predictions file against a manifest.

Per-sample scoring fans out over a bounded thread pool; results are
keyed and sorted by sample id before aggregation, so the report is
byte-identical for any worker count. Run metadata (timings, worker
count) never enters the report payload.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .benchmark import (
    Benchmark,
    PredictionRecord,
    Sample,
    load_manifest,
    load_predictions,
)
from .errors import PredictionError, ShapeMismatchError, VrtEvalError
from .metrics import (
    MetricsReport,
    SampleScore,
    aggregate,
    answer_score,
    logic_quality,
    trace_match,
)
from .parsing import parse_model_output

FORMATS = ("csv", "table", "json")


@dataclass(frozen=True)
class RunConfig:
    """Evaluation / reward parameters; the defaults are the reference protocol."""

    tau: float = 0.5
    mode: str = "mask"
    lam: float = 0.1
    lq_aggregation: str = "macro"
    reward_gt_scope: str = "answer_only"
    jobs: int = 1
    output_format: str = "table"
    skip_missing: bool = False

    def __post_init__(self):
        if not 0.0 <= self.tau < 1.0:
            raise ValueError(f"tau must lie in [0, 1), got {self.tau}")
        if self.mode not in ("mask", "box"):
            raise ValueError(f"mode must be mask or box, got {self.mode!r}")
        if self.lq_aggregation not in ("macro", "micro"):
            raise ValueError("lq_aggregation must be macro or micro")
        if self.reward_gt_scope not in ("answer_only", "joint"):
            raise ValueError("reward_gt_scope must be answer_only or joint")
        if self.jobs < 1:
            raise ValueError(f"jobs must be >= 1, got {self.jobs}")
        if self.output_format not in FORMATS:
            raise ValueError(f"output format must be one of {FORMATS}")


@dataclass(frozen=True)
class EvaluationResult:
    report: MetricsReport
    scores: tuple[SampleScore, ...]
    diagnostics: tuple[str, ...]


def _degenerate_score(sample: Sample, flag: str) -> SampleScore:
    return SampleScore(
        id=sample.id,
        matched_count=0,
        gt_count=len(sample.trace),
        matched_ious=(),
        lq=0.0,
        answer_iou=0.0,
        categories=sample.categories,
        flags=(flag,),
    )


def score_sample(sample: Sample, prediction: PredictionRecord | None,
                 config: RunConfig) -> SampleScore:
    """Score one sample; bad predictions degrade to a zero score, never crash."""
    if prediction is None:
        return _degenerate_score(sample, "missing-prediction")
    try:
        parsed = parse_model_output(prediction.raw_text, list(prediction.masks))
        match = trace_match(parsed, sample, tau=config.tau, mode=config.mode)
    except VrtEvalError as err:
        return _degenerate_score(sample, f"parse-error: {err}")
    flags = []
    if not parsed.answer_masks:
        flags.append("empty-answer-prediction")
        a = 0.0
    else:
        try:
            a = answer_score(parsed.answer_masks, sample.answer_masks, mode=config.mode)
        except ShapeMismatchError as err:
            return _degenerate_score(sample, f"parse-error: {err}")
    if parsed.violations:
        flags.append("format-violations")
    return SampleScore(
        id=sample.id,
        matched_count=len(match.matched),
        gt_count=len(sample.trace),
        matched_ious=match.matched_ious,
        lq=logic_quality(match, len(sample.trace)),
        answer_iou=a,
        categories=sample.categories,
        flags=tuple(flags),
    )


def evaluate_benchmark(benchmark: Benchmark, predictions: list[PredictionRecord],
                       config: RunConfig) -> EvaluationResult:
    """Score every sample and aggregate; see :func:`evaluate_predictions`."""
    by_id = {p.id: p for p in predictions}
    unknown = sorted(set(by_id) - {s.id for s in benchmark.samples})
    if unknown:
        raise PredictionError(
            f"predictions reference unknown sample ids: {', '.join(unknown)}"
        )
    samples = sorted(benchmark.samples, key=lambda s: s.id)
    if config.skip_missing:
        samples = [s for s in samples if s.id in by_id]

    def run(sample: Sample) -> SampleScore:
        return score_sample(sample, by_id.get(sample.id), config)

    if config.jobs == 1:
        scores = [run(s) for s in samples]
    else:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            scores = list(pool.map(run, samples))
    scores.sort(key=lambda s: s.id)

    diagnostics = tuple(
        f"{s.id}: {flag}" for s in scores for flag in s.flags
    )
    report = aggregate(scores, tau=config.tau, mode=config.mode,
                       lq_aggregation=config.lq_aggregation)
    return EvaluationResult(report, tuple(scores), diagnostics)


def evaluate_predictions(manifest_path, predictions_path,
                         config: RunConfig | None = None) -> EvaluationResult:
    """Load both files and score predictions against the manifest.

    Samples without a prediction score 0 / contribute nothing to pooled
    VQ / 0, and are listed in diagnostics, unless ``skip_missing``.
    """
    config = config or RunConfig()
    benchmark = load_manifest(manifest_path)
    predictions = load_predictions(predictions_path)
    return evaluate_benchmark(benchmark, predictions, config)


def _fmt(x: float) -> str:
    return f"{x:.1f}"


def render_json(report: MetricsReport) -> str:
    return json.dumps(report.to_json_obj(), indent=2, sort_keys=True) + "\n"


def render_csv(report: MetricsReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["cell", "r_lq", "r_vq", "a", "n_samples"])
    for name, cell in report.cells:
        writer.writerow([name, _fmt(cell.r_lq), _fmt(cell.r_vq), _fmt(cell.a),
                         cell.n_samples])
    o = report.overall
    writer.writerow(["overall", _fmt(o.r_lq), _fmt(o.r_vq), _fmt(o.a), o.n_samples])
    return buf.getvalue()


def render_table(report: MetricsReport) -> str:
    """Wide aligned-text layout: one column group per category plus Overall."""
    groups = [(f"#{name}", cell) for name, cell in report.cells]
    groups.append(("Overall", report.overall))
    col_w = 7
    group_w = 3 * col_w + 2
    lines = [
        f"mode={report.mode}  tau={report.tau:g}  lq_agg={report.lq_aggregation}",
        "  ".join(f"{name:^{group_w}}" for name, _ in groups).rstrip(),
        "  ".join(
            "  ".join(f"{h:>{col_w}}" for h in ("R-LQ", "R-VQ", "A")) for _ in groups
        ),
        "  ".join(
            "  ".join(f"{_fmt(v):>{col_w}}" for v in (c.r_lq, c.r_vq, c.a))
            for _, c in groups
        ),
        "  ".join(f"{'n=' + str(c.n_samples):^{group_w}}" for _, c in groups).rstrip(),
    ]
    return "\n".join(lines) + "\n"


def emit_report(report: MetricsReport, fmt: str) -> str:
    """Render a report; output is byte-deterministic for a given report."""
    if fmt == "json":
        return render_json(report)
    if fmt == "csv":
        return render_csv(report)
    if fmt == "table":
        return render_table(report)
    raise ValueError(f"unknown report format {fmt!r}")
