"""Shared fixture builders: masks, samples, manifests, prediction files."""

from __future__ import annotations

import json

import numpy as np
import pytest

from vrt_eval import BinaryMask, Sample, encode_rle
from vrt_eval.benchmark import AnswerObject, GtAnswer, TraceObject


def rect_mask(h, w, r0, c0, rh, rw) -> BinaryMask:
    arr = np.zeros((h, w), dtype=bool)
    arr[r0 : r0 + rh, c0 : c0 + rw] = True
    return BinaryMask(arr)


def random_mask(rng, h, w, p=0.3) -> BinaryMask:
    return BinaryMask(rng.random((h, w)) < p)


def random_blob_mask(rng, h, w) -> BinaryMask:
    """Non-empty random rectangle with some pixels knocked out."""
    rh = int(rng.integers(1, max(2, h // 2 + 1)))
    rw = int(rng.integers(1, max(2, w // 2 + 1)))
    r0 = int(rng.integers(0, h - rh + 1))
    c0 = int(rng.integers(0, w - rw + 1))
    arr = np.zeros((h, w), dtype=bool)
    arr[r0 : r0 + rh, c0 : c0 + rw] = True
    holes = rng.random((rh, rw)) < 0.2
    arr[r0 : r0 + rh, c0 : c0 + rw] &= ~holes
    if not arr.any():
        arr[r0, c0] = True
    return BinaryMask(arr)


def make_sample(sample_id="s1", h=16, w=16, trace_masks=None, answer_masks=None,
                categories=("comp",), question="which one?") -> Sample:
    if trace_masks is None:
        trace_masks = [rect_mask(h, w, 1, 1, 4, 4), rect_mask(h, w, 8, 8, 5, 5)]
    if answer_masks is None:
        answer_masks = [rect_mask(h, w, 2, 9, 3, 3)]
    trace = tuple(
        TraceObject(i + 1, f"object {i + 1}", m) for i, m in enumerate(trace_masks)
    )
    answer = GtAnswer(
        "the highlighted object",
        tuple(
            AnswerObject(100 + i, m) for i, m in enumerate(answer_masks)
        ),
    )
    return Sample(
        id=sample_id,
        image_ref=f"images/{sample_id}.jpg",
        image_h=h,
        image_w=w,
        question=question,
        trace=trace,
        answer=answer,
        categories=frozenset(categories),
    )


def sample_to_record(sample: Sample) -> dict:
    return {
        "id": sample.id,
        "image": {"h": sample.image_h, "w": sample.image_w, "ref": sample.image_ref},
        "question": sample.question,
        "trace": [
            {"obj": t.obj_id, "text": t.text, "mask": encode_rle(t.mask).to_json()}
            for t in sample.trace
        ],
        "answer": {
            "text": sample.answer.text,
            "objects": [
                {"obj": a.obj_id, "mask": encode_rle(a.mask).to_json()}
                for a in sample.answer.objects
            ],
        },
        "categories": sorted(sample.categories),
    }


def prediction_text(n_trace: int, n_answer: int) -> str:
    """Canonical compliant output with the given [SEG] counts per region."""
    think = " ".join(f"step {i} [SEG]." for i in range(n_trace))
    answer = " ".join(f"the object [SEG]" for _ in range(n_answer))
    return f"<think>{think}</think><answer>{answer}</answer>"


def prediction_record(sample: Sample, trace_masks, answer_masks) -> dict:
    masks = list(trace_masks) + list(answer_masks)
    return {
        "id": sample.id,
        "raw_text": prediction_text(len(trace_masks), len(answer_masks)),
        "masks": [encode_rle(m).to_json() for m in masks],
    }


def perfect_prediction(sample: Sample) -> dict:
    return prediction_record(sample, sample.trace_masks, sample.answer_masks)


def write_jsonl(path, objs):
    path.write_text("".join(json.dumps(o) + "\n" for o in objs), encoding="utf-8")
    return path


def shift_mask(mask: BinaryMask, cols: int) -> BinaryMask:
    arr = np.zeros(mask.shape, dtype=bool)
    arr[:, cols:] = mask.pixels[:, : mask.width - cols]
    return BinaryMask(arr)


# Composition realizing the declared counts total=304 comp=102 func=128
# loc=132 visf=126 multiple=184: 120 singles + 184 two-category samples.
TABLE_COUNTS = {"total": 304, "comp": 102, "func": 128, "loc": 132,
                "visf": 126, "multiple": 184}
_SINGLES = [("comp",)] * 20 + [("func",)] * 40 + [("loc",)] * 30 + [("visf",)] * 30
_DOUBLES = (
    [("comp", "func")] * 40
    + [("comp", "loc")] * 30
    + [("comp", "visf")] * 12
    + [("func", "loc")] * 18
    + [("func", "visf")] * 30
    + [("loc", "visf")] * 54
)
CATEGORY_PLAN = _SINGLES + _DOUBLES


def build_benchmark_samples(category_plan=None, h=12, w=12) -> list[Sample]:
    plan = CATEGORY_PLAN if category_plan is None else category_plan
    rng = np.random.default_rng(7)
    samples = []
    for i, cats in enumerate(plan):
        n_trace = int(rng.integers(1, 4))
        trace = [random_blob_mask(rng, h, w) for _ in range(n_trace)]
        answer = [random_blob_mask(rng, h, w)]
        samples.append(
            make_sample(f"s{i:04d}", h=h, w=w, trace_masks=trace,
                        answer_masks=answer, categories=cats)
        )
    return samples


def write_manifest(path, samples, declared_counts=None):
    lines = []
    if declared_counts is not None:
        lines.append({"declared_counts": declared_counts})
    lines.extend(sample_to_record(s) for s in samples)
    return write_jsonl(path, lines)


@pytest.fixture
def small_benchmark(tmp_path):
    """Six-sample manifest covering all categories, written to disk."""
    plans = [("comp",), ("func",), ("loc",), ("visf",), ("comp", "loc"),
             ("func", "visf")]
    samples = build_benchmark_samples(plans)
    path = write_manifest(tmp_path / "manifest.jsonl", samples)
    return path, samples
