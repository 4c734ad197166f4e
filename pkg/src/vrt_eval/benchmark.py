"""Benchmark samples, manifests, and prediction records.

A manifest is JSONL with one sample per line:

    {"id": ..., "image": {"h": H, "w": W, "ref": ...}, "question": ...,
     "trace": [{"obj": int, "text": ..., "mask": RLE}, ...],
     "answer": {"text": ..., "objects": [{"obj": int, "mask": RLE}, ...]},
     "categories": ["comp" | "func" | "loc" | "visf", ...]}

An optional header as the first record may declare expected counts:
``{"declared_counts": {"total": ..., "comp": ..., "func": ..., "loc": ...,
"visf": ..., "multiple": ...}}``; the loader recomputes and cross-checks
them. Predictions are JSONL records ``{"id", "raw_text", "masks": [RLE,
...]}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ManifestError, PredictionError, VrtEvalError
from .masks import BinaryMask, RleCounts, decode_rle

CATEGORIES = ("comp", "func", "loc", "visf")


@dataclass(frozen=True)
class TraceObject:
    obj_id: int
    text: str
    mask: BinaryMask


@dataclass(frozen=True)
class AnswerObject:
    obj_id: int
    mask: BinaryMask


@dataclass(frozen=True)
class GtAnswer:
    text: str
    objects: tuple[AnswerObject, ...]


@dataclass(frozen=True)
class Sample:
    """One benchmark item with its ground-truth trace and answer objects."""

    id: str
    image_ref: str
    image_h: int
    image_w: int
    question: str
    trace: tuple[TraceObject, ...]
    answer: GtAnswer
    categories: frozenset[str]

    def __post_init__(self):
        if not self.trace:
            raise ManifestError(f"sample {self.id}: needs at least one trace object")
        if not self.answer.objects:
            raise ManifestError(f"sample {self.id}: needs at least one answer object")
        if not self.categories:
            raise ManifestError(f"sample {self.id}: categories may not be empty")
        bad = self.categories - set(CATEGORIES)
        if bad:
            raise ManifestError(f"sample {self.id}: unknown categories {sorted(bad)}")
        trace_ids = [t.obj_id for t in self.trace]
        if len(set(trace_ids)) != len(trace_ids):
            raise ManifestError(f"sample {self.id}: duplicate trace object ids")
        answer_ids = [a.obj_id for a in self.answer.objects]
        if len(set(answer_ids)) != len(answer_ids):
            raise ManifestError(f"sample {self.id}: duplicate answer object ids")
        shape = (self.image_h, self.image_w)
        for obj_id, mask in [(t.obj_id, t.mask) for t in self.trace] + [
            (a.obj_id, a.mask) for a in self.answer.objects
        ]:
            if mask.shape != shape:
                raise ManifestError(
                    f"sample {self.id}: mask for obj {obj_id} is {mask.shape}, "
                    f"image is {shape}"
                )
            if mask.is_empty():
                raise ManifestError(f"sample {self.id}: obj {obj_id} mask is empty")

    @property
    def trace_masks(self) -> tuple[BinaryMask, ...]:
        return tuple(t.mask for t in self.trace)

    @property
    def answer_masks(self) -> tuple[BinaryMask, ...]:
        return tuple(a.mask for a in self.answer.objects)


@dataclass(frozen=True)
class CategoryCounts:
    total: int
    comp: int
    func: int
    loc: int
    visf: int
    multiple: int

    def to_json(self) -> dict:
        return {
            "total": self.total,
            "comp": self.comp,
            "func": self.func,
            "loc": self.loc,
            "visf": self.visf,
            "multiple": self.multiple,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CategoryCounts":
        try:
            return cls(**{k: int(obj[k]) for k in
                          ("total", "comp", "func", "loc", "visf", "multiple")})
        except (KeyError, TypeError, ValueError) as err:
            raise ManifestError(f"bad declared_counts object: {obj!r}") from err


@dataclass(frozen=True)
class Benchmark:
    samples: tuple[Sample, ...]
    declared_counts: CategoryCounts | None = None
    _by_id: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_by_id", {s.id: s for s in self.samples})

    def __len__(self):
        return len(self.samples)

    def get(self, sample_id: str) -> Sample | None:
        return self._by_id.get(sample_id)

    def computed_counts(self) -> CategoryCounts:
        per = {c: sum(1 for s in self.samples if c in s.categories) for c in CATEGORIES}
        multiple = sum(1 for s in self.samples if len(s.categories) >= 2)
        return CategoryCounts(total=len(self.samples), multiple=multiple, **per)


@dataclass(frozen=True)
class PredictionRecord:
    id: str
    raw_text: str
    masks: tuple[BinaryMask, ...]


def _mask_from_json(obj: dict) -> BinaryMask:
    return decode_rle(RleCounts.from_json(obj))


def _sample_from_json(obj: dict) -> Sample:
    try:
        image = obj["image"]
        trace = tuple(
            TraceObject(int(t["obj"]), str(t["text"]), _mask_from_json(t["mask"]))
            for t in obj["trace"]
        )
        answer = GtAnswer(
            str(obj["answer"]["text"]),
            tuple(
                AnswerObject(int(a["obj"]), _mask_from_json(a["mask"]))
                for a in obj["answer"]["objects"]
            ),
        )
        return Sample(
            id=str(obj["id"]),
            image_ref=str(image.get("ref", "")),
            image_h=int(image["h"]),
            image_w=int(image["w"]),
            question=str(obj.get("question", "")),
            trace=trace,
            answer=answer,
            categories=frozenset(obj["categories"]),
        )
    except ManifestError:
        raise
    except VrtEvalError as err:
        raise ManifestError(f"sample {obj.get('id', '?')}: {err}") from err
    except (KeyError, TypeError, ValueError) as err:
        raise ManifestError(f"sample {obj.get('id', '?')}: bad record ({err})") from err


def sample_from_record(obj: dict) -> Sample:
    """Build a Sample from one manifest-schema JSON object."""
    return _sample_from_json(obj)


def _read_jsonl(path, error_cls):
    records = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            records.append((lineno, json.loads(line)))
        except json.JSONDecodeError as err:
            raise error_cls(f"{path}:{lineno}: invalid JSON ({err})") from err
    return records


def load_manifest(path) -> Benchmark:
    """Load and validate a benchmark manifest (JSONL)."""
    records = _read_jsonl(path, ManifestError)
    if not records:
        raise ManifestError(f"{path}: manifest is empty")

    declared = None
    if "declared_counts" in records[0][1] and "id" not in records[0][1]:
        declared = CategoryCounts.from_json(records[0][1]["declared_counts"])
        records = records[1:]
        if not records:
            raise ManifestError(f"{path}: manifest has a header but no samples")

    samples = []
    seen = set()
    for lineno, obj in records:
        try:
            sample = _sample_from_json(obj)
        except ManifestError as err:
            raise ManifestError(f"{path}:{lineno}: {err}") from err
        if sample.id in seen:
            raise ManifestError(f"{path}:{lineno}: duplicate sample id {sample.id!r}")
        seen.add(sample.id)
        samples.append(sample)

    bench = Benchmark(tuple(samples), declared)
    if declared is not None:
        actual = bench.computed_counts()
        if actual != declared:
            diffs = [
                f"{k}: declared {d} != actual {a}"
                for k, d, a in (
                    (k, declared.to_json()[k], actual.to_json()[k])
                    for k in declared.to_json()
                )
                if d != a
            ]
            raise ManifestError(f"{path}: declared counts mismatch ({'; '.join(diffs)})")
    return bench


def load_predictions(path) -> list[PredictionRecord]:
    """Load a predictions file (JSONL); an empty file is a legal empty run."""
    records = _read_jsonl(path, PredictionError)
    out = []
    seen = set()
    for lineno, obj in records:
        try:
            rec = PredictionRecord(
                id=str(obj["id"]),
                raw_text=str(obj["raw_text"]),
                masks=tuple(_mask_from_json(m) for m in obj["masks"]),
            )
        except VrtEvalError as err:
            raise PredictionError(f"{path}:{lineno}: {err}") from err
        except (KeyError, TypeError) as err:
            raise PredictionError(f"{path}:{lineno}: bad record ({err})") from err
        if rec.id in seen:
            raise PredictionError(f"{path}:{lineno}: duplicate prediction id {rec.id!r}")
        seen.add(rec.id)
        out.append(rec)
    return out
