"""Conversion between training-loop types and vrt-eval core types.

Masks come in as dense H x W arrays (anything ``np.asarray`` can turn
into one) or as the RLE JSON object ``{"size": [H, W], "counts":
[...]}``. Dense boolean arrays are wrapped without copying. Ground truth
comes in as a ``vrt_eval.Sample`` or a manifest-schema mapping whose
masks may themselves be dense arrays or RLE objects.
"""

from __future__ import annotations

import numpy as np
from vrt_eval import BinaryMask, RleCounts, Sample, decode_rle
from vrt_eval.benchmark import AnswerObject, GtAnswer, TraceObject
from vrt_eval.errors import VrtEvalError


class BridgeConversionError(ValueError):
    """An input could not be converted to a core type; the core diagnostic
    is attached as ``__cause__`` when one exists."""


def as_mask(obj) -> BinaryMask:
    if isinstance(obj, BinaryMask):
        return obj
    if isinstance(obj, dict):
        try:
            return decode_rle(RleCounts.from_json(obj))
        except VrtEvalError as err:
            raise BridgeConversionError(f"bad RLE mask: {err}") from err
    try:
        return BinaryMask(np.asarray(obj))
    except (VrtEvalError, TypeError, ValueError) as err:
        raise BridgeConversionError(f"cannot convert {type(obj).__name__} to a mask: {err}") from err


def as_masks(objs) -> list[BinaryMask]:
    if isinstance(objs, np.ndarray) and objs.ndim == 3:
        return [as_mask(m) for m in objs]
    return [as_mask(m) for m in objs]


def to_dense(mask: BinaryMask) -> np.ndarray:
    """Writable dense boolean copy of a core mask."""
    return np.array(mask.pixels)


def as_sample(obj) -> Sample:
    if isinstance(obj, Sample):
        return obj
    if not isinstance(obj, dict):
        raise BridgeConversionError(
            f"ground truth must be a Sample or a mapping, got {type(obj).__name__}"
        )
    try:
        image = obj["image"]
        trace = tuple(
            TraceObject(int(t["obj"]), str(t.get("text", "")), as_mask(t["mask"]))
            for t in obj["trace"]
        )
        answer = GtAnswer(
            str(obj["answer"].get("text", "")),
            tuple(
                AnswerObject(int(a["obj"]), as_mask(a["mask"]))
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
            categories=frozenset(obj.get("categories", ("comp",))),
        )
    except BridgeConversionError:
        raise
    except VrtEvalError as err:
        raise BridgeConversionError(f"bad ground-truth sample: {err}") from err
    except (KeyError, TypeError, ValueError) as err:
        raise BridgeConversionError(f"bad ground-truth sample: {err}") from err
