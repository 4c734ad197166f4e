"""Exception types shared across the package."""


class VrtEvalError(Exception):
    """Base class for all vrt-eval errors."""


class MalformedRleError(VrtEvalError):
    """RLE counts are inconsistent with the declared mask size or non-canonical."""


class ShapeMismatchError(VrtEvalError):
    """Two masks (or a mask and an image) disagree on height/width."""


class EmptyMaskError(VrtEvalError):
    """An operation that needs foreground pixels was given an empty mask."""


class TagGrammarError(VrtEvalError):
    """Mismatched or interleaved object-reference tag pairs.

    ``spans`` lists the offending (start, end) character ranges.
    """

    def __init__(self, message, spans=()):
        super().__init__(message)
        self.spans = tuple(spans)


class SegAlignmentError(VrtEvalError):
    """The number of [SEG] tokens in the text differs from the number of masks."""


class ManifestError(VrtEvalError):
    """A benchmark manifest failed to load or violated an invariant."""


class PredictionError(VrtEvalError):
    """A predictions file failed to load or referenced unknown samples."""


class ReportError(VrtEvalError):
    """A metrics report could not be built or rendered."""
