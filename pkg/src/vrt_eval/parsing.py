"""Parsers for model output text and object-reference tag grammar.

Model output is expected to carry one reasoning region in
``<think>...</think>`` followed by one answer region in
``<answer>...</answer>``, with a ``[SEG]`` sentinel wherever a mask is
emitted. Masks arrive separately in generation order and bind
positionally: the i-th [SEG] token owns the i-th mask.

Ground-truth annotation text uses a second grammar: every object
reference in reasoning text is wrapped as ``<ver><objN></ver>`` and
answer objects as ``<vea><objN></vea>``, with the three tokens adjacent.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import SegAlignmentError, TagGrammarError
from .masks import BinaryMask

SEG_TOKEN = "[SEG]"

_REGION_TOKEN = re.compile(r"</?(think|answer)>")
_OBJ_TAG_TOKEN = re.compile(r"<(/?)(ver|vea)>|<obj(\d+)>")


@dataclass(frozen=True)
class ObjectTag:
    """One well-formed ``<kind><objN></kind>`` occurrence.

    ``start``/``end`` delimit the full occurrence in the source text, so
    ``text[start:end] == render()``.
    """

    kind: str
    index: int
    start: int
    end: int

    def render(self) -> str:
        return f"<{self.kind}><obj{self.index}></{self.kind}>"


@dataclass(frozen=True)
class Region:
    """A well-formed tag region; spans cover the tags, content excludes them."""

    kind: str
    start: int
    end: int
    content_start: int
    content_end: int


@dataclass(frozen=True)
class ParsedOutput:
    """A model prediction decomposed into regions, masks, and format flags."""

    raw_text: str
    thinking: str
    answer: str
    trace_masks: tuple[BinaryMask, ...]
    answer_masks: tuple[BinaryMask, ...]
    stray_masks: tuple[BinaryMask, ...]
    tags: tuple[ObjectTag, ...]
    think_spans: tuple[tuple[int, int], ...]
    answer_spans: tuple[tuple[int, int], ...]
    seg_in_think: int
    seg_in_answer: int
    seg_total: int
    violations: tuple[str, ...]

    @property
    def thinking_format_ok(self) -> bool:
        """Exactly one think region before exactly one answer region, no stray tags."""
        return (
            len(self.think_spans) == 1
            and len(self.answer_spans) == 1
            and self.think_spans[0][1] <= self.answer_spans[0][0]
            and not self.violations
        )

    @property
    def answer_segmented(self) -> bool:
        return self.seg_in_answer >= 1


def _scan_regions(text: str) -> tuple[list[Region], list[str]]:
    """Sequential token scan; only properly paired tags form regions.

    First open wins: any tag token arriving while another region is open
    is a violation and is skipped, as are unmatched closers and an
    unclosed trailing open.
    """
    regions: list[Region] = []
    violations: list[str] = []
    open_kind: str | None = None
    open_at = 0
    content_at = 0
    for tok in _REGION_TOKEN.finditer(text):
        kind = tok.group(1)
        closing = tok.group(0).startswith("</")
        if not closing:
            if open_kind is None:
                open_kind, open_at, content_at = kind, tok.start(), tok.end()
            else:
                violations.append(f"<{kind}> at {tok.start()} inside open <{open_kind}>")
        else:
            if open_kind == kind:
                regions.append(Region(kind, open_at, tok.end(), content_at, tok.start()))
                open_kind = None
            else:
                violations.append(f"stray </{kind}> at {tok.start()}")
    if open_kind is not None:
        violations.append(f"unclosed <{open_kind}> at {open_at}")
    return regions, violations


def parse_model_output(text: str, masks: list[BinaryMask]) -> ParsedOutput:
    """Split raw model text into regions and bind masks to [SEG] tokens.

    Format problems (missing, duplicated, or stray tags) are non-fatal
    and land in ``violations`` with best-effort regions extracted. A
    mismatch between the [SEG] count and the mask count is a caller
    error and raises :class:`SegAlignmentError`.
    """
    seg_positions = [m.start() for m in re.finditer(re.escape(SEG_TOKEN), text)]
    if len(seg_positions) != len(masks):
        raise SegAlignmentError(
            f"{len(seg_positions)} [SEG] tokens but {len(masks)} masks"
        )

    regions, violations = _scan_regions(text)
    think_regions = [r for r in regions if r.kind == "think"]
    answer_regions = [r for r in regions if r.kind == "answer"]

    def region_of(pos: int) -> str:
        for r in think_regions:
            if r.content_start <= pos < r.content_end:
                return "think"
        for r in answer_regions:
            if r.content_start <= pos < r.content_end:
                return "answer"
        return "stray"

    trace_masks: list[BinaryMask] = []
    answer_masks: list[BinaryMask] = []
    stray_masks: list[BinaryMask] = []
    seg_in_think = seg_in_answer = 0
    for pos, mask in zip(seg_positions, masks):
        where = region_of(pos)
        if where == "think":
            trace_masks.append(mask)
            seg_in_think += 1
        elif where == "answer":
            answer_masks.append(mask)
            seg_in_answer += 1
        else:
            stray_masks.append(mask)

    thinking = (
        text[think_regions[0].content_start : think_regions[0].content_end]
        if think_regions
        else ""
    )
    answer = (
        text[answer_regions[0].content_start : answer_regions[0].content_end]
        if answer_regions
        else ""
    )
    return ParsedOutput(
        raw_text=text,
        thinking=thinking,
        answer=answer,
        trace_masks=tuple(trace_masks),
        answer_masks=tuple(answer_masks),
        stray_masks=tuple(stray_masks),
        tags=tuple(parse_object_tags(text, strict=False)),
        think_spans=tuple((r.start, r.end) for r in think_regions),
        answer_spans=tuple((r.start, r.end) for r in answer_regions),
        seg_in_think=seg_in_think,
        seg_in_answer=seg_in_answer,
        seg_total=len(seg_positions),
        violations=tuple(violations),
    )


def parse_object_tags(text: str, strict: bool = True) -> list[ObjectTag]:
    """Extract ``<ver><objN></ver>`` / ``<vea><objN></vea>`` occurrences.

    The three tokens of one occurrence must be adjacent. In strict mode
    any mismatched, interleaved, or incomplete pair raises
    :class:`TagGrammarError` listing the offending spans; otherwise such
    tokens are skipped and only well-formed occurrences are returned.
    A bare ``<objN>`` outside a wrapper is plain text, never an error.
    """
    tags: list[ObjectTag] = []
    problems: list[tuple[tuple[int, int], str]] = []
    # pending holds (kind, open_start, open_end) and then the obj index.
    pending: tuple[str, int, int] | None = None
    pending_obj: tuple[int, int] | None = None  # (index, obj_end)

    def fail(span, why):
        problems.append((span, why))

    for tok in _OBJ_TAG_TOKEN.finditer(text):
        if tok.group(3) is not None:  # <objN>
            if pending is None:
                continue  # untagged object token: plain text
            if pending_obj is not None:
                fail((pending[1], tok.end()), "second object token inside one wrapper")
                pending = pending_obj = None
                continue
            if tok.start() != pending[2]:
                fail((pending[1], tok.end()), "object token not adjacent to opener")
                pending = None
                continue
            pending_obj = (int(tok.group(3)), tok.end())
            continue
        kind = tok.group(2)
        if tok.group(1) == "":  # opener
            if pending is not None:
                fail((pending[1], tok.start()), f"unclosed <{pending[0]}> before <{kind}>")
            pending = (kind, tok.start(), tok.end())
            pending_obj = None
        else:  # closer
            if pending is None:
                fail((tok.start(), tok.end()), f"stray </{kind}>")
            elif pending[0] != kind:
                fail((pending[1], tok.end()), f"<{pending[0]}> closed by </{kind}>")
                pending = pending_obj = None
            elif pending_obj is None:
                fail((pending[1], tok.end()), f"<{kind}> pair without object token")
                pending = None
            elif tok.start() != pending_obj[1]:
                fail((pending[1], tok.end()), "closer not adjacent to object token")
                pending = pending_obj = None
            else:
                tags.append(ObjectTag(kind, pending_obj[0], pending[1], tok.end()))
                pending = pending_obj = None
    if pending is not None:
        fail((pending[1], pending[2]), f"unclosed <{pending[0]}> at end of text")

    if strict and problems:
        detail = "; ".join(f"{why} at {span}" for span, why in problems)
        raise TagGrammarError(f"tag grammar violations: {detail}",
                              spans=[span for span, _ in problems])
    return tags
