"""Mask core: RLE codec, IoU, boxes, dedup."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vrt_eval import (
    BinaryMask,
    Box,
    EmptyMaskError,
    MalformedRleError,
    RleCounts,
    ShapeMismatchError,
    box_iou,
    decode_rle,
    dedup_masks,
    encode_rle,
    iou,
    iou_flagged,
    tight_box,
)

from conftest import random_mask, rect_mask


def brute_iou(a: BinaryMask, b: BinaryMask) -> float:
    """Pixel-by-pixel oracle, no vector ops."""
    inter = union = 0
    for r in range(a.height):
        for c in range(a.width):
            pa, pb = bool(a.pixels[r, c]), bool(b.pixels[r, c])
            inter += pa and pb
            union += pa or pb
    return inter / union if union else 0.0


mask_arrays = st.integers(1, 6).flatmap(
    lambda h: st.integers(1, 6).flatmap(
        lambda w: st.lists(st.booleans(), min_size=h * w, max_size=h * w).map(
            lambda bits: np.array(bits, dtype=bool).reshape(h, w)
        )
    )
)


class TestRleCodec:
    def test_decode_second_column(self):
        mask = decode_rle(RleCounts(2, 2, (2, 2)))
        assert mask.pixels.tolist() == [[False, True], [False, True]]

    def test_decode_leading_zero_is_full(self):
        mask = decode_rle(RleCounts(2, 2, (0, 4)))
        assert mask.area == 4

    def test_decode_single_run_is_empty(self):
        mask = decode_rle(RleCounts(3, 3, (9,)))
        assert mask.is_empty()

    def test_encode_empty(self):
        assert encode_rle(BinaryMask.zeros(3, 3)).counts == (9,)

    def test_encode_full(self):
        assert encode_rle(BinaryMask(np.ones((2, 2), bool))).counts == (0, 4)

    def test_encode_is_column_major(self):
        mask = rect_mask(2, 3, 0, 1, 2, 1)  # middle column
        assert encode_rle(mask).counts == (2, 2, 2)

    @pytest.mark.parametrize("counts", [(3,), (2, 0, 2), (5, -1), ()])
    def test_malformed_counts_rejected(self, counts):
        with pytest.raises(MalformedRleError):
            RleCounts(2, 2, counts)

    def test_json_round_trip(self):
        rle = RleCounts(4, 5, (3, 2, 15))
        assert RleCounts.from_json(rle.to_json()) == rle

    def test_round_trip_random_masks(self):
        rng = np.random.default_rng(11)
        for _ in range(1000):
            h, w = int(rng.integers(1, 20)), int(rng.integers(1, 20))
            mask = random_mask(rng, h, w, p=float(rng.random()))
            again = decode_rle(encode_rle(mask))
            assert again == mask

    @given(mask_arrays)
    @settings(max_examples=150)
    def test_round_trip_property(self, arr):
        mask = BinaryMask(arr)
        rle = encode_rle(mask)
        assert sum(rle.counts) == mask.height * mask.width
        assert all(c > 0 for c in rle.counts[1:])
        assert decode_rle(rle) == mask


class TestIou:
    def test_identity(self):
        m = rect_mask(10, 10, 2, 2, 4, 4)
        value, degenerate = iou_flagged(m, m)
        assert value == 1.0 and not degenerate

    def test_disjoint(self):
        a = rect_mask(10, 10, 0, 0, 3, 3)
        b = rect_mask(10, 10, 6, 6, 3, 3)
        assert iou(a, b) == 0.0

    def test_shifted_square(self):
        a = rect_mask(10, 20, 0, 0, 10, 10)
        b = rect_mask(10, 20, 0, 5, 10, 10)
        expected = brute_iou(a, b)
        assert expected == pytest.approx(50 / 150)
        assert iou(a, b) == pytest.approx(expected)

    def test_both_empty_is_degenerate_zero(self):
        value, degenerate = iou_flagged(BinaryMask.zeros(4, 4), BinaryMask.zeros(4, 4))
        assert value == 0.0 and degenerate

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            iou(BinaryMask.zeros(3, 3), BinaryMask.zeros(3, 4))

    @given(mask_arrays, st.randoms(use_true_random=False))
    @settings(max_examples=100)
    def test_symmetry_bounds_oracle(self, arr, rnd):
        a = BinaryMask(arr)
        flipped = arr.copy()
        idx = rnd.randrange(arr.size)
        flipped.flat[idx] = not flipped.flat[idx]
        b = BinaryMask(flipped)
        assert iou(a, b) == iou(b, a)
        assert 0.0 <= iou(a, b) <= 1.0
        assert iou(a, b) == pytest.approx(brute_iou(a, b))

    @given(mask_arrays)
    @settings(max_examples=60)
    def test_removing_pixels_never_grows_intersection(self, arr):
        a = BinaryMask(arr)
        b = rect_mask(a.height, a.width, 0, 0, a.height, max(1, a.width // 2))
        base = int(np.count_nonzero(a.pixels & b.pixels))
        shrunk = arr.copy()
        fg = np.argwhere(shrunk)
        if len(fg):
            shrunk[tuple(fg[0])] = False
        after = int(np.count_nonzero(shrunk & b.pixels))
        assert after <= base


class TestBoxes:
    def test_single_pixel(self):
        m = rect_mask(10, 10, 3, 7, 1, 1)
        assert tight_box(m) == Box(3, 7, 3, 7)

    def test_full_mask(self):
        m = BinaryMask(np.ones((6, 8), bool))
        assert tight_box(m) == Box(0, 0, 5, 7)

    def test_l_shape(self):
        arr = np.zeros((8, 12), bool)
        arr[0:5, 0:3] = True
        arr[3:5, 0:10] = True
        assert tight_box(BinaryMask(arr)) == Box(0, 0, 4, 9)

    def test_empty_mask_rejected(self):
        with pytest.raises(EmptyMaskError):
            tight_box(BinaryMask.zeros(4, 4))

    def test_box_iou_identity(self):
        b = Box(1, 2, 5, 9)
        assert box_iou(b, b) == 1.0

    def test_box_iou_nested_half(self):
        inner = Box(0, 0, 4, 9)   # 50 px
        outer = Box(0, 0, 9, 9)   # 100 px
        assert box_iou(inner, outer) == pytest.approx(0.5)

    def test_box_iou_shifted(self):
        a, b = Box(0, 0, 9, 9), Box(5, 0, 14, 9)
        inter = 5 * 10
        union = a.area + b.area - inter
        assert box_iou(a, b) == pytest.approx(inter / union)
        assert box_iou(a, b) == pytest.approx(50 / 150)

    def test_invalid_box_rejected(self):
        with pytest.raises(ValueError):
            Box(5, 0, 2, 3)

    @given(mask_arrays)
    @settings(max_examples=100)
    def test_tight_box_is_minimal(self, arr):
        if not arr.any():
            return
        mask = BinaryMask(arr)
        box = tight_box(mask)
        fg = np.argwhere(arr)
        assert (fg[:, 0] >= box.row_min).all() and (fg[:, 0] <= box.row_max).all()
        assert (fg[:, 1] >= box.col_min).all() and (fg[:, 1] <= box.col_max).all()
        # each edge touches at least one pixel, so shrinking excludes something
        assert arr[box.row_min, :].any() and arr[box.row_max, :].any()
        assert arr[:, box.col_min].any() and arr[:, box.col_max].any()


class TestDedup:
    def test_identical_pair_keeps_lower_index(self):
        m = rect_mask(8, 8, 1, 1, 4, 4)
        assert dedup_masks([m, BinaryMask(m.pixels.copy())]) == [0]

    def test_keep_larger_rule(self):
        # IoU 50/80 = 0.625 > 0.5; areas 80 vs 50
        big = rect_mask(10, 10, 0, 0, 8, 10)
        small = rect_mask(10, 10, 0, 0, 5, 10)
        assert iou(big, small) > 0.5
        assert dedup_masks([small, big]) == [1]

    def test_below_threshold_keeps_both(self):
        a = rect_mask(10, 10, 0, 0, 5, 10)
        b = rect_mask(10, 10, 3, 0, 5, 10)
        assert iou(a, b) < 0.5
        assert dedup_masks([a, b]) == [0, 1]

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            dedup_masks([BinaryMask.zeros(3, 3), BinaryMask.zeros(4, 4)])

    def test_random_sets_postconditions(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            masks = [random_mask(rng, 8, 8, p=0.5) for _ in range(int(rng.integers(1, 9)))]
            kept = dedup_masks(masks)
            assert kept == sorted(kept)
            assert set(kept) <= set(range(len(masks)))
            for i in kept:
                for j in kept:
                    if i != j:
                        assert iou(masks[i], masks[j]) <= 0.5
            removed = set(range(len(masks))) - set(kept)
            for r in removed:
                superiors = [
                    k for k in kept
                    if iou(masks[r], masks[k]) > 0.5 and masks[k].area >= masks[r].area
                ]
                assert superiors, f"removed mask {r} has no kept superior"
            again = dedup_masks([masks[i] for i in kept])
            assert again == list(range(len(kept)))


class TestBinaryMask:
    def test_dimension_invariants(self):
        with pytest.raises(ShapeMismatchError):
            BinaryMask(np.zeros((0, 4), bool))
        with pytest.raises(ShapeMismatchError):
            BinaryMask(np.zeros(4, bool))

    def test_pixels_read_only(self):
        m = BinaryMask.zeros(3, 3)
        with pytest.raises(ValueError):
            m.pixels[0, 0] = True

    def test_no_copy_for_bool_input(self):
        arr = np.zeros((4, 4), dtype=bool)
        m = BinaryMask(arr)
        assert m.pixels.base is arr
        assert arr.flags.writeable  # caller's buffer untouched

    def test_from_box(self):
        m = BinaryMask.from_box(Box(1, 1, 2, 3), 5, 5)
        assert m.area == 6
        assert tight_box(m) == Box(1, 1, 2, 3)
