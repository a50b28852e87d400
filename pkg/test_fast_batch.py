"""
Тесты пакетного FAST: побитовое совпадение со скалярным уровнем
"""

import numpy as np
import pytest

from conftest import make_random_image
from detectors.fast import FastConfig, detect_fast, fast_score, segment_test
from detectors.fast_batch import (
    BUFFER_ROWS,
    FLAG_BRIGHTER,
    FLAG_DARKER,
    FLAG_NONE,
    FastBatchState,
    detect_fast_batch,
)
from errors import ImageTooSmall, UnsupportedLaneCount
from image_core import Image
from synthetic_corpus import generate_synthetic_sequence

CFG = FastConfig(arc_length=9, threshold=10, nms_window=3)


def as_tuples(corners):
    return [(c.x, c.y, c.score) for c in corners]


@pytest.mark.parametrize("lanes", [1, 4, 8, 16])
def test_matches_scalar_on_random(lanes):
    img = make_random_image(31, 45, 37)
    assert as_tuples(detect_fast_batch(img, CFG, lanes)) == as_tuples(detect_fast(img, CFG))


@pytest.mark.parametrize("lanes", [4, 16])
def test_matches_scalar_on_synthetic(lanes):
    for img in generate_synthetic_sequence(2, seed=7, width=96, height=64):
        assert as_tuples(detect_fast_batch(img, CFG, lanes)) == as_tuples(detect_fast(img, CFG))


def test_matches_scalar_with_wide_nms():
    cfg = FastConfig(arc_length=9, threshold=15, nms_window=5)
    img = make_random_image(12, 40, 30)
    assert as_tuples(detect_fast_batch(img, cfg, 8)) == as_tuples(detect_fast(img, cfg))


def test_bright_dot(bright_dot):
    assert as_tuples(detect_fast_batch(bright_dot, CFG, 8)) == [(8, 8, 149)]


def test_minimum_size_image():
    img = make_random_image(3, 7, 7)
    assert as_tuples(detect_fast_batch(img, CFG, 4)) == as_tuples(detect_fast(img, CFG))


def test_single_lane_trace_matches_segment_test():
    img = make_random_image(21, 24, 20)
    snapshots = []
    detect_fast_batch(img, CFG, 1, trace=snapshots.append)

    assert len(snapshots) == (24 - 6) * (20 - 6)
    for snap in snapshots:
        x, y = int(snap.xs[0]), snap.y
        tagged = bool(snap.tag[0])
        assert tagged == segment_test(img, x, y, CFG.threshold)
        if tagged:
            assert snap.scores[0] == fast_score(img, x, y, CFG)
        else:
            assert snap.scores[0] == 0


def test_flags_follow_differences():
    img = make_random_image(22, 24, 20)
    snapshots = []
    detect_fast_batch(img, CFG, 8, trace=snapshots.append)
    t = CFG.threshold
    for snap in snapshots:
        expected = np.full(snap.diff.shape, FLAG_NONE)
        expected[snap.diff > t] = FLAG_BRIGHTER
        expected[snap.diff < -t] = FLAG_DARKER
        assert np.array_equal(snap.flags, expected)


def test_row_buffer_holds_circle_height():
    state = FastBatchState.allocate(width=10, n_lanes=4, nms_window=3)
    for value in range(BUFFER_ROWS + 2):
        state.push_row(np.full(10, value, dtype=np.uint8))
    assert state.buf[:, 0].tolist() == list(range(2, BUFFER_ROWS + 2))
    assert state.center_row == 5


def test_unsupported_lanes(bright_dot):
    with pytest.raises(UnsupportedLaneCount):
        detect_fast_batch(bright_dot, CFG, 3)


def test_too_small():
    with pytest.raises(ImageTooSmall):
        detect_fast_batch(Image.from_array(np.zeros((6, 6), dtype=np.uint8)), CFG, 8)


@pytest.mark.slow
@pytest.mark.parametrize("lanes", [1, 4, 8, 16])
def test_matches_scalar_full_resolution(lanes):
    for img in generate_synthetic_sequence(3, seed=2024):
        assert as_tuples(detect_fast_batch(img, CFG, lanes)) == as_tuples(detect_fast(img, CFG))
