"""
Тесты скалярного FAST: segment test, оценка максимального порога, NMS
"""

import numpy as np
import pytest

from conftest import make_random_image
from detectors.fast import (
    FastConfig,
    detect_fast,
    detect_fast_pyramid,
    fast_score,
    segment_test,
)
from errors import ImageTooSmall, InvalidDetectorConfig, NotACorner, OutOfInterior
from image_core import Image, build_pyramid
from oracles import oracle_fast, oracle_fast_score, oracle_segment_test

CFG = FastConfig(arc_length=9, threshold=10, nms_window=3)


def as_tuples(corners):
    return [(c.x, c.y, c.score) for c in corners]


class TestSegmentTest:
    def test_bright_dot(self, bright_dot):
        assert segment_test(bright_dot, 8, 8, 10)

    def test_out_of_interior(self, bright_dot):
        with pytest.raises(OutOfInterior):
            segment_test(bright_dot, 2, 8, 10)
        with pytest.raises(OutOfInterior):
            segment_test(bright_dot, 8, 14, 10)

    def test_matches_arc_enumeration(self):
        rng = np.random.default_rng(42)
        images = [make_random_image(seed, 32, 32) for seed in range(10)]
        rows = [img.to_array().tolist() for img in images]
        for _ in range(1000):
            k = int(rng.integers(0, len(images)))
            x, y = (int(v) for v in rng.integers(3, 29, size=2))
            t = int(rng.integers(1, 80))
            assert segment_test(images[k], x, y, t) == oracle_segment_test(rows[k], x, y, t)


class TestScore:
    def test_bright_dot_score(self, bright_dot):
        assert fast_score(bright_dot, 8, 8, CFG) == 149

    def test_not_a_corner(self, blank):
        with pytest.raises(NotACorner):
            fast_score(blank, 10, 10, CFG)

    def test_matches_linear_scan(self):
        checked = 0
        for seed in range(4):
            img = make_random_image(100 + seed, 32, 32)
            rows = img.to_array().tolist()
            for c in detect_fast(img, CFG):
                assert fast_score(img, c.x, c.y, CFG) == oracle_fast_score(rows, c.x, c.y, CFG.threshold)
                checked += 1
        assert checked > 0

    def test_score_law(self):
        for seed in range(5):
            img = make_random_image(200 + seed, 48, 48)
            for c in detect_fast(img, CFG):
                assert segment_test(img, c.x, c.y, c.score)
                assert not segment_test(img, c.x, c.y, c.score + 1)
                assert c.score >= CFG.threshold


class TestDetectFast:
    def test_bright_dot(self, bright_dot):
        assert as_tuples(detect_fast(bright_dot, CFG)) == [(8, 8, 149)]

    def test_blank(self, blank):
        assert detect_fast(blank, CFG) == []

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_matches_oracle(self, seed):
        img = make_random_image(seed, 40, 40)
        assert as_tuples(detect_fast(img, CFG)) == as_tuples(oracle_fast(img, CFG))

    def test_matches_oracle_wide_nms(self):
        cfg = FastConfig(arc_length=12, threshold=20, nms_window=5)
        img = make_random_image(9, 40, 40)
        assert as_tuples(detect_fast(img, cfg)) == as_tuples(oracle_fast(img, cfg))

    def test_sorted_and_interior(self):
        img = make_random_image(17, 64, 64)
        corners = detect_fast(img, CFG)
        assert [(c.y, c.x) for c in corners] == sorted((c.y, c.x) for c in corners)
        for c in corners:
            assert 3 <= c.x < 61 and 3 <= c.y < 61
            assert c.score > 0
            assert c.level == 0

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_intensity_shift(self, seed):
        rng = np.random.default_rng(seed)
        arr = rng.integers(0, 201, size=(40, 40), dtype=np.uint8)
        shifted = arr + np.uint8(30)
        assert as_tuples(detect_fast(Image.from_array(shifted), CFG)) == \
            as_tuples(detect_fast(Image.from_array(arr), CFG))

    def test_count_non_increasing_in_threshold(self):
        img = make_random_image(9, 48, 48)
        counts = [len(detect_fast(img, FastConfig(threshold=t))) for t in (5, 10, 20, 40, 80)]
        assert counts == sorted(counts, reverse=True)
        assert counts[0] > 0

    def test_too_small(self):
        with pytest.raises(ImageTooSmall):
            detect_fast(Image.from_array(np.zeros((6, 20), dtype=np.uint8)), CFG)

    def test_pyramid_levels(self):
        img = make_random_image(4, 64, 64)
        corners = detect_fast_pyramid(build_pyramid(img, 3), CFG)
        assert {c.level for c in corners} <= {0, 1, 2}
        level0 = [c for c in corners if c.level == 0]
        assert as_tuples(level0) == as_tuples(detect_fast(img, CFG))

    def test_pyramid_skips_small_levels(self):
        img = make_random_image(4, 16, 16)
        corners = detect_fast_pyramid(build_pyramid(img, 3), CFG)
        assert all(c.level < 2 for c in corners)


class TestFastConfig:
    @pytest.mark.parametrize("kwargs", [
        {'arc_length': 8},
        {'arc_length': 17},
        {'threshold': 0},
        {'threshold': 255},
        {'nms_window': 2},
        {'score_method': 'sum_of_differences'},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(InvalidDetectorConfig):
            FastConfig(**kwargs)

    def test_defaults(self):
        cfg = FastConfig()
        assert (cfg.arc_length, cfg.threshold, cfg.nms_window) == (9, 10, 3)
