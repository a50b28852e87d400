"""
Тесты Harris (float): тензор структуры, отклик, порог и NMS
"""

import math
from dataclasses import replace

import numpy as np
import pytest

from config import Config
from conftest import make_random_image
from detectors.fast import FastConfig, detect_fast
from detectors.harris import (
    HarrisConfig,
    calibrate_response_threshold,
    detect_harris,
    harris_response_map,
    peak_responses,
    response_to_pgm,
    structure_tensor,
    structure_tensor_sums,
)
from errors import BlockTooLarge, ImageTooSmall, InvalidDetectorConfig
from image_core import GradientField, Image, load_pgm, sobel_gradients
from oracles import oracle_harris, oracle_response, oracle_structure_tensor
from synthetic_corpus import generate_synthetic_sequence

# Явный порог: структурные тесты не зависят от калибровки на корпусе
CFG = HarrisConfig(response_threshold=1e17)


def as_tuples(corners):
    return [(c.x, c.y, c.score) for c in corners]


def random_gradients(seed: int, size: int = 12) -> GradientField:
    rng = np.random.default_rng(seed)
    gx = rng.integers(-20000, 20000, size=(size, size)).astype(np.int64)
    gy = rng.integers(-20000, 20000, size=(size, size)).astype(np.int64)
    return GradientField(width=size, height=size, margin=0, gx=gx, gy=gy)


class TestStructureTensor:
    def test_matches_double_loop(self):
        grads = random_gradients(3)
        a, b, c = structure_tensor_sums(grads, 7)
        gx = {(x, y): int(grads.gx[y, x]) for y in range(12) for x in range(12)}
        gy = {(x, y): int(grads.gy[y, x]) for y in range(12) for x in range(12)}
        positions = [(x, y) for y in range(3, 9) for x in range(3, 9)]
        expected = oracle_structure_tensor(gx, gy, 7, positions)
        assert a.shape == (6, 6)
        for (x, y), (ea, eb, ec) in expected.items():
            assert (a[y - 3, x - 3], b[y - 3, x - 3], c[y - 3, x - 3]) == (ea, eb, ec)

    def test_block_too_large(self):
        with pytest.raises(BlockTooLarge):
            structure_tensor_sums(random_gradients(1, size=6), 7)

    def test_even_block(self):
        with pytest.raises(InvalidDetectorConfig):
            structure_tensor_sums(random_gradients(1), 4)

    def test_positive_semidefinite(self):
        for seed in range(5):
            img = make_random_image(seed, 48, 48)
            tensor = structure_tensor(sobel_gradients(img, 7), 7)
            assert np.all(tensor.a >= 0)
            assert np.all(tensor.c >= 0)
            det = tensor.a * tensor.c - tensor.b * tensor.b
            ulp = np.spacing(np.maximum(tensor.a * tensor.c, tensor.b * tensor.b))
            assert np.all(det >= -8 * ulp)


class TestResponse:
    def test_constant_image_is_zero(self, blank):
        assert not harris_response_map(blank, CFG).r.any()

    def test_matches_scalar_formula(self):
        img = make_random_image(6, 24, 24)
        response = harris_response_map(img, CFG)
        tensor = structure_tensor(sobel_gradients(img, 7), 7)
        for y, x in [(0, 0), (3, 7), (11, 11)]:
            expected = oracle_response(tensor.a[y, x], tensor.b[y, x], tensor.c[y, x], CFG.k)
            assert response.r[y, x] == pytest.approx(expected, rel=1e-12, abs=1e-6)

    def test_step_edge_is_negative(self):
        arr = np.full((32, 32), 50, dtype=np.uint8)
        arr[:, 16:] = 200
        response = harris_response_map(Image.from_array(arr), CFG)
        off = response.offset
        for x in (15, 16):
            assert np.all(response.r[:, x - off] < 0)
        assert np.all(response.r <= 0)
        assert detect_harris(Image.from_array(arr), CFG) == []

    def test_offset_is_margin(self, blank):
        assert harris_response_map(blank, CFG).offset == 6


class TestDetectHarris:
    def test_checker_corner(self, checker_corner):
        corners = detect_harris(checker_corner, CFG)
        assert corners
        near = [c for c in corners if math.hypot(c.x - 15.5, c.y - 15.5) <= 2]
        assert near
        assert all(c.score > 0 for c in near)
        assert as_tuples(corners) == as_tuples(oracle_harris(checker_corner, CFG))

    @pytest.mark.parametrize("seed", [0, 1, 2, 3])
    def test_matches_oracle(self, seed):
        img = make_random_image(seed, 32, 32)
        assert as_tuples(detect_harris(img, CFG)) == as_tuples(oracle_harris(img, CFG))

    def test_matches_oracle_odd_window(self):
        cfg = HarrisConfig(sobel_size=3, block_size=5, nms_window=3, response_threshold=1e9)
        img = make_random_image(8, 32, 32)
        assert as_tuples(detect_harris(img, cfg)) == as_tuples(oracle_harris(img, cfg))

    def test_blank(self, blank):
        assert detect_harris(blank, CFG) == []

    def test_too_small(self):
        img = Image.from_array(np.zeros((12, 40), dtype=np.uint8))
        with pytest.raises(ImageTooSmall):
            detect_harris(img, CFG)


class TestHarrisConfig:
    @pytest.mark.parametrize("kwargs", [
        {'k': 0.0},
        {'k': 0.3},
        {'sobel_size': 5},
        {'block_size': 6},
        {'nms_window': 4},
        {'response_threshold': -1.0},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(InvalidDetectorConfig):
            HarrisConfig(**kwargs)

    def test_defaults(self):
        assert (CFG.k, CFG.sobel_size, CFG.block_size, CFG.nms_window) == (0.04, 7, 7, 2)
        assert CFG.min_side == 13


def test_response_dump(tmp_path, checker_corner):
    path = str(tmp_path / "response.pgm")
    response_to_pgm(harris_response_map(checker_corner, CFG), path)
    dumped = load_pgm(path)
    assert (dumped.width, dumped.height) == (20, 20)
    assert dumped.to_array().max() == 255


def test_count_non_increasing_in_threshold():
    img = generate_synthetic_sequence(1, seed=3, width=160, height=120)[0]
    previous = None
    for threshold in [0.0, 1e15, 1e17, 1e19, 1e21, 1e23]:
        corners = {(c.x, c.y) for c in detect_harris(img, replace(CFG, response_threshold=threshold))}
        if previous is not None:
            assert corners <= previous
        previous = corners


class TestCalibration:
    FRAMES = generate_synthetic_sequence(2, seed=7, width=160, height=120)
    BASE = HarrisConfig(response_threshold=0.0)

    def test_count_within_fast_budget(self):
        threshold = calibrate_response_threshold(self.FRAMES, FastConfig(), self.BASE, 1.0)
        cfg = replace(self.BASE, response_threshold=threshold)
        n_fast = sum(len(detect_fast(img, FastConfig())) for img in self.FRAMES)
        n_harris = sum(len(detect_harris(img, cfg)) for img in self.FRAMES)
        assert 0 < n_harris <= n_fast

    def test_corners_are_peaks_above_threshold(self):
        img = self.FRAMES[0]
        peaks = peak_responses(harris_response_map(img, self.BASE), self.BASE.nms_window)
        threshold = float(np.median(peaks))
        corners = detect_harris(img, replace(self.BASE, response_threshold=threshold))
        assert len(corners) == int(np.count_nonzero(peaks > threshold))

    def test_generous_ratio_keeps_every_peak(self):
        assert calibrate_response_threshold(self.FRAMES, FastConfig(), self.BASE, 1e6) == 0.0

    @pytest.mark.skipif(Config.HARRIS_RESPONSE_THRESHOLD is not None,
                        reason="порог задан через окружение")
    def test_default_within_twice_fast_on_corpus(self):
        cfg = HarrisConfig()
        for img in generate_synthetic_sequence(4, seed=Config.SYNTH_SEED):
            n_fast = len(detect_fast(img, FastConfig()))
            n_harris = len(detect_harris(img, cfg))
            assert 0 < n_harris <= 2 * n_fast
