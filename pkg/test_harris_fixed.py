"""
Тесты Harris в фиксированной точке: план, переполнения, граница ошибки
"""

import math

import numpy as np
import pytest

from bench_metrics import agreement
from conftest import make_random_image
from detectors.harris import HarrisConfig, detect_harris, harris_response_map
from detectors.harris_fixed import (
    FixedPointFormat,
    build_plan,
    detect_harris_fixed,
    fixed_response_map,
    format_delta,
    format_error_bound,
    shift_sum_exponents,
    truncate_shift,
)
from errors import FormatOverflow, InvalidDetectorConfig
from synthetic_corpus import generate_synthetic_sequence

# Явный порог: структурные тесты не зависят от калибровки на корпусе
CFG = HarrisConfig(response_threshold=1e17)
FMT = FixedPointFormat.parse("16.8")


class TestFormat:
    def test_parse(self):
        assert (FMT.integer_bits, FMT.fraction_bits, FMT.total_bits) == (16, 8, 24)
        assert str(FMT) == "16.8"

    @pytest.mark.parametrize("text", ["16", "a.b", "16.8.1", "1.8"])
    def test_parse_invalid(self, text):
        with pytest.raises(InvalidDetectorConfig):
            FixedPointFormat.parse(text)


class TestShifts:
    def test_truncate_towards_zero(self):
        values = np.array([-7, -1, 0, 1, 7], dtype=np.int64)
        assert truncate_shift(values, 1).tolist() == [-3, 0, 0, 0, 3]
        assert truncate_shift(-7, 1) == -3
        assert truncate_shift(5, -2) == 20

    def test_k_shift_sum(self):
        exponents = shift_sum_exponents(0.04, 32)
        approx = sum(2.0 ** -e for e in exponents)
        assert abs(approx - 0.04) <= 2.0 ** -33
        assert list(exponents) == sorted(exponents)


class TestPlan:
    def test_default_plan(self):
        plan = build_plan(CFG, FMT)
        assert plan.gradient_max == 255 * 64 * 10
        assert plan.gradient_shift == 3
        assert plan.tensor_shift == 20
        assert plan.block_area == 49
        assert abs(plan.k_approx - 0.04) <= 2.0 ** -33

    def test_tensor_format_too_wide(self):
        with pytest.raises(FormatOverflow):
            build_plan(CFG, FixedPointFormat.parse("24.12"))

    def test_trace_square_too_wide(self):
        with pytest.raises(FormatOverflow):
            build_plan(CFG, FixedPointFormat.parse("24.8"))

    def test_window_sum_overflows_accumulator(self):
        with pytest.raises(FormatOverflow):
            build_plan(CFG, FixedPointFormat.parse("20.8"), FixedPointFormat.parse("24.8"))

    def test_fraction_bits_must_match(self):
        with pytest.raises(InvalidDetectorConfig):
            build_plan(CFG, FMT, FixedPointFormat.parse("48.10"))

    def test_worst_case_delta_reported(self):
        plan = build_plan(CFG, FMT)
        assert format_error_bound(plan) > 0
        assert format_delta(plan, CFG.response_threshold) == pytest.approx(
            format_error_bound(plan) / CFG.response_threshold)
        assert format_delta(plan, 0.0) == float('inf')


class TestFixedResponse:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_error_within_bound(self, seed):
        img = make_random_image(seed, 48, 40)
        plan = build_plan(CFG, FMT)
        fixed = fixed_response_map(img, CFG, plan)
        reference = harris_response_map(img, CFG)
        diff = np.abs(fixed.to_response_map().r - reference.r)
        assert np.all(diff <= fixed.error_bound())

    def test_corners_clear_threshold(self):
        img = make_random_image(5, 48, 48)
        plan = build_plan(CFG, FMT)
        fixed = fixed_response_map(img, CFG, plan)
        bound = fixed.error_bound()
        reference = harris_response_map(img, CFG)
        off = reference.offset
        corners = detect_harris_fixed(img, CFG, FMT)
        assert corners
        for c in corners:
            y, x = c.y - off, c.x - off
            assert reference.r[y, x] > CFG.response_threshold - bound[y, x]

    def test_checker_corner_same_pixels(self, checker_corner):
        reference = [(c.x, c.y) for c in detect_harris(checker_corner, CFG)]
        fixed = [(c.x, c.y) for c in detect_harris_fixed(checker_corner, CFG, FMT)]
        assert fixed == reference
        assert any(math.hypot(x - 15.5, y - 15.5) <= 2 for x, y in reference)

    def test_constant_image(self, blank):
        plan = build_plan(CFG, FMT)
        assert not fixed_response_map(blank, CFG, plan).r_raw.any()
        assert detect_harris_fixed(blank, CFG, FMT) == []

    def test_agreement_with_float(self):
        for img in generate_synthetic_sequence(2, seed=11, width=160, height=120):
            stats = agreement(detect_harris(img, CFG), detect_harris_fixed(img, CFG, FMT), 2)
            assert stats.precision >= 0.8
            assert stats.recall >= 0.8
