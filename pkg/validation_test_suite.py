#!/usr/bin/env python3
"""
КОМПЛЕКСНАЯ ПРОВЕРКА ФРОНТЕНДА НА ПОЛНЫХ РАЗМЕРАХ
Критерии приемки 1-10: эталоны, побитовая точность, арифметика энергии, детерминизм

Запуск: python validation_test_suite.py [--quick]
Отчет: JSON в Config.REPORTS_DIR
"""

import argparse
import logging
import os
import sys
import tempfile
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime
from typing import Any, Callable, Dict, List, Optional

import numpy as np
import ujson
from scipy import ndimage

from bench_metrics import agreement, energy_per_frame, speedup
from cli import main as cli_main
from config import Config
from detectors.fast import FastConfig, detect_fast, segment_test
from detectors.fast_batch import SUPPORTED_LANES, detect_fast_batch
from detectors.harris import HarrisConfig, detect_harris, harris_response_map, structure_tensor
from detectors.harris_fixed import (
    FixedPointFormat,
    build_plan,
    detect_harris_fixed,
    fixed_response_map,
    format_delta,
)
from flow import track_lk
from image_core import Image, build_pyramid, sobel_gradients
from oracles import oracle_fast, oracle_flow, oracle_harris
from pipeline import PipelineConfig, run_pipeline
from report_validator import validate_report
from synthetic_corpus import generate_synthetic_sequence, synthetic_source

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=[logging.StreamHandler()]
)
logger = logging.getLogger(__name__)

# Нижняя граница согласия 16.8 с float Harris на синтетическом корпусе
FIXED_AGREEMENT_FLOOR = 0.99
PSD_ULPS = 8


@dataclass
class TestResult:
    """Результат одного критерия"""
    test_name: str
    criterion: int
    cases: int
    mismatches: int
    elapsed_s: float
    metrics: Dict[str, Any] = field(default_factory=dict)
    test_passed: bool = False
    notes: str = ""


@dataclass
class ValidationReport:
    """Итоговый отчет проверки"""
    report_date: str
    tests_total: int
    tests_passed: int
    tests_failed: int
    quick: bool
    test_results: List[TestResult]
    summary: str


def _as_tuples(corners) -> List[tuple]:
    return [(c.x, c.y, c.score) for c in corners]


def _random_image(seed: int, width: int, height: int) -> Image:
    rng = np.random.default_rng(seed)
    return Image.from_array(rng.integers(0, 256, size=(height, width), dtype=np.uint8))


def _smooth_texture(seed: int, size: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    values = ndimage.gaussian_filter(rng.random((size, size)), 4.0)
    values = (values - values.min()) / (values.max() - values.min())
    return 20.0 + 215.0 * values


def _to_image(values: np.ndarray) -> Image:
    return Image.from_array(np.clip(np.rint(values), 0, 255).astype(np.uint8))


class ValidationTestSuite:
    """Набор проверок, по одной на критерий приемки"""

    def __init__(self, quick: bool = False):
        # quick: уменьшенные корпуса для локальной отладки
        self.quick = quick
        self.random_count = 20 if quick else 200
        self.frame_count = 5 if quick else 100
        self.fast_cfg = FastConfig()
        self.harris_cfg = HarrisConfig()
        self._frames: Optional[List[Image]] = None

    @property
    def frames(self) -> List[Image]:
        """Синтетический корпус 752×480, генерируется один раз"""
        if self._frames is None:
            logger.info(f"🖼️ Генерация корпуса: {self.frame_count} кадров")
            self._frames = generate_synthetic_sequence(self.frame_count, seed=Config.SYNTH_SEED)
        return self._frames

    def _run(self, name: str, criterion: int, body: Callable[[TestResult], None]) -> TestResult:
        logger.info("=" * 80)
        logger.info(f"🧪 КРИТЕРИЙ {criterion}: {name}")
        logger.info("=" * 80)

        result = TestResult(test_name=name, criterion=criterion, cases=0, mismatches=0, elapsed_s=0.0)
        start = time.perf_counter()
        try:
            body(result)
            result.test_passed = result.mismatches == 0
        except Exception as e:
            logger.error(f"❌ Ошибка выполнения проверки: {e}", exc_info=True)
            result.test_passed = False
            result.notes = f"Ошибка: {e}"
        result.elapsed_s = round(time.perf_counter() - start, 3)

        status = '✅ ПРОЙДЕН' if result.test_passed else '❌ НЕ ПРОЙДЕН'
        logger.info(f"📊 {status}: случаев {result.cases}, расхождений {result.mismatches}, "
                    f"{result.elapsed_s:.1f} с")
        return result

    def test_fast_against_oracle(self) -> TestResult:
        def body(result: TestResult):
            for seed in range(self.random_count):
                img = _random_image(seed, 64, 64)
                result.cases += 1
                if _as_tuples(detect_fast(img, self.fast_cfg)) != _as_tuples(oracle_fast(img, self.fast_cfg)):
                    result.mismatches += 1
                    logger.warning(f"   ⚠️ Расхождение с эталоном, seed {seed}")

            dot = np.full((17, 17), 50, dtype=np.uint8)
            dot[8, 8] = 200
            result.cases += 2
            if _as_tuples(detect_fast(Image.from_array(dot), self.fast_cfg)) != [(8, 8, 149)]:
                result.mismatches += 1
            if detect_fast(Image.from_array(np.full((32, 32), 100, dtype=np.uint8)), self.fast_cfg):
                result.mismatches += 1

        return self._run("FAST против эталона", 1, body)

    def test_batch_bit_exact(self) -> TestResult:
        def body(result: TestResult):
            for index, img in enumerate(self.frames):
                expected = _as_tuples(detect_fast(img, self.fast_cfg))
                for lanes in SUPPORTED_LANES:
                    result.cases += 1
                    if _as_tuples(detect_fast_batch(img, self.fast_cfg, lanes)) != expected:
                        result.mismatches += 1
                        logger.warning(f"   ⚠️ Кадр {index}, линий {lanes}: результат отличается")

        return self._run("Пакетный FAST побитово равен скалярному", 2, body)

    def test_fast_score_law(self) -> TestResult:
        def body(result: TestResult):
            arc = self.fast_cfg.arc_length
            for seed in range(self.random_count):
                img = _random_image(seed, 64, 64)
                for c in detect_fast(img, self.fast_cfg):
                    result.cases += 1
                    passes = segment_test(img, c.x, c.y, c.score, arc)
                    fails = c.score >= 254 or not segment_test(img, c.x, c.y, c.score + 1, arc)
                    if not (passes and fails):
                        result.mismatches += 1

        return self._run("Закон оценки FAST", 3, body)

    def test_harris_against_oracle(self) -> TestResult:
        def body(result: TestResult):
            for seed in range(self.random_count):
                img = _random_image(seed, 32, 32)
                result.cases += 1
                if _as_tuples(detect_harris(img, self.harris_cfg)) != _as_tuples(oracle_harris(img, self.harris_cfg)):
                    result.mismatches += 1
                    logger.warning(f"   ⚠️ Расхождение с эталоном, seed {seed}")

            result.cases += 1
            blank = Image.from_array(np.full((32, 32), 100, dtype=np.uint8))
            if harris_response_map(blank, self.harris_cfg).r.any():
                result.mismatches += 1

            result.cases += 1
            edge = np.full((32, 32), 50, dtype=np.uint8)
            edge[:, 16:] = 200
            response = harris_response_map(Image.from_array(edge), self.harris_cfg)
            columns = [x - response.offset for x in (15, 16)]
            if not np.all(response.r[:, columns] < 0) or detect_harris(Image.from_array(edge), self.harris_cfg):
                result.mismatches += 1

        return self._run("Harris против эталона", 4, body)

    def test_tensor_psd(self) -> TestResult:
        def body(result: TestResult):
            worst = 0.0
            for img in self.frames:
                tensor = structure_tensor(sobel_gradients(img, self.harris_cfg.sobel_size),
                                          self.harris_cfg.block_size)
                det = tensor.a * tensor.c - tensor.b * tensor.b
                ulp = np.spacing(np.maximum(tensor.a * tensor.c, tensor.b * tensor.b))
                result.cases += int(det.size)
                bad = (tensor.a < 0) | (tensor.c < 0) | (det < -PSD_ULPS * ulp)
                result.mismatches += int(bad.sum())
                worst = min(worst, float((det / ulp).min()))
            result.metrics['worst_det_ulps'] = worst

        return self._run("Тензор структуры положительно полуопределен", 5, body)

    def test_fixed_point(self) -> TestResult:
        def body(result: TestResult):
            fmt = FixedPointFormat.parse(Config.FIXED_FORMAT)
            plan = build_plan(self.harris_cfg, fmt)
            delta = format_delta(plan, self.harris_cfg.response_threshold)
            matched = size_a = size_b = 0

            for img in self.frames:
                reference = harris_response_map(img, self.harris_cfg)
                fixed = fixed_response_map(img, self.harris_cfg, plan)
                bound = fixed.error_bound()
                off = reference.offset
                corners = detect_harris_fixed(img, self.harris_cfg, fmt)
                for c in corners:
                    result.cases += 1
                    y, x = c.y - off, c.x - off
                    if not reference.r[y, x] > self.harris_cfg.response_threshold - bound[y, x]:
                        result.mismatches += 1
                stats = agreement(detect_harris(img, self.harris_cfg), corners, Config.AGREEMENT_RADIUS)
                matched += stats.matched
                size_a += stats.size_a
                size_b += stats.size_b

            precision = matched / size_b if size_b else 1.0
            recall = matched / size_a if size_a else 1.0
            result.metrics.update({'format': str(fmt), 'delta': delta, 'precision': round(precision, 3),
                                   'recall': round(recall, 3), 'floor': FIXED_AGREEMENT_FLOOR})
            logger.info(f"   🎯 Согласие {fmt} с float: precision {precision:.3f}, recall {recall:.3f}, "
                        f"δ худшего случая {delta:.3g}")
            if delta >= 1:
                notes = [f"δ формата {delta:.3g} ≥ 1 делает границу порог×(1−δ) пустой, "
                         f"поэтому проверяется попиксельная граница ошибки"]
            else:
                notes = [f"δ формата {delta:.3g}; попиксельная граница ошибки не слабее порог×(1−δ)"]
            if min(precision, recall) < FIXED_AGREEMENT_FLOOR:
                result.mismatches += 1
                notes.append(f"Согласие ниже {FIXED_AGREEMENT_FLOOR}")
            result.notes = "; ".join(notes)

        return self._run("Harris в фиксированной точке", 6, body)

    def test_energy_arithmetic(self) -> TestResult:
        def body(result: TestResult):
            checks = {
                'ftfast_energy_mj': (round(energy_per_frame(8.8, 0.26), 3), 2.288),
                'vitis_energy_mj': (round(energy_per_frame(10.8, 0.23), 3), 2.484),
                'mh01_speedup': (round(speedup(2.41, 0.26), 3), 9.269),
            }
            for name, (actual, expected) in checks.items():
                result.cases += 1
                result.metrics[name] = actual
                if actual != expected:
                    result.mismatches += 1
                    logger.warning(f"   ⚠️ {name}: {actual} вместо {expected}")
            result.cases += 1
            if not 2.2 <= energy_per_frame(8.8, 0.26) <= 2.3:
                result.mismatches += 1

        return self._run("Арифметика энергии и ускорения", 7, body)

    def test_breakdown(self) -> TestResult:
        def body(result: TestResult):
            source = synthetic_source(self.frame_count, seed=Config.SYNTH_SEED)
            report = run_pipeline(source, PipelineConfig(detector='fast'))
            valid, problems = validate_report(report)
            result.cases = 1
            if not valid:
                result.mismatches = len(problems)
                result.notes = "; ".join(problems)
            result.metrics.update({'total_ms': report.total_ms, 'fps': report.fps,
                                   'detection_share': report.detection_share,
                                   'stage_share': report.stage_share})
            logger.info(f"   ⏱️ Доля детекции: {report.detection_share:.1%}")

        return self._run("Разбивка времени по этапам", 8, body)

    def test_flow(self) -> TestResult:
        def body(result: TestResult):
            canvas = _smooth_texture(5, 136)
            source = canvas[4:132, 4:132]
            center = (64.0, 64.0)
            pyr = build_pyramid(_to_image(source), 3)

            result.cases += 1
            same = track_lk(pyr, pyr, [center])[0]
            if not same.tracked or max(abs(same.x - 64.0), abs(same.y - 64.0)) > 1e-6:
                result.mismatches += 1

            result.cases += 1
            shifted = build_pyramid(_to_image(canvas[4:132, 2:130]), 3)
            moved = track_lk(pyr, shifted, [center])[0]
            if not moved.tracked or abs(moved.x - 66.0) > 0.1 or abs(moved.y - 64.0) > 0.1:
                result.mismatches += 1

            result.cases += 1
            nxt = _to_image(ndimage.shift(source, shift=(-0.7, 0.4), order=1, mode='nearest'))
            sub = track_lk(pyr, build_pyramid(nxt, 3), [center])[0]
            expected = oracle_flow(_to_image(source), nxt, center)
            error = max(abs(sub.x - 64.0 - expected[0]), abs(sub.y - 64.0 - expected[1]))
            result.metrics['subpixel_error_px'] = round(error, 4)
            if not sub.tracked or error > 0.2:
                result.mismatches += 1

        return self._run("Корректность оптического потока", 9, body)

    def test_determinism(self) -> TestResult:
        def body(result: TestResult):
            with tempfile.TemporaryDirectory() as tmp:
                frames = str(min(self.frame_count, 10))
                root = os.path.join(tmp, 'seq')
                if cli_main(['synth', root, '--frames', frames]) != 0:
                    raise RuntimeError("synth завершился с ошибкой")

                summaries, corner_dirs = [], []
                for run in ('a', 'b'):
                    out = os.path.join(tmp, f'{run}.json')
                    corners_dir = os.path.join(tmp, f'corners_{run}')
                    if cli_main(['bench', root, '--format', 'json', '--out', out,
                                 '--corners-dir', corners_dir]) != 0:
                        raise RuntimeError("bench завершился с ошибкой")
                    with open(out, encoding='utf-8') as f:
                        payload = ujson.load(f)
                    summaries.append([(row['frame'], row['corners'], row['tracked']) for row in payload['frames']])
                    corner_dirs.append(corners_dir)

                for name in sorted(os.listdir(corner_dirs[0])):
                    result.cases += 1
                    with open(os.path.join(corner_dirs[0], name), 'rb') as a, \
                            open(os.path.join(corner_dirs[1], name), 'rb') as b:
                        if a.read() != b.read():
                            result.mismatches += 1
                result.cases += 1
                if summaries[0] != summaries[1]:
                    result.mismatches += 1

        return self._run("Детерминизм end-to-end", 10, body)

    def run_all_tests(self) -> ValidationReport:
        logger.info("\n" + "=" * 80)
        logger.info("🚀 ЗАПУСК ПРОВЕРКИ КРИТЕРИЕВ ПРИЕМКИ")
        logger.info(f"Дата: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}, режим: "
                    f"{'быстрый' if self.quick else 'полный'}")
        logger.info("=" * 80 + "\n")

        test_results = [
            self.test_fast_against_oracle(),
            self.test_batch_bit_exact(),
            self.test_fast_score_law(),
            self.test_harris_against_oracle(),
            self.test_tensor_psd(),
            self.test_fixed_point(),
            self.test_energy_arithmetic(),
            self.test_breakdown(),
            self.test_flow(),
            self.test_determinism(),
        ]

        tests_total = len(test_results)
        tests_passed = sum(1 for t in test_results if t.test_passed)
        tests_failed = tests_total - tests_passed
        failed = ", ".join(str(t.criterion) for t in test_results if not t.test_passed) or "—"

        summary = f"""
ИТОГОВЫЙ ОТЧЕТ ПРОВЕРКИ:

Критериев проверено: {tests_total}
Пройдено: {tests_passed}
Не пройдено: {tests_failed} ({failed})

СТАТУС: {'✅ ВСЕ КРИТЕРИИ ВЫПОЛНЕНЫ' if tests_failed == 0 else '⚠️ ЕСТЬ ПРОБЛЕМЫ'}
"""
        report = ValidationReport(
            report_date=datetime.now().strftime('%Y-%m-%d %H:%M:%S'),
            tests_total=tests_total,
            tests_passed=tests_passed,
            tests_failed=tests_failed,
            quick=self.quick,
            test_results=test_results,
            summary=summary,
        )
        logger.info(summary)
        return report

    def save_report(self, report: ValidationReport, filepath: str = None) -> str:
        """Сохранение отчета в JSON"""
        if filepath is None:
            os.makedirs(Config.REPORTS_DIR, exist_ok=True)
            filepath = os.path.join(Config.REPORTS_DIR,
                                    f'validation_report_{datetime.now().strftime("%Y%m%d_%H%M%S")}.json')

        with open(filepath, 'w', encoding='utf-8') as f:
            f.write(ujson.dumps(asdict(report), ensure_ascii=False, indent=2))

        logger.info(f"💾 Отчет сохранен: {filepath}")
        return filepath


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(description="Проверка критериев приемки FeatFront Bench")
    parser.add_argument('--quick', action='store_true', help="уменьшенные корпуса")
    parser.add_argument('--out', default=None, help="путь JSON-отчета")
    args = parser.parse_args(argv)

    suite = ValidationTestSuite(quick=args.quick)
    report = suite.run_all_tests()
    report_path = suite.save_report(report, args.out)

    logger.info("✅ ПРОВЕРКА ЗАВЕРШЕНА")
    logger.info(f"📊 Отчет: {report_path}")
    return 0 if report.tests_failed == 0 else 1


if __name__ == '__main__':
    sys.exit(main())
