#!/usr/bin/env python3
"""
FeatFront Bench - стенд для профилирования фронтенда визуальной локализации

КОМАНДЫ:
- detect   — детекция углов на одном изображении (CSV x,y,score,level)
- bench    — разбивка времени фронтенда по этапам, FPS, энергия на кадр
- compare  — согласие двух детекторов по кадрам
- pyramid  — запись уровней пирамиды в PGM
- synth    — генерация синтетического корпуса в раскладке EuRoC

КОДЫ ВОЗВРАТА: 0 — успех, 2 — некорректные аргументы или конфигурация,
3 — ошибка ввода-вывода, 4 — ошибка детектора/библиотеки.
Данные выводятся в stdout, диагностика — в stderr.
"""

import argparse
import dataclasses
import logging
import os
import sys
import time
from typing import List, Optional

import colorlog
import ujson

from config import Config
from detectors import DETECTOR_NAMES, detect_on_pyramid, make_detector
from detectors.corner import corners_to_frame, write_corners_csv
from detectors.harris_fixed import FixedPointFormat
from errors import (
    ConfigError,
    EvenKernel,
    FeatFrontError,
    InvalidDetectorConfig,
    IoFailure,
    MalformedHeader,
    MissingIndex,
    TooManyLevels,
    TruncatedData,
    UnreadableFrame,
    UnsupportedMaxval,
)
from image_core import build_pyramid, gaussian_blur, load_pgm, save_pgm
from pipeline import PipelineConfig, compare_detectors, load_pipeline_config, run_pipeline
from report_validator import validate_report
from report_writer import REPORT_FORMATS, BreakdownReportWriter, emit_report
from reference_data import reference_summary
from bench_metrics import load_power_model
from sequence_loader import SequenceSource, load_euroc_sequence
from synthetic_corpus import synthetic_source, write_synthetic_sequence

logger = logging.getLogger("featfront")

EXIT_OK = 0
EXIT_BAD_ARGS = 2
EXIT_IO = 3
EXIT_LIBRARY = 4

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def setup_logging(level: str) -> None:
    """Цветной лог в stderr и, если задан LOG_FILE, обычный лог в файл"""
    handler = colorlog.StreamHandler(sys.stderr)
    handler.setFormatter(colorlog.ColoredFormatter(
        '%(log_color)s%(asctime)s - %(name)s - %(levelname)s%(reset)s - %(message)s',
        log_colors={
            'DEBUG': 'cyan',
            'INFO': 'green',
            'WARNING': 'yellow',
            'ERROR': 'red',
            'CRITICAL': 'bold_red',
        },
    ))
    handlers: List[logging.Handler] = [handler]
    if Config.LOG_FILE:
        file_handler = logging.FileHandler(Config.LOG_FILE)
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handlers.append(file_handler)
    logging.basicConfig(level=getattr(logging, level.upper(), logging.INFO), handlers=handlers, force=True)


def exit_code_for(error: Exception) -> int:
    """Отображение исключений на коды возврата"""
    # Параметры пирамиды и ядра размытия задаются флагами
    if isinstance(error, (ConfigError, InvalidDetectorConfig, TooManyLevels, EvenKernel)):
        return EXIT_BAD_ARGS
    if isinstance(error, (MalformedHeader, TruncatedData, UnsupportedMaxval,
                          UnreadableFrame, MissingIndex, IoFailure, OSError)):
        return EXIT_IO
    # ImageTooSmall, KernelTooLarge и остальные ошибки детекторов и стенда
    return EXIT_LIBRARY


def fixed_format(text: str) -> FixedPointFormat:
    try:
        return FixedPointFormat.parse(text)
    except InvalidDetectorConfig as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def add_detector_flags(parser: argparse.ArgumentParser, levels_default: Optional[int]) -> None:
    parser.add_argument('--detector', choices=DETECTOR_NAMES, default=None,
                        help="детектор (по умолчанию fast)")
    parser.add_argument('--config', '--pipeline-config', dest='config', default=None,
                        help="TOML с параметрами конвейера и детекторов")
    parser.add_argument('--threshold', type=int, default=None, help="порог FAST")
    parser.add_argument('--lanes', type=int, choices=(1, 4, 8, 16), default=None, help="линий пакетного FAST")
    parser.add_argument('--fmt', type=fixed_format, default=None, help="формат фиксированной точки I.F")
    parser.add_argument('--levels', type=int, default=levels_default, help="уровней пирамиды")
    parser.add_argument('--blur', action='store_true', help="гауссово размытие перед пирамидой")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='featfront', description="Стенд фронтенда визуальной локализации")
    parser.add_argument('--log-level', default=Config.LOG_LEVEL,
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'], type=str.upper)
    sub = parser.add_subparsers(dest='command', required=True)

    detect = sub.add_parser('detect', help="детекция углов на изображении")
    detect.add_argument('image')
    add_detector_flags(detect, levels_default=1)
    detect.add_argument('--out', default=None, help="CSV углов (по умолчанию stdout)")

    bench = sub.add_parser('bench', help="разбивка времени по этапам")
    bench.add_argument('sequence', nargs='?', default=None, help="корень последовательности EuRoC")
    bench.add_argument('--synthetic', type=int, default=None, metavar='N',
                       help="вместо каталога: N синтетических кадров в памяти")
    bench.add_argument('--seed', type=int, default=Config.SYNTH_SEED)
    add_detector_flags(bench, levels_default=None)
    bench.add_argument('--power-config', default=None)
    bench.add_argument('--power-preset', default=None)
    bench.add_argument('--format', choices=REPORT_FORMATS, default='markdown')
    bench.add_argument('--out', default=None)
    bench.add_argument('--corners-dir', default=None, help="каталог для CSV углов каждого кадра")
    bench.add_argument('--reference', action='store_true', help="вывести опубликованную сводку")

    compare = sub.add_parser('compare', help="согласие двух детекторов")
    compare.add_argument('input', help="изображение PGM или корень последовательности")
    compare.add_argument('--detector-a', choices=DETECTOR_NAMES, default='harris')
    compare.add_argument('--detector-b', choices=DETECTOR_NAMES, default='harris_fixed')
    compare.add_argument('--radius', type=float, default=Config.AGREEMENT_RADIUS)
    compare.add_argument('--config', default=None)
    compare.add_argument('--format', choices=('csv', 'json'), default='csv')
    compare.add_argument('--out', default=None)

    pyramid = sub.add_parser('pyramid', help="уровни пирамиды в PGM")
    pyramid.add_argument('image')
    pyramid.add_argument('--levels', type=int, default=Config.PYRAMID_LEVELS)
    pyramid.add_argument('--blur', action='store_true')
    pyramid.add_argument('--out', required=True, help="каталог для level_<L>.pgm")

    synth = sub.add_parser('synth', help="синтетический корпус EuRoC")
    synth.add_argument('out')
    synth.add_argument('--frames', type=int, default=100)
    synth.add_argument('--seed', type=int, default=Config.SYNTH_SEED)
    synth.add_argument('--width', type=int, default=Config.SYNTH_WIDTH)
    synth.add_argument('--height', type=int, default=Config.SYNTH_HEIGHT)
    return parser


def resolve_config(args) -> PipelineConfig:
    """Конфигурация из TOML (или по умолчанию) с переопределениями из флагов"""
    cfg = load_pipeline_config(args.config) if args.config else PipelineConfig()
    settings = cfg.detectors
    try:
        if args.threshold is not None:
            settings = dataclasses.replace(settings, fast=dataclasses.replace(settings.fast, threshold=args.threshold))
        if args.lanes is not None:
            settings = dataclasses.replace(settings, lanes=args.lanes)
        if args.fmt is not None:
            settings = dataclasses.replace(settings, fmt=args.fmt)
        changes = {'detectors': settings}
        if args.detector is not None:
            changes['detector'] = args.detector
        if args.levels is not None:
            changes['levels'] = args.levels
        if args.blur:
            changes['blur'] = True
        return dataclasses.replace(cfg, **changes)
    except InvalidDetectorConfig as e:
        raise ConfigError(str(e)) from e


def cmd_detect(args) -> int:
    cfg = resolve_config(args)
    img = load_pgm(args.image)
    detector = make_detector(cfg.detector, cfg.detectors)

    start = time.perf_counter()
    if cfg.blur:
        img = gaussian_blur(img, cfg.blur_ksize, cfg.blur_sigma)
    if cfg.levels > 1:
        corners = detect_on_pyramid(build_pyramid(img, cfg.levels), detector)
    else:
        corners = detector(img)
    elapsed_ms = (time.perf_counter() - start) * 1000.0

    summary = f"corners={len(corners)} elapsed_ms={elapsed_ms:.3f}"
    if args.out:
        write_corners_csv(corners, args.out)
        print(summary)
    else:
        sys.stdout.write(corners_to_frame(corners).to_csv(index=False, lineterminator='\n'))
        logger.info(summary)
    return EXIT_OK


def load_source(args) -> SequenceSource:
    if args.synthetic is not None:
        return synthetic_source(args.synthetic, seed=args.seed)
    if args.sequence is None:
        raise ConfigError("Укажите каталог последовательности или --synthetic N")
    return load_euroc_sequence(args.sequence)


def cmd_bench(args) -> int:
    cfg = resolve_config(args)
    power = load_power_model(args.power_config, args.power_preset) if args.power_config else None
    source = load_source(args)

    corners_per_frame = [] if args.corners_dir else None
    report = run_pipeline(source, cfg, power=power, corners_out=corners_per_frame)
    valid, problems = validate_report(report)
    if not valid:
        logger.warning(f"⚠️ Отчет не прошел проверку: {'; '.join(problems)}")

    if corners_per_frame is not None:
        for index, corners in enumerate(corners_per_frame):
            write_corners_csv(corners, os.path.join(args.corners_dir, f"frame_{index:05d}.csv"))

    if args.out:
        emit_report(report, args.format, args.out)
        print(f"frames={report.n_frames} total_ms={report.total_ms:.3f} fps={report.fps:.3f} "
              f"detection_share={report.detection_share:.3f}")
    else:
        sys.stdout.write(BreakdownReportWriter().render_markdown(report))

    if args.reference:
        print(reference_summary().to_string(index=False))
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = load_pipeline_config(args.config) if args.config else PipelineConfig()
    if os.path.isdir(args.input):
        source = load_euroc_sequence(args.input)
    else:
        source = SequenceSource.from_images([load_pgm(args.input)], root=args.input)

    table, aggregate = compare_detectors(source, args.detector_a, args.detector_b,
                                         args.radius, cfg.detectors)
    if args.format == 'csv':
        payload = table.to_csv(index=False, float_format='%.3f', lineterminator='\n')
    else:
        payload = ujson.dumps({'aggregate': aggregate, 'frames': table.to_dict(orient='records')},
                              indent=2, ensure_ascii=False) + '\n'

    if args.out:
        try:
            with open(args.out, 'w', encoding='utf-8') as f:
                f.write(payload)
        except OSError as e:
            raise IoFailure(f"Не удалось записать {args.out}: {e}") from e
        print(f"precision={aggregate['precision']:.3f} recall={aggregate['recall']:.3f} "
              f"matched={aggregate['matched']}")
    else:
        sys.stdout.write(payload)
    return EXIT_OK


def cmd_pyramid(args) -> int:
    img = load_pgm(args.image)
    if args.blur:
        img = gaussian_blur(img, Config.BLUR_KSIZE, Config.BLUR_SIGMA)
    pyramid = build_pyramid(img, args.levels)
    for level, level_img in enumerate(pyramid.levels):
        path = os.path.join(args.out, f"level_{level}.pgm")
        save_pgm(level_img, path)
        print(f"{path} {level_img.width}x{level_img.height}")
    return EXIT_OK


def cmd_synth(args) -> int:
    source = write_synthetic_sequence(args.out, args.frames, seed=args.seed,
                                      width=args.width, height=args.height)
    print(f"frames={len(source)} root={args.out}")
    return EXIT_OK


COMMANDS = {
    'detect': cmd_detect,
    'bench': cmd_bench,
    'compare': cmd_compare,
    'pyramid': cmd_pyramid,
    'synth': cmd_synth,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK

    setup_logging(args.log_level)
    try:
        return COMMANDS[args.command](args)
    except (FeatFrontError, OSError) as e:
        code = exit_code_for(e)
        logger.error(f"❌ {type(e).__name__}: {e}")
        return code


if __name__ == '__main__':
    sys.exit(main())
