"""
Конвейер фронтенда локализации и разбивка времени по этапам

Каждый кадр проходит три замеряемых этапа: предобработка (размытие и
пирамида), детекция углов на всех уровнях, оптический поток углов
предыдущего кадра. Этап повторяется repetitions раз, берется медиана.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import pandas as pd

from bench_metrics import PowerModel, agreement, energy_per_frame
from config import Config, load_toml_file, reject_unknown_keys
from detectors import DETECTOR_NAMES, DetectorSettings, detect_on_pyramid, make_detector
from detectors.corner import Corner
from detectors.fast import FastConfig
from detectors.harris import HarrisConfig
from detectors.harris_fixed import FixedPointFormat
from errors import ConfigError, EmptySequence, FeatFrontError, NonPositiveTime
from flow import LKParams, track_lk
from image_core import Image, Pyramid, build_pyramid, gaussian_blur
from sequence_loader import SequenceSource
from stage_timer import STAGE_ORDER, Stage, StageTimer

logger = logging.getLogger(__name__)

REPORT_DECIMALS = 3
MAX_TRACKED_POINTS = 500

PIPELINE_KEYS = ('detector', 'levels', 'repetitions', 'warmup', 'max_tracks')
BLUR_KEYS = ('enabled', 'ksize', 'sigma')
FAST_KEYS = ('arc_length', 'threshold', 'nms_window', 'lanes')
HARRIS_KEYS = ('k', 'response_threshold', 'sobel_size', 'block_size', 'nms_window',
               'format', 'acc_format')
FLOW_KEYS = ('window', 'max_iters', 'eps')


def _q(value: float) -> float:
    return round(float(value), REPORT_DECIMALS)


@dataclass(frozen=True)
class PipelineConfig:
    """Конфигурация прогона стенда"""
    detector: str = 'fast'
    detectors: DetectorSettings = field(default_factory=DetectorSettings)
    blur: bool = field(default_factory=lambda: Config.BLUR_ENABLED)
    blur_ksize: int = field(default_factory=lambda: Config.BLUR_KSIZE)
    blur_sigma: float = field(default_factory=lambda: Config.BLUR_SIGMA)
    levels: int = field(default_factory=lambda: Config.PYRAMID_LEVELS)
    flow: LKParams = field(default_factory=LKParams)
    repetitions: int = field(default_factory=lambda: Config.BENCH_REPETITIONS)
    warmup: int = field(default_factory=lambda: Config.BENCH_WARMUP)
    max_tracks: int = MAX_TRACKED_POINTS

    def __post_init__(self):
        if self.detector not in DETECTOR_NAMES:
            raise ConfigError(f"Неизвестный детектор '{self.detector}', доступны: {', '.join(DETECTOR_NAMES)}")
        if self.repetitions < 1:
            raise ConfigError(f"repetitions должно быть ≥ 1: {self.repetitions}")
        if self.warmup < 0:
            raise ConfigError(f"warmup должно быть ≥ 0: {self.warmup}")
        if self.levels < 1:
            raise ConfigError(f"levels должно быть ≥ 1: {self.levels}")
        if self.max_tracks < 0:
            raise ConfigError(f"max_tracks должно быть ≥ 0: {self.max_tracks}")


def load_pipeline_config(path: str) -> PipelineConfig:
    """
    PipelineConfig из TOML

    Секции: [pipeline], [blur], [fast], [harris], [flow]; все ключи необязательны,
    неизвестные ключи и недопустимые значения дают ConfigError.
    """
    data = load_toml_file(path)
    reject_unknown_keys(data, ('pipeline', 'blur', 'fast', 'harris', 'flow'), path)
    pipeline = data.get('pipeline', {})
    blur = data.get('blur', {})
    fast = dict(data.get('fast', {}))
    harris = dict(data.get('harris', {}))
    flow = data.get('flow', {})
    for section, allowed, name in ((pipeline, PIPELINE_KEYS, 'pipeline'), (blur, BLUR_KEYS, 'blur'),
                                   (fast, FAST_KEYS, 'fast'), (harris, HARRIS_KEYS, 'harris'),
                                   (flow, FLOW_KEYS, 'flow')):
        reject_unknown_keys(section, allowed, name)

    try:
        lanes = fast.pop('lanes', Config.FAST_LANES)
        fmt = FixedPointFormat.parse(harris.pop('format', Config.FIXED_FORMAT))
        acc_format = harris.pop('acc_format', None)
        settings = DetectorSettings(
            fast=FastConfig(**fast),
            harris=HarrisConfig(**harris),
            lanes=lanes,
            fmt=fmt,
            acc_fmt=FixedPointFormat.parse(acc_format) if acc_format else None,
        )
        defaults = PipelineConfig()
        return PipelineConfig(
            detector=pipeline.get('detector', defaults.detector),
            detectors=settings,
            blur=bool(blur.get('enabled', defaults.blur)),
            blur_ksize=blur.get('ksize', defaults.blur_ksize),
            blur_sigma=blur.get('sigma', defaults.blur_sigma),
            levels=pipeline.get('levels', defaults.levels),
            flow=LKParams(**flow),
            repetitions=pipeline.get('repetitions', defaults.repetitions),
            warmup=pipeline.get('warmup', defaults.warmup),
            max_tracks=pipeline.get('max_tracks', defaults.max_tracks),
        )
    except ConfigError:
        raise
    except (FeatFrontError, TypeError) as e:
        raise ConfigError(f"{path}: недопустимая конфигурация: {e}") from e


@dataclass
class FrameBreakdown:
    """Время этапов одного кадра (медианы повторов), мс"""
    frame: int
    timestamp_ns: int
    preprocess_ms: float
    detection_ms: float
    flow_ms: float
    total_ms: float
    corners: int
    tracked: int
    warmup: bool


@dataclass
class BreakdownReport:
    """Разбивка времени фронтенда; числа округлены при построении"""
    detector: str
    n_frames: int
    warmup_frames: int
    repetitions: int
    stage_ms: Dict[str, float]
    stage_share: Dict[str, float]
    total_ms: float
    fps: float
    fps_aggregate: float
    corners_per_frame: float
    energy_per_frame_mj: Optional[float] = None
    pipeline_energy_per_frame_mj: Optional[float] = None
    power_label: Optional[str] = None
    frames: List[FrameBreakdown] = field(default_factory=list)

    @property
    def detection_share(self) -> float:
        return self.stage_share[Stage.DETECTION.value]

    def corner_counts(self) -> List[int]:
        return [f.corners for f in self.frames]

    def summary(self) -> Dict[str, Any]:
        """Агрегаты без таймингов по кадрам (стабильный порядок полей)"""
        return {
            'detector': self.detector,
            'n_frames': self.n_frames,
            'warmup_frames': self.warmup_frames,
            'repetitions': self.repetitions,
            'total_ms': self.total_ms,
            'fps': self.fps,
            'fps_aggregate': self.fps_aggregate,
            'corners_per_frame': self.corners_per_frame,
            'energy_per_frame_mj': self.energy_per_frame_mj,
            'pipeline_energy_per_frame_mj': self.pipeline_energy_per_frame_mj,
            'power_label': self.power_label,
        }


def build_report(detector: str, frames: List[FrameBreakdown], repetitions: int,
                 power: Optional[PowerModel] = None) -> BreakdownReport:
    """
    Агрегация кадров в отчет

    Средние берутся по кадрам после прогрева; total_ms — сумма средних этапов.
    """
    measured = [f for f in frames if not f.warmup] or frames
    n = len(measured)
    stage_ms = {
        Stage.PREPROCESS.value: _q(sum(f.preprocess_ms for f in measured) / n),
        Stage.DETECTION.value: _q(sum(f.detection_ms for f in measured) / n),
        Stage.FLOW.value: _q(sum(f.flow_ms for f in measured) / n),
    }
    total_ms = _q(sum(stage_ms.values()))
    if total_ms <= 0:
        raise NonPositiveTime(f"Суммарное время кадра не положительно: {total_ms}")

    stage_share = {name: _q(ms / total_ms) for name, ms in stage_ms.items()}
    all_ms = sum(f.total_ms for f in frames)
    fps_aggregate = _q(1000.0 * len(frames) / all_ms) if all_ms > 0 else 0.0

    report = BreakdownReport(
        detector=detector,
        n_frames=len(frames),
        warmup_frames=len(frames) - len([f for f in frames if not f.warmup]),
        repetitions=repetitions,
        stage_ms=stage_ms,
        stage_share=stage_share,
        total_ms=total_ms,
        fps=_q(1000.0 / total_ms),
        fps_aggregate=fps_aggregate,
        corners_per_frame=_q(sum(f.corners for f in measured) / n),
        frames=frames,
    )
    if power is not None:
        detection_ms = stage_ms[Stage.DETECTION.value]
        if detection_ms > 0:
            report.energy_per_frame_mj = _q(energy_per_frame(power.detection_w, detection_ms))
        report.pipeline_energy_per_frame_mj = _q(energy_per_frame(power.total_w, total_ms))
        report.power_label = power.label or None
    return report


def preprocess(img: Image, cfg: PipelineConfig) -> Pyramid:
    """Размытие (если включено) и пирамида"""
    if cfg.blur:
        img = gaussian_blur(img, cfg.blur_ksize, cfg.blur_sigma)
    return build_pyramid(img, cfg.levels)


def select_tracks(corners: List[Corner], limit: int) -> List[Tuple[float, float]]:
    """Самые сильные углы уровня 0 (оценка по убыванию, затем (y, x))"""
    base = [c for c in corners if c.level == 0]
    base.sort(key=lambda c: (-c.score, c.y, c.x))
    return [(float(c.x), float(c.y)) for c in base[:limit]]


def run_pipeline(seq: SequenceSource, cfg: PipelineConfig, power: Optional[PowerModel] = None,
                 timer: Optional[StageTimer] = None,
                 corners_out: Optional[List[List[Corner]]] = None) -> BreakdownReport:
    """
    Прогон фронтенда по последовательности

    Args:
        seq: Предзагруженная последовательность
        cfg: Конфигурация
        power: Модель мощности (для энергии на кадр)
        timer: Журнал замеров (создается, если не передан)
        corners_out: Если передан, сюда складываются углы каждого кадра

    Raises:
        EmptySequence: в последовательности нет кадров
    """
    if len(seq) == 0:
        raise EmptySequence(f"Последовательность {seq.root} пуста")

    timer = timer if timer is not None else StageTimer()
    detector = make_detector(cfg.detector, cfg.detectors)
    warmup = min(cfg.warmup, len(seq) - 1)
    logger.info(f"🚀 Прогон {cfg.detector}: {len(seq)} кадров, прогрев {warmup}, повторов {cfg.repetitions}")

    frames: List[FrameBreakdown] = []
    prev_pyramid: Optional[Pyramid] = None
    prev_points: List[Tuple[float, float]] = []

    for index, frame in enumerate(seq.frames):
        pyramid, corners, tracks = None, [], []
        for rep in range(cfg.repetitions):
            with timer.measure(Stage.PREPROCESS, index, rep):
                pyramid = preprocess(frame.image, cfg)
            with timer.measure(Stage.DETECTION, index, rep):
                corners = detect_on_pyramid(pyramid, detector)
            with timer.measure(Stage.FLOW, index, rep):
                if prev_pyramid is not None and prev_points:
                    tracks = track_lk(prev_pyramid, pyramid, prev_points, cfg.flow.window,
                                      cfg.flow.max_iters, cfg.flow.eps)

        medians = timer.frame_medians(index)
        frames.append(FrameBreakdown(
            frame=index,
            timestamp_ns=frame.timestamp_ns,
            preprocess_ms=_q(medians[Stage.PREPROCESS]),
            detection_ms=_q(medians[Stage.DETECTION]),
            flow_ms=_q(medians[Stage.FLOW]),
            total_ms=_q(sum(medians[s] for s in STAGE_ORDER)),
            corners=len(corners),
            tracked=sum(1 for t in tracks if t.tracked),
            warmup=index < warmup,
        ))
        if corners_out is not None:
            corners_out.append(corners)
        prev_pyramid = pyramid
        prev_points = select_tracks(corners, cfg.max_tracks)

    report = build_report(cfg.detector, frames, cfg.repetitions, power)
    logger.info(
        f"✅ {cfg.detector}: {report.total_ms:.3f} мс/кадр, {report.fps:.1f} FPS, "
        f"доля детекции {report.detection_share:.1%}"
    )
    return report


def compare_detectors(seq: SequenceSource, detector_a: str, detector_b: str,
                      radius: Optional[float] = None,
                      settings: Optional[DetectorSettings] = None) -> Tuple[pd.DataFrame, Dict[str, Any]]:
    """
    Согласие двух детекторов по кадрам (уровень 0, без пирамиды)

    Returns:
        (таблица по кадрам, агрегат по всем кадрам)
    """
    if len(seq) == 0:
        raise EmptySequence(f"Последовательность {seq.root} пуста")
    radius = Config.AGREEMENT_RADIUS if radius is None else radius
    run_a = make_detector(detector_a, settings)
    run_b = make_detector(detector_b, settings)

    rows = []
    for index, frame in enumerate(seq.frames):
        stats = agreement(run_a(frame.image), run_b(frame.image), radius)
        rows.append({
            'frame': index,
            'timestamp_ns': frame.timestamp_ns,
            'size_a': stats.size_a,
            'size_b': stats.size_b,
            'matched': stats.matched,
            'precision': _q(stats.precision),
            'recall': _q(stats.recall),
            'mean_offset': _q(stats.mean_offset),
        })
    table = pd.DataFrame(rows)

    total_a, total_b = int(table['size_a'].sum()), int(table['size_b'].sum())
    matched = int(table['matched'].sum())
    aggregate = {
        'detector_a': detector_a,
        'detector_b': detector_b,
        'radius': radius,
        'frames': len(rows),
        'matched': matched,
        'size_a': total_a,
        'size_b': total_b,
        'precision': _q(matched / total_b) if total_b else 1.0,
        'recall': _q(matched / total_a) if total_a else 1.0,
    }
    logger.info(f"🔍 {detector_a} vs {detector_b}: precision {aggregate['precision']}, recall {aggregate['recall']}")
    return table, aggregate
