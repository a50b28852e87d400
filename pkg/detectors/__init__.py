"""
Детекторы углов FeatFront Bench
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

from config import Config
from detectors.corner import Corner, read_corners_csv, write_corners_csv
from detectors.fast import FastConfig, detect_fast, detect_fast_pyramid, fast_score, segment_test
from detectors.fast_batch import FastBatchState, detect_fast_batch
from detectors.harris import HarrisConfig, detect_harris
from detectors.harris_fixed import FixedPointFormat, detect_harris_fixed
from errors import ImageTooSmall, InvalidDetectorConfig
from image_core import Image, Pyramid

logger = logging.getLogger(__name__)

DETECTOR_NAMES = ('fast', 'fast_batch', 'harris', 'harris_fixed')

Detector = Callable[[Image], List[Corner]]


@dataclass(frozen=True)
class DetectorSettings:
    """Полный набор параметров всех детекторов"""
    fast: FastConfig = field(default_factory=FastConfig)
    harris: HarrisConfig = field(default_factory=HarrisConfig)
    lanes: int = field(default_factory=lambda: Config.FAST_LANES)
    fmt: FixedPointFormat = field(default_factory=lambda: FixedPointFormat.parse(Config.FIXED_FORMAT))
    acc_fmt: Optional[FixedPointFormat] = None


def make_detector(name: str, settings: Optional[DetectorSettings] = None) -> Detector:
    """Детектор по имени, привязанный к своим параметрам"""
    settings = settings or DetectorSettings()
    builders: Dict[str, Detector] = {
        'fast': lambda img: detect_fast(img, settings.fast),
        'fast_batch': lambda img: detect_fast_batch(img, settings.fast, settings.lanes),
        'harris': lambda img: detect_harris(img, settings.harris),
        'harris_fixed': lambda img: detect_harris_fixed(img, settings.harris, settings.fmt,
                                                        settings.acc_fmt),
    }
    if name not in builders:
        raise InvalidDetectorConfig(f"Неизвестный детектор '{name}', доступны: {', '.join(DETECTOR_NAMES)}")
    return builders[name]


def detect_on_pyramid(pyr: Pyramid, detector: Detector) -> List[Corner]:
    """Детекция на всех уровнях; слишком маленькие уровни пропускаются"""
    corners: List[Corner] = []
    for level, img in enumerate(pyr.levels):
        try:
            found = detector(img)
        except ImageTooSmall:
            logger.debug(f"Уровень {level} ({img!r}) слишком мал для детектора, пропускаем")
            continue
        corners.extend(Corner(x=c.x, y=c.y, score=c.score, level=level) for c in found)
    return corners


__all__ = [
    'Corner', 'read_corners_csv', 'write_corners_csv',
    'FastConfig', 'segment_test', 'fast_score', 'detect_fast', 'detect_fast_pyramid',
    'FastBatchState', 'detect_fast_batch',
    'HarrisConfig', 'detect_harris',
    'FixedPointFormat', 'detect_harris_fixed',
    'DETECTOR_NAMES', 'DetectorSettings', 'make_detector', 'detect_on_pyramid',
]
