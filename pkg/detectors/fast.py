"""
FAST-9: segment test по окружности Брезенхэма, оценка максимального порога и NMS

Скалярный (эталонный) уровень. Все вычисления целочисленные; проход по
пикселям векторизован numpy, но семантика совпадает с попиксельным алгоритмом.
"""

import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np
from scipy import ndimage

from config import Config
from detectors.corner import Corner
from errors import ImageTooSmall, InvalidDetectorConfig, NotACorner, OutOfInterior
from image_core import Image, Pyramid

logger = logging.getLogger(__name__)

# Окружность радиуса 3 из 16 пикселей, по часовой стрелке начиная сверху: (dx, dy)
BRESENHAM_CIRCLE = (
    (0, -3), (1, -3), (2, -2), (3, -1),
    (3, 0), (3, 1), (2, 2), (1, 3),
    (0, 3), (-1, 3), (-2, 2), (-3, 1),
    (-3, 0), (-3, -1), (-2, -2), (-1, -3),
)
CIRCLE_RADIUS = 3
CIRCLE_SIZE = len(BRESENHAM_CIRCLE)
MAX_SCORE_THRESHOLD = 254
MIN_IMAGE_SIDE = 2 * CIRCLE_RADIUS + 1

CIRCLE_DX = np.array([dx for dx, _ in BRESENHAM_CIRCLE], dtype=np.intp)
CIRCLE_DY = np.array([dy for _, dy in BRESENHAM_CIRCLE], dtype=np.intp)


@dataclass(frozen=True)
class FastConfig:
    """Параметры FAST (по умолчанию FAST-9, t=10, NMS 3×3)"""
    arc_length: int = field(default_factory=lambda: Config.FAST_ARC_LENGTH)
    threshold: int = field(default_factory=lambda: Config.FAST_THRESHOLD)
    nms_window: int = field(default_factory=lambda: Config.FAST_NMS_WINDOW)
    score_method: str = "maximum_threshold"
    epsilon: int = 1

    def __post_init__(self):
        if not 9 <= self.arc_length <= CIRCLE_SIZE:
            raise InvalidDetectorConfig(f"arc_length={self.arc_length} вне [9, 16]")
        if not 1 <= self.threshold <= MAX_SCORE_THRESHOLD:
            raise InvalidDetectorConfig(f"threshold={self.threshold} вне [1, 254]")
        if self.nms_window < 1 or self.nms_window % 2 == 0:
            raise InvalidDetectorConfig(f"nms_window={self.nms_window} должно быть нечетным")
        if self.score_method != "maximum_threshold":
            raise InvalidDetectorConfig(f"Неизвестный метод оценки: {self.score_method}")
        if self.epsilon != 1:
            raise InvalidDetectorConfig("Поддерживается только шаг ε = 1")


def _check_interior(img: Image, x: int, y: int) -> None:
    r = CIRCLE_RADIUS
    if not (r <= x < img.width - r and r <= y < img.height - r):
        raise OutOfInterior(
            f"Пиксель ({x}, {y}) вне внутренней области {img.width}×{img.height} (отступ {r})"
        )


def _has_cyclic_run(mask: List[bool], length: int) -> bool:
    """Есть ли length подряд идущих True с учетом цикличности"""
    run = 0
    for value in mask + mask[:length - 1]:
        run = run + 1 if value else 0
        if run >= length:
            return True
    return False


def segment_test(img: Image, x: int, y: int, t: int, arc_length: int = 9) -> bool:
    """
    Segment test для одного пикселя

    True, если не меньше arc_length подряд идущих пикселей окружности
    строго ярче I_P + t или строго темнее I_P - t.
    """
    _check_interior(img, x, y)
    center = img.pixel(x, y)
    ring = [img.pixel(x + dx, y + dy) for dx, dy in BRESENHAM_CIRCLE]
    brighter = [value > center + t for value in ring]
    darker = [value < center - t for value in ring]
    return _has_cyclic_run(brighter, arc_length) or _has_cyclic_run(darker, arc_length)


def fast_score(img: Image, x: int, y: int, cfg: FastConfig) -> int:
    """
    Оценка максимального порога: наибольшее t, при котором пиксель остается углом

    Предикат монотонно убывает по t, поэтому вместо шага ε = 1
    используется двоичный поиск на [threshold, 254].
    """
    if not segment_test(img, x, y, cfg.threshold, cfg.arc_length):
        raise NotACorner(f"Пиксель ({x}, {y}) не проходит segment test при t={cfg.threshold}")

    lo, hi = cfg.threshold, MAX_SCORE_THRESHOLD
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if segment_test(img, x, y, mid, cfg.arc_length):
            lo = mid
        else:
            hi = mid - 1
    return lo


def circle_differences(arr: np.ndarray) -> np.ndarray:
    """Разности I_Pi - I_P для всех внутренних пикселей: (16, H-6, W-6) int16"""
    h, w = arr.shape
    r = CIRCLE_RADIUS
    center = arr[r:h - r, r:w - r].astype(np.int16)
    diffs = np.empty((CIRCLE_SIZE, h - 2 * r, w - 2 * r), dtype=np.int16)
    for i, (dx, dy) in enumerate(BRESENHAM_CIRCLE):
        diffs[i] = arr[r + dy:h - r + dy, r + dx:w - r + dx].astype(np.int16) - center
    return diffs


def _cyclic_arc(mask: np.ndarray, arc_length: int) -> np.ndarray:
    """Есть ли циклическая дуга длины arc_length вдоль оси 0"""
    extended = np.concatenate([mask, mask[:arc_length - 1]], axis=0).astype(np.int16)
    runs = np.cumsum(extended, axis=0)
    runs = np.concatenate([np.zeros_like(runs[:1]), runs], axis=0)
    window = runs[arc_length:] - runs[:-arc_length]
    return (window == arc_length).any(axis=0)


def segment_test_map(diffs: np.ndarray, t, arc_length: int) -> np.ndarray:
    """Векторный segment test; t — скаляр или массив порогов той же формы, что пиксели"""
    return _cyclic_arc(diffs > t, arc_length) | _cyclic_arc(diffs < -t, arc_length)


def score_candidates(diffs: np.ndarray, threshold: int, arc_length: int) -> np.ndarray:
    """Двоичный поиск максимального порога сразу для всех кандидатов (16, K)"""
    lo = np.full(diffs.shape[1], threshold, dtype=np.int16)
    hi = np.full(diffs.shape[1], MAX_SCORE_THRESHOLD, dtype=np.int16)
    while True:
        active = lo < hi
        if not active.any():
            return lo.astype(np.int32)
        mid = (lo + hi + 1) // 2
        passes = segment_test_map(diffs, mid, arc_length)
        lo = np.where(active & passes, mid, lo)
        hi = np.where(active & ~passes, mid - 1, hi)


def suppress_fast(scores: np.ndarray, nms_window: int) -> np.ndarray:
    """
    NMS: угол убирается, если в окне есть кандидат со строго большей оценкой

    Сравнение идет с исходным множеством кандидатов (до подавления);
    некандидаты имеют оценку 0, поэтому на результат не влияют.
    """
    local_max = ndimage.maximum_filter(scores, size=nms_window, mode='constant', cval=0)
    return (scores > 0) & (scores == local_max)


def fast_score_map(img: Image, cfg: FastConfig) -> np.ndarray:
    """Карта оценок (H, W): 0 для некандидатов"""
    arr = img.to_array()
    diffs = circle_differences(arr)
    candidates = segment_test_map(diffs, cfg.threshold, cfg.arc_length)

    inner = np.zeros(candidates.shape, dtype=np.int32)
    if candidates.any():
        inner[candidates] = score_candidates(diffs[:, candidates], cfg.threshold, cfg.arc_length)

    scores = np.zeros(arr.shape, dtype=np.int32)
    r = CIRCLE_RADIUS
    scores[r:img.height - r, r:img.width - r] = inner
    return scores


def detect_fast(img: Image, cfg: FastConfig) -> List[Corner]:
    """
    Детектор FAST: segment test, оценка, NMS

    Returns:
        Углы, отсортированные по (y, x)
    """
    if img.width < MIN_IMAGE_SIDE or img.height < MIN_IMAGE_SIDE:
        raise ImageTooSmall(f"FAST требует не меньше 7×7, получено {img.width}×{img.height}")

    scores = fast_score_map(img, cfg)
    keep = suppress_fast(scores, cfg.nms_window)
    ys, xs = np.nonzero(keep)
    corners = [Corner(x=int(x), y=int(y), score=int(scores[y, x])) for y, x in zip(ys, xs)]
    logger.debug(f"FAST: {len(corners)} углов на {img!r}")
    return corners


def detect_fast_pyramid(pyr: Pyramid, cfg: FastConfig, detector=None) -> List[Corner]:
    """Детекция на каждом уровне пирамиды; координаты — в системе своего уровня"""
    detector = detector or detect_fast
    corners = []
    for level, img in enumerate(pyr.levels):
        if img.width < MIN_IMAGE_SIDE or img.height < MIN_IMAGE_SIDE:
            logger.debug(f"Уровень {level} ({img!r}) слишком мал для FAST, пропускаем")
            continue
        corners.extend(
            Corner(x=c.x, y=c.y, score=c.score, level=level) for c in detector(img, cfg)
        )
    return corners
