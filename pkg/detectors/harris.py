"""
Детектор Harris: тензор структуры, отклик R = det(M) - k·trace(M)², порог и NMS

Эталонный уровень с плавающей точкой. Градиенты и суммы по окну считаются
точно в int64, поэтому тензор в float64 не содержит ошибок округления.
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Sequence

import numpy as np
from scipy import ndimage

from config import Config
from detectors.corner import Corner
from detectors.fast import FastConfig, detect_fast
from errors import BlockTooLarge, ImageTooSmall, InvalidDetectorConfig
from image_core import SOBEL_SIZES, GradientField, Image, save_pgm, sobel_gradients
from synthetic_corpus import generate_synthetic_sequence

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HarrisConfig:
    """Параметры Harris: k=0.04, Sobel 7×7, блок 7×7, NMS 2×2"""
    k: float = field(default_factory=lambda: Config.HARRIS_K)
    response_threshold: float = field(default_factory=lambda: default_response_threshold())
    sobel_size: int = field(default_factory=lambda: Config.HARRIS_SOBEL_SIZE)
    block_size: int = field(default_factory=lambda: Config.HARRIS_BLOCK_SIZE)
    nms_window: int = field(default_factory=lambda: Config.HARRIS_NMS_WINDOW)

    def __post_init__(self):
        if not 0 < self.k < 0.25:
            raise InvalidDetectorConfig(f"k={self.k} вне (0, 0.25)")
        if self.response_threshold < 0:
            raise InvalidDetectorConfig(f"response_threshold={self.response_threshold} < 0")
        if self.sobel_size not in SOBEL_SIZES:
            raise InvalidDetectorConfig(f"sobel_size={self.sobel_size} не из {SOBEL_SIZES}")
        if self.block_size < 1 or self.block_size % 2 == 0:
            raise InvalidDetectorConfig(f"block_size={self.block_size} должно быть нечетным")
        if self.nms_window != 2 and (self.nms_window < 1 or self.nms_window % 2 == 0):
            raise InvalidDetectorConfig(f"nms_window={self.nms_window}: допустимо 2 или нечетное")

    @property
    def margin(self) -> int:
        """Отступ от края изображения до первого пикселя с откликом"""
        return self.sobel_size // 2 + self.block_size // 2

    @property
    def min_side(self) -> int:
        return self.sobel_size + self.block_size - 1


@dataclass(frozen=True, eq=False)
class StructureTensorField:
    """Элементы a = ΣIx², b = ΣIxIy, c = ΣIy² по внутренней области"""
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    offset: int  # координата (offset, offset) исходного изображения = элемент [0, 0]
    width: int
    height: int

    @property
    def shape(self):
        return self.a.shape


@dataclass(frozen=True, eq=False)
class ResponseMap:
    """Отклик Harris по внутренней области"""
    r: np.ndarray
    offset: int
    width: int
    height: int


def box_sum(values: np.ndarray, block_size: int) -> np.ndarray:
    """
    Сумма по окну block×block: скользящая сумма по строкам, затем по столбцам

    Результат имеет размер (H - block + 1, W - block + 1); для целых входов точный.
    Промежуточные значения не превышают block·H·max|value|.
    """
    n = block_size
    rows = np.cumsum(np.pad(values, ((0, 0), (1, 0))), axis=1)
    rows = rows[:, n:] - rows[:, :-n]
    cols = np.cumsum(np.pad(rows, ((1, 0), (0, 0))), axis=0)
    return cols[n:, :] - cols[:-n, :]


def structure_tensor_sums(grads: GradientField, block_size: int):
    """Точные int64 суммы произведений градиентов по окну"""
    h, w = grads.interior_shape
    if block_size % 2 == 0 or block_size < 1:
        raise InvalidDetectorConfig(f"block_size={block_size} должно быть нечетным")
    if block_size > h or block_size > w:
        raise BlockTooLarge(f"Окно {block_size}×{block_size} больше области градиентов {w}×{h}")

    gx = grads.gx.astype(np.int64)
    gy = grads.gy.astype(np.int64)
    return box_sum(gx * gx, block_size), box_sum(gx * gy, block_size), box_sum(gy * gy, block_size)


def structure_tensor(grads: GradientField, block_size: int) -> StructureTensorField:
    """Тензор структуры с равномерным весом окна"""
    a, b, c = structure_tensor_sums(grads, block_size)
    return StructureTensorField(
        a=a.astype(np.float64),
        b=b.astype(np.float64),
        c=c.astype(np.float64),
        offset=grads.margin + block_size // 2,
        width=grads.width,
        height=grads.height,
    )


def harris_response(tensor: StructureTensorField, k: float) -> ResponseMap:
    """R = (a·c - b²) - k·(a + c)² поточечно"""
    a, b, c = tensor.a, tensor.b, tensor.c
    det = a * c - b * b
    trace = a + c
    r = det - k * (trace * trace)
    return ResponseMap(r=r, offset=tensor.offset, width=tensor.width, height=tensor.height)


def suppress_harris(response: np.ndarray, candidates: np.ndarray, nms_window: int) -> np.ndarray:
    """
    NMS по множеству кандидатов (после порога)

    Окно 2×2 привязано к левому верхнему углу: пиксель подавляется, если среди
    (x+1, y), (x, y+1), (x+1, y+1) есть кандидат со строго большим откликом.
    Нечетное окно — центрированное, с тем же правилом строгого сравнения.
    """
    masked = np.where(candidates, response, -np.inf)
    if nms_window == 2:
        neighbours = np.full(response.shape, -np.inf)
        neighbours[:, :-1] = np.maximum(neighbours[:, :-1], masked[:, 1:])
        neighbours[:-1, :] = np.maximum(neighbours[:-1, :], masked[1:, :])
        neighbours[:-1, :-1] = np.maximum(neighbours[:-1, :-1], masked[1:, 1:])
        return candidates & ~(neighbours > response)

    local_max = ndimage.maximum_filter(masked, size=nms_window, mode='constant', cval=-np.inf)
    return candidates & (response >= local_max)


def corners_from_response(response: ResponseMap, scores: np.ndarray,
                          threshold: float, nms_window: int) -> List[Corner]:
    """Порог, затем NMS; оценки scores в координатах изображения"""
    candidates = scores > threshold
    keep = suppress_harris(scores, candidates, nms_window)
    ys, xs = np.nonzero(keep)
    off = response.offset
    return [
        Corner(x=int(x) + off, y=int(y) + off, score=float(scores[y, x]))
        for y, x in zip(ys, xs)
    ]


def check_harris_size(img: Image, cfg: HarrisConfig) -> None:
    if img.width < cfg.min_side or img.height < cfg.min_side:
        raise ImageTooSmall(
            f"Harris (Sobel {cfg.sobel_size}, блок {cfg.block_size}) требует не меньше "
            f"{cfg.min_side}×{cfg.min_side}, получено {img.width}×{img.height}"
        )


def harris_response_map(img: Image, cfg: HarrisConfig) -> ResponseMap:
    check_harris_size(img, cfg)
    grads = sobel_gradients(img, cfg.sobel_size)
    return harris_response(structure_tensor(grads, cfg.block_size), cfg.k)


def detect_harris(img: Image, cfg: HarrisConfig) -> List[Corner]:
    """
    Детектор Harris (float)

    Returns:
        Углы, отсортированные по (y, x); score = R
    """
    response = harris_response_map(img, cfg)
    corners = corners_from_response(response, response.r, cfg.response_threshold, cfg.nms_window)
    logger.debug(f"Harris: {len(corners)} углов на {img!r}")
    return corners


def peak_responses(response: ResponseMap, nms_window: int) -> np.ndarray:
    """Положительные отклики, которые переживают NMS без порога"""
    r = response.r
    return r[suppress_harris(r, r > 0, nms_window)]


def calibrate_response_threshold(images: Sequence[Image], fast_cfg: FastConfig,
                                 harris_cfg: HarrisConfig, ratio: float) -> float:
    """
    Порог R, при котором углов Harris на кадрах не больше ratio × углов FAST

    Пиксель с R > порога остается углом, только если в окне NMS нет соседа со
    строго большим R, а такой сосед сам выше порога. Значит, углы при пороге T
    это пики без порога с R > T, и T берется из отсортированных пиков.
    """
    budget = 0
    peaks = []
    for img in images:
        budget += len(detect_fast(img, fast_cfg))
        peaks.append(peak_responses(harris_response_map(img, harris_cfg), harris_cfg.nms_window))

    budget = int(ratio * budget)
    values = np.sort(np.concatenate(peaks))[::-1] if peaks else np.empty(0)
    if budget >= len(values):
        return 0.0
    return float(values[budget])


@lru_cache(maxsize=1)
def calibrated_response_threshold() -> float:
    frames = generate_synthetic_sequence(Config.HARRIS_CALIBRATION_FRAMES)
    # Явный порог: без него конструктор снова пошел бы в калибровку
    base = HarrisConfig(response_threshold=0.0)
    threshold = calibrate_response_threshold(frames, FastConfig(), base, Config.HARRIS_FAST_RATIO)
    logger.info(f"🎯 Порог Harris откалиброван на {len(frames)} кадрах (seed {Config.SYNTH_SEED}): "
                f"{threshold:.6g}")
    return threshold


def default_response_threshold() -> float:
    """Порог из окружения или откалиброванный на синтетическом корпусе"""
    if Config.HARRIS_RESPONSE_THRESHOLD is not None:
        return Config.HARRIS_RESPONSE_THRESHOLD
    return calibrated_response_threshold()


def response_to_pgm(response: ResponseMap, path: str) -> None:
    """Отладочный дамп отклика: аффинное растяжение в 0..255"""
    r = response.r
    lo, hi = float(r.min()), float(r.max())
    span = hi - lo
    scaled = np.zeros(r.shape) if span == 0 else (r - lo) * (255.0 / span)
    save_pgm(Image.from_array(np.rint(scaled).astype(np.uint8)), path)
