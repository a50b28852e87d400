"""
Пакетный (потоковый) FAST: модель конвейера ускорителя

Изображение подается построчно в буфер из 7 строк (высота окружности),
за один шаг обрабатываются N соседних пикселей строки. Для каждой линии
считаются разности с окружностью, флаги ярче/темнее и признак угла; оценка
вычисляется сразу же, а NMS строки выполняется, как только в buf_nms
накопились все соседние строки ее окна. Вся арифметика целочисленная,
результат совпадает с detect_fast бит в бит.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage

from detectors.corner import Corner
from detectors.fast import (
    CIRCLE_DX,
    CIRCLE_DY,
    CIRCLE_RADIUS,
    CIRCLE_SIZE,
    MIN_IMAGE_SIDE,
    FastConfig,
)
from errors import ImageTooSmall, UnsupportedLaneCount
from image_core import Image

logger = logging.getLogger(__name__)

SUPPORTED_LANES = (1, 4, 8, 16)
BUFFER_ROWS = 2 * CIRCLE_RADIUS + 1

FLAG_NONE = 0
FLAG_BRIGHTER = 1
FLAG_DARKER = 2


@dataclass
class LaneSnapshot:
    """Состояние линий после одного шага (для трассировки)"""
    y: int
    xs: np.ndarray
    diff: np.ndarray
    flags: np.ndarray
    tag: np.ndarray
    scores: np.ndarray


@dataclass
class FastBatchState:
    """Регистры движка: буферы строк и значения по линиям"""
    n_lanes: int
    width: int
    buf: np.ndarray       # (7, width) uint8: строки y-3 .. y+3
    buf_nms: np.ndarray   # (nms_window, width) int32: оценки последних строк
    diff: np.ndarray      # (n_lanes, 16) int16: I_Pi - I_P
    flags: np.ndarray     # (n_lanes, 16) uint8: FLAG_*
    tag: np.ndarray       # (n_lanes,) bool
    rows_loaded: int = 0

    @classmethod
    def allocate(cls, width: int, n_lanes: int, nms_window: int) -> "FastBatchState":
        return cls(
            n_lanes=n_lanes,
            width=width,
            buf=np.zeros((BUFFER_ROWS, width), dtype=np.uint8),
            buf_nms=np.zeros((nms_window, width), dtype=np.int32),
            diff=np.zeros((n_lanes, CIRCLE_SIZE), dtype=np.int16),
            flags=np.zeros((n_lanes, CIRCLE_SIZE), dtype=np.uint8),
            tag=np.zeros(n_lanes, dtype=bool),
        )

    @property
    def center_row(self) -> int:
        """Номер строки изображения в середине буфера"""
        return self.rows_loaded - 1 - CIRCLE_RADIUS

    def push_row(self, row: np.ndarray) -> None:
        self.buf[:-1] = self.buf[1:]
        self.buf[-1] = row
        self.rows_loaded += 1

    def push_scores(self, scores: np.ndarray) -> None:
        self.buf_nms[:-1] = self.buf_nms[1:]
        self.buf_nms[-1] = scores


def _cyclic_arc_lanes(mask: np.ndarray, arc_length: int) -> np.ndarray:
    """(N, 16) -> (N,): есть ли циклическая дуга из arc_length флагов"""
    extended = np.concatenate([mask, mask[:, :arc_length - 1]], axis=1)
    return sliding_window_view(extended, arc_length, axis=1).all(axis=2).any(axis=1)


def _arc_minimum(values: np.ndarray, arc_length: int) -> np.ndarray:
    """(N, 16) -> (N,): максимум по дугам минимума значений на дуге"""
    extended = np.concatenate([values, values[:, :arc_length - 1]], axis=1)
    return sliding_window_view(extended, arc_length, axis=1).min(axis=2).max(axis=1)


class FastBatchEngine:
    """Потоковый движок FAST с N линиями"""

    def __init__(self, cfg: FastConfig, n_lanes: int,
                 trace: Optional[Callable[[LaneSnapshot], None]] = None):
        if n_lanes not in SUPPORTED_LANES:
            raise UnsupportedLaneCount(f"Число линий {n_lanes} не из {SUPPORTED_LANES}")
        self.cfg = cfg
        self.n_lanes = n_lanes
        self.trace = trace
        self.lane_offsets = np.arange(n_lanes)

    def _step(self, state: FastBatchState, x0: int, x_end: int) -> np.ndarray:
        """Обработка N пикселей центральной строки, начиная с x0; возвращает оценки линий"""
        xs = x0 + self.lane_offsets
        valid = xs < x_end
        cols = np.minimum(xs, x_end - 1)

        center = state.buf[CIRCLE_RADIUS, cols].astype(np.int16)
        ring = state.buf[CIRCLE_RADIUS + CIRCLE_DY[None, :], cols[:, None] + CIRCLE_DX[None, :]]
        state.diff[:] = ring.astype(np.int16) - center[:, None]

        t = self.cfg.threshold
        brighter = state.diff > t
        darker = state.diff < -t
        state.flags[:] = FLAG_NONE
        state.flags[brighter] = FLAG_BRIGHTER
        state.flags[darker] = FLAG_DARKER

        arc = self.cfg.arc_length
        state.tag[:] = valid & (_cyclic_arc_lanes(brighter, arc) | _cyclic_arc_lanes(darker, arc))

        # Наибольший проходящий порог = (максимум по дугам минимума разности) - 1
        scores = np.zeros(self.n_lanes, dtype=np.int32)
        if state.tag.any():
            lanes = state.diff[state.tag].astype(np.int32)
            best = np.maximum(_arc_minimum(lanes, arc), _arc_minimum(-lanes, arc))
            scores[state.tag] = best - 1

        if self.trace is not None:
            self.trace(LaneSnapshot(
                y=state.center_row,
                xs=xs[valid].copy(),
                diff=state.diff[valid].copy(),
                flags=state.flags[valid].copy(),
                tag=state.tag[valid].copy(),
                scores=scores[valid].copy(),
            ))
        return scores

    def _score_row(self, state: FastBatchState) -> np.ndarray:
        r = CIRCLE_RADIUS
        row_scores = np.zeros(state.width, dtype=np.int32)
        x_end = state.width - r
        for x0 in range(r, x_end, self.n_lanes):
            scores = self._step(state, x0, x_end)
            n = min(self.n_lanes, x_end - x0)
            row_scores[x0:x0 + n] = scores[:n]
        return row_scores

    def _retire_row(self, state: FastBatchState, y: int) -> List[Corner]:
        """NMS для строки в середине buf_nms (все соседи по окну уже посчитаны)"""
        half = self.cfg.nms_window // 2
        scores = state.buf_nms[half]
        if not scores.any():
            return []
        column_max = state.buf_nms.max(axis=0)
        local_max = ndimage.maximum_filter1d(
            column_max, size=self.cfg.nms_window, mode='constant', cval=0
        )
        xs = np.nonzero((scores > 0) & (scores == local_max))[0]
        return [Corner(x=int(x), y=y, score=int(scores[x])) for x in xs]

    def run(self, img: Image) -> List[Corner]:
        if img.width < MIN_IMAGE_SIDE or img.height < MIN_IMAGE_SIDE:
            raise ImageTooSmall(f"FAST требует не меньше 7×7, получено {img.width}×{img.height}")

        state = FastBatchState.allocate(img.width, self.n_lanes, self.cfg.nms_window)
        half = self.cfg.nms_window // 2
        r = CIRCLE_RADIUS
        last_row = img.height - 1 - r
        corners: List[Corner] = []

        for row in img.to_array():
            state.push_row(row)
            if state.rows_loaded < BUFFER_ROWS:
                continue
            y = state.center_row
            state.push_scores(self._score_row(state))
            # NMS строки y - half перекрывается с расчетом оценок строки y
            if y - half >= r:
                corners.extend(self._retire_row(state, y - half))

        # За последней строкой оценок идут строки без кандидатов
        for k in range(1, half + 1):
            state.push_scores(np.zeros(img.width, dtype=np.int32))
            y = last_row + k - half
            if y >= r:
                corners.extend(self._retire_row(state, y))

        logger.debug(f"FAST batch N={self.n_lanes}: {len(corners)} углов на {img!r}")
        return corners


def detect_fast_batch(img: Image, cfg: FastConfig, n_lanes: int = 8,
                      trace: Optional[Callable[[LaneSnapshot], None]] = None) -> List[Corner]:
    """Пакетный детектор FAST; результат совпадает с detect_fast"""
    return FastBatchEngine(cfg, n_lanes, trace=trace).run(img)
