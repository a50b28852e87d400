"""
Пирамидальный разреженный Lucas-Kanade

Этап оптического потока фронтенда: точки предыдущего кадра сопровождаются
на следующий кадр от грубого уровня пирамиды к исходному. Все точки
обрабатываются одновременно (векторно), но каждая решает свою систему
2×2 независимо, поэтому результат не зависит от порядка точек.
"""

import logging
import os
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import ndimage

from config import Config
from errors import FlowError, IoFailure, PyramidMismatch
from image_core import Pyramid, sobel_gradients

logger = logging.getLogger(__name__)

SOBEL_NORM = 8.0  # сумма весов положительной половины ядра 3×3
GRADIENT_MARGIN = 1


class TrackStatus(Enum):
    """Статус сопровождения точки"""
    TRACKED = "tracked"
    LOST = "lost"


@dataclass(frozen=True)
class TrackPoint:
    """Результат для одной точки; у потерянных точек — последняя оценка и residual 0"""
    x: float
    y: float
    status: TrackStatus
    residual: float

    @property
    def tracked(self) -> bool:
        return self.status is TrackStatus.TRACKED


@dataclass(frozen=True)
class LKParams:
    """Параметры трекера (значения фронтенда не опубликованы, взяты типовые)"""
    window: int = field(default_factory=lambda: Config.LK_WINDOW)
    max_iters: int = field(default_factory=lambda: Config.LK_MAX_ITERS)
    eps: float = field(default_factory=lambda: Config.LK_EPS)
    # Порог вырожденности: min собственное число < 1e-4 · площадь окна.
    # Градиенты нормированы (/8), так что это средний квадрат градиента 1e-4
    min_eig_factor: float = 1e-4

    def __post_init__(self):
        if self.window < 5 or self.window % 2 == 0:
            raise FlowError(f"Окно LK должно быть нечетным и ≥ 5: {self.window}")
        if self.max_iters < 1:
            raise FlowError(f"max_iters должно быть ≥ 1: {self.max_iters}")
        if self.eps <= 0:
            raise FlowError(f"eps должно быть > 0: {self.eps}")

    @property
    def half(self) -> int:
        return self.window // 2

    @property
    def area(self) -> int:
        return self.window * self.window


def _window_offsets(half: int) -> Tuple[np.ndarray, np.ndarray]:
    ys, xs = np.mgrid[-half:half + 1, -half:half + 1]
    return xs.ravel().astype(np.float64), ys.ravel().astype(np.float64)


def _sample(image: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Билинейная выборка с прижатием к краю"""
    return ndimage.map_coordinates(image, [ys, xs], order=1, mode='nearest')


def _level_gradients(level_img) -> Tuple[np.ndarray, np.ndarray]:
    gx, gy = sobel_gradients(level_img, 3).full()
    return gx / SOBEL_NORM, gy / SOBEL_NORM


def _to_level(points: np.ndarray, scale: float) -> np.ndarray:
    """Координаты уровня 0 -> координаты уровня (центры пикселей согласованы)"""
    return (points + 0.5) / scale - 0.5


def track_lk(prev: Pyramid, next: Pyramid, points: Sequence[Tuple[float, float]],
             window: int = None, max_iters: int = None, eps: float = None) -> List[TrackPoint]:
    """
    Сопровождение точек prev -> next

    Точка теряется, если на любом обработанном уровне матрица системы вырождена,
    если на уровне 0 ее окно выходит за область градиентов, если итоговая позиция
    ближе полуокна к краю или если итерации уровня 0 исчерпаны без шага < eps.
    Грубые уровни, на которые окно не помещается, пропускаются.

    Пустой список точек — не ошибка: возвращается пустой список.
    """
    defaults = LKParams()
    params = LKParams(
        window=window if window is not None else defaults.window,
        max_iters=max_iters if max_iters is not None else defaults.max_iters,
        eps=eps if eps is not None else defaults.eps,
    )
    if prev.geometry() != next.geometry():
        raise PyramidMismatch(f"Геометрия пирамид различается: {prev.geometry()} vs {next.geometry()}")
    if len(points) == 0:
        return []

    base = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    n_points = base.shape[0]
    half = params.half
    off_x, off_y = _window_offsets(half)

    guess = np.zeros((n_points, 2))
    lost = np.zeros(n_points, dtype=bool)
    converged = np.zeros(n_points, dtype=bool)

    for level in reversed(range(len(prev))):
        scale = float(1 << level)
        template_img = prev[level]
        h, w = template_img.height, template_img.width
        p = _to_level(base, scale)

        fits = ((p[:, 0] - half >= GRADIENT_MARGIN) & (p[:, 0] + half <= w - 1 - GRADIENT_MARGIN)
                & (p[:, 1] - half >= GRADIENT_MARGIN) & (p[:, 1] + half <= h - 1 - GRADIENT_MARGIN))
        if level == 0:
            lost |= ~fits
        active = np.nonzero(fits & ~lost)[0]

        if active.size:
            template = template_img.to_array().astype(np.float64)
            target = next[level].to_array().astype(np.float64)
            grad_x, grad_y = _level_gradients(template_img)

            xs = p[active, 0:1] + off_x
            ys = p[active, 1:2] + off_y
            ix = _sample(grad_x, xs, ys)
            iy = _sample(grad_y, xs, ys)
            patch = _sample(template, xs, ys)

            gxx = (ix * ix).sum(axis=1)
            gxy = (ix * iy).sum(axis=1)
            gyy = (iy * iy).sum(axis=1)
            det = gxx * gyy - gxy * gxy
            min_eig = (gxx + gyy) / 2 - np.sqrt(((gxx - gyy) / 2) ** 2 + gxy * gxy)
            singular = min_eig < params.min_eig_factor * params.area
            lost[active[singular]] = True

            done = singular.copy()
            for _ in range(params.max_iters):
                run = ~done
                if not run.any():
                    break
                idx = active[run]
                warped = _sample(target, xs[run] + guess[idx, 0:1], ys[run] + guess[idx, 1:2])
                err = patch[run] - warped
                bx = (err * ix[run]).sum(axis=1)
                by = (err * iy[run]).sum(axis=1)
                dx = (gyy[run] * bx - gxy[run] * by) / det[run]
                dy = (gxx[run] * by - gxy[run] * bx) / det[run]
                guess[idx, 0] += dx
                guess[idx, 1] += dy
                small = np.hypot(dx, dy) < params.eps
                done[np.nonzero(run)[0][small]] = True
                if level == 0:
                    converged[idx[small]] = True

        if level > 0:
            guess *= 2.0

    final = base + guess
    h, w = prev[0].height, prev[0].width
    inside = ((final[:, 0] >= half) & (final[:, 0] <= w - 1 - half)
              & (final[:, 1] >= half) & (final[:, 1] <= h - 1 - half))
    lost |= ~inside | ~converged

    residual = np.zeros(n_points)
    ok = np.nonzero(~lost)[0]
    if ok.size:
        template = prev[0].to_array().astype(np.float64)
        target = next[0].to_array().astype(np.float64)
        xs = base[ok, 0:1] + off_x
        ys = base[ok, 1:2] + off_y
        patch = _sample(template, xs, ys)
        warped = _sample(target, xs + guess[ok, 0:1], ys + guess[ok, 1:2])
        residual[ok] = np.abs(patch - warped).mean(axis=1)

    tracks = [
        TrackPoint(
            x=float(final[i, 0]),
            y=float(final[i, 1]),
            status=TrackStatus.LOST if lost[i] else TrackStatus.TRACKED,
            residual=float(residual[i]),
        )
        for i in range(n_points)
    ]
    logger.debug(f"LK: сопровождено {int((~lost).sum())} из {n_points} точек")
    return tracks


def tracks_to_frame(tracks: List[TrackPoint]) -> pd.DataFrame:
    return pd.DataFrame(
        [(i, t.x, t.y, t.status.value, t.residual) for i, t in enumerate(tracks)],
        columns=['idx', 'x', 'y', 'status', 'residual'],
    )


def write_tracks_csv(tracks: List[TrackPoint], path: str) -> None:
    """CSV idx,x,y,status,residual"""
    try:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        tracks_to_frame(tracks).to_csv(path, index=False, lineterminator='\n')
    except OSError as e:
        raise IoFailure(f"Не удалось записать треки в {path}: {e}") from e
