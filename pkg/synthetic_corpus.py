"""
Синтетический корпус в стиле машинного зала EuRoC

Детерминированная по seed текстура (многооктавный value noise) с
контрастными прямоугольными пятнами, которые дают настоящие углы.
Камера "панорамирует" по большому холсту целочисленными сдвигами,
поэтому соседние кадры связаны чистым переносом.
"""

import logging
import os
from typing import List, Optional

import numpy as np
import pandas as pd
from scipy import ndimage

from config import Config
from errors import EmptySequence, IoFailure
from image_core import Image, save_pgm
from sequence_loader import CAMERA_DIR, DATA_DIR, INDEX_NAME, SequenceSource, load_euroc_sequence

logger = logging.getLogger(__name__)

FRAME_PERIOD_NS = 50_000_000  # 20 Гц
START_TIMESTAMP_NS = 1_403_636_579_763_555_584
PAN_MARGIN = 48
MAX_PAN_STEP = 2
NOISE_OCTAVES = 4
NOISE_BASE_CELL = 64
PATCH_DENSITY = 1.0 / 2500  # пятен на пиксель холста


def value_noise(rng: np.random.Generator, height: int, width: int,
                octaves: int = NOISE_OCTAVES, base_cell: int = NOISE_BASE_CELL) -> np.ndarray:
    """Сумма октав интерполированного случайного шума, результат в [0, 1]"""
    total = np.zeros((height, width))
    amplitude, cell, norm = 1.0, base_cell, 0.0
    for _ in range(octaves):
        grid = rng.random((height // cell + 2, width // cell + 2))
        ys = np.arange(height)[:, None] / cell
        xs = np.arange(width)[None, :] / cell
        coords = np.broadcast_arrays(ys, xs)
        total += amplitude * ndimage.map_coordinates(grid, coords, order=3, mode='nearest')
        norm += amplitude
        amplitude /= 2
        cell = max(2, cell // 2)
    total /= norm
    lo, hi = total.min(), total.max()
    return (total - lo) / (hi - lo) if hi > lo else np.zeros_like(total)


def plant_patches(canvas: np.ndarray, rng: np.random.Generator, count: int) -> None:
    """Контрастные прямоугольники: каждый дает четыре угла"""
    h, w = canvas.shape
    for _ in range(count):
        ph, pw = rng.integers(12, 40, size=2)
        y0 = int(rng.integers(0, h - ph))
        x0 = int(rng.integers(0, w - pw))
        level = 20.0 if rng.random() < 0.5 else 235.0
        canvas[y0:y0 + ph, x0:x0 + pw] = level


def render_canvas(seed: int, width: int, height: int, margin: int = PAN_MARGIN) -> np.ndarray:
    """Холст (height + 2·margin, width + 2·margin) uint8"""
    rng = np.random.default_rng(seed)
    ch, cw = height + 2 * margin, width + 2 * margin
    canvas = 40.0 + 170.0 * value_noise(rng, ch, cw)
    plant_patches(canvas, rng, max(1, int(ch * cw * PATCH_DENSITY)))
    return np.clip(np.rint(canvas), 0, 255).astype(np.uint8)


def camera_path(rng: np.random.Generator, n_frames: int, margin: int = PAN_MARGIN) -> np.ndarray:
    """Целочисленные смещения окна кадра (n_frames, 2) в пределах [0, 2·margin]"""
    offsets = np.empty((n_frames, 2), dtype=np.int64)
    position = np.array([margin, margin])
    for i in range(n_frames):
        offsets[i] = position
        step = rng.integers(-MAX_PAN_STEP, MAX_PAN_STEP + 1, size=2)
        position = np.clip(position + step, 0, 2 * margin)
    return offsets


def generate_synthetic_sequence(n_frames: int, seed: Optional[int] = None,
                                width: Optional[int] = None,
                                height: Optional[int] = None) -> List[Image]:
    """Кадры синтетической последовательности (по умолчанию 752×480)"""
    seed = Config.SYNTH_SEED if seed is None else seed
    width = width or Config.SYNTH_WIDTH
    height = height or Config.SYNTH_HEIGHT
    if n_frames < 1:
        raise EmptySequence(f"Число кадров должно быть ≥ 1: {n_frames}")

    canvas = render_canvas(seed, width, height)
    offsets = camera_path(np.random.default_rng(seed + 1), n_frames)
    return [
        Image.from_array(canvas[oy:oy + height, ox:ox + width])
        for ox, oy in offsets
    ]


def synthetic_timestamps(n_frames: int) -> List[int]:
    return [START_TIMESTAMP_NS + i * FRAME_PERIOD_NS for i in range(n_frames)]


def synthetic_source(n_frames: int, seed: Optional[int] = None, width: Optional[int] = None,
                     height: Optional[int] = None) -> SequenceSource:
    """Синтетическая последовательность сразу в памяти"""
    images = generate_synthetic_sequence(n_frames, seed, width, height)
    return SequenceSource.from_images(images, synthetic_timestamps(n_frames), root="<synthetic>")


def write_synthetic_sequence(root: str, n_frames: int, seed: Optional[int] = None,
                             width: Optional[int] = None, height: Optional[int] = None) -> SequenceSource:
    """Запись корпуса в раскладке EuRoC и повторная загрузка"""
    images = generate_synthetic_sequence(n_frames, seed, width, height)
    timestamps = synthetic_timestamps(n_frames)
    camera_dir = os.path.join(root, CAMERA_DIR)
    data_dir = os.path.join(camera_dir, DATA_DIR)

    try:
        os.makedirs(data_dir, exist_ok=True)
        for ts, img in zip(timestamps, images):
            save_pgm(img, os.path.join(data_dir, f"{ts}.pgm"))
        index = pd.DataFrame({'#timestamp [ns]': timestamps,
                              'filename': [f"{ts}.pgm" for ts in timestamps]})
        index.to_csv(os.path.join(camera_dir, INDEX_NAME), index=False, lineterminator='\n')
    except OSError as e:
        raise IoFailure(f"Не удалось записать синтетический корпус в {root}: {e}") from e

    logger.info(f"✅ Синтетический корпус: {n_frames} кадров {images[0].width}×{images[0].height} в {root}")
    return load_euroc_sequence(root)
