"""
Загрузка последовательностей EuRoC (левая камера cam0)

Кадры полностью загружаются в память до начала любых замеров времени.
Формат: mav0/cam0/data.csv (timestamp [ns], filename) и mav0/cam0/data/*.pgm.
"""

import logging
import os
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import pandas as pd

from errors import (
    ImageError,
    MissingIndex,
    NonMonotonicTimestamps,
    UnreadableFrame,
)
from image_core import Image, load_pgm

logger = logging.getLogger(__name__)

CAMERA_DIR = os.path.join("mav0", "cam0")
INDEX_NAME = "data.csv"
DATA_DIR = "data"


@dataclass(frozen=True, eq=False)
class Frame:
    """Кадр последовательности"""
    timestamp_ns: int
    path: str
    image: Image


@dataclass
class SequenceSource:
    """Упорядоченная и полностью загруженная последовательность"""
    root: str
    frames: List[Frame]
    loaded_at: float = field(default_factory=time.perf_counter)

    def __post_init__(self):
        check_timestamps([f.timestamp_ns for f in self.frames])

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def timestamps(self) -> List[int]:
        return [f.timestamp_ns for f in self.frames]

    @property
    def images(self) -> List[Image]:
        return [f.image for f in self.frames]

    @classmethod
    def from_images(cls, images: Sequence[Image], timestamps: Optional[Sequence[int]] = None,
                    root: str = "<memory>") -> "SequenceSource":
        """Последовательность из кадров в памяти (метки по умолчанию 0, 1, 2, ...)"""
        timestamps = list(timestamps) if timestamps is not None else list(range(len(images)))
        frames = [Frame(timestamp_ns=int(ts), path="", image=img) for ts, img in zip(timestamps, images)]
        return cls(root=root, frames=frames, loaded_at=time.perf_counter())


def check_timestamps(timestamps: Sequence[int]) -> None:
    for prev, cur in zip(timestamps, timestamps[1:]):
        if cur <= prev:
            raise NonMonotonicTimestamps(f"Метки времени не возрастают строго: {prev} -> {cur}")


def _read_index(index_path: str) -> pd.DataFrame:
    try:
        frame = pd.read_csv(index_path, header=None, comment='#', skipinitialspace=True,
                            names=['timestamp', 'filename'], dtype={'timestamp': 'int64', 'filename': str})
    except pd.errors.EmptyDataError:
        return pd.DataFrame({'timestamp': pd.Series(dtype='int64'), 'filename': pd.Series(dtype=str)})
    except (ValueError, pd.errors.ParserError) as e:
        raise MissingIndex(f"Индекс {index_path} некорректен: {e}") from e
    if frame['filename'].isna().any():
        raise MissingIndex(f"В индексе {index_path} есть строки без имени файла")
    frame['filename'] = frame['filename'].str.strip()
    return frame


def _resolve_frame_path(data_dir: str, filename: str) -> str:
    """PNG из EuRoC заменяется PGM-копией с тем же именем"""
    path = os.path.join(data_dir, filename)
    stem, ext = os.path.splitext(path)
    if ext.lower() == '.png':
        mirror = stem + '.pgm'
        if os.path.exists(mirror):
            return mirror
        raise UnreadableFrame(
            f"Кадр {path} в формате PNG не поддерживается: положите рядом PGM-копию "
            f"{os.path.basename(mirror)} (mav0/cam0/data/<timestamp>.pgm)"
        )
    return path


def load_euroc_sequence(root: str) -> SequenceSource:
    """
    Загрузка последовательности в память

    Строки индекса сортируются по времени; повтор метки — ошибка.

    Raises:
        MissingIndex: нет mav0/cam0/data.csv
        UnreadableFrame: кадр отсутствует или не читается
        NonMonotonicTimestamps: повтор метки времени
    """
    camera_dir = os.path.join(root, CAMERA_DIR)
    index_path = os.path.join(camera_dir, INDEX_NAME)
    if not os.path.isfile(index_path):
        raise MissingIndex(f"Не найден индекс кадров: {index_path}")

    index = _read_index(index_path).sort_values('timestamp', kind='stable')
    check_timestamps(index['timestamp'].tolist())

    data_dir = os.path.join(camera_dir, DATA_DIR)
    frames = []
    for row in index.itertuples(index=False):
        path = _resolve_frame_path(data_dir, row.filename)
        try:
            image = load_pgm(path)
        except (OSError, ImageError) as e:
            raise UnreadableFrame(f"Не удалось прочитать кадр {path}: {e}") from e
        frames.append(Frame(timestamp_ns=int(row.timestamp), path=path, image=image))

    source = SequenceSource(root=root, frames=frames, loaded_at=time.perf_counter())
    if frames:
        logger.info(f"📂 Загружено {len(frames)} кадров из {root}")
    else:
        logger.warning(f"⚠️ Индекс {index_path} не содержит кадров")
    return source
