"""
Запись об угле и CSV-формат x,y,score,level
"""

import logging
import os
from dataclasses import dataclass
from typing import List, Union

import pandas as pd

from errors import IoFailure

logger = logging.getLogger(__name__)

CORNER_COLUMNS = ['x', 'y', 'score', 'level']


@dataclass(frozen=True, order=True)
class Corner:
    """Угол: координата пикселя, оценка детектора и уровень пирамиды"""
    y: int
    x: int
    score: Union[int, float]
    level: int = 0

    def key(self):
        return self.level, self.y, self.x


def sort_corners(corners: List[Corner]) -> List[Corner]:
    """Канонический порядок: уровень, затем (y, x)"""
    return sorted(corners, key=Corner.key)


def corners_to_frame(corners: List[Corner]) -> pd.DataFrame:
    """Таблица углов в порядке колонок CSV"""
    if not corners:
        return pd.DataFrame({name: pd.Series(dtype='int64') for name in CORNER_COLUMNS})
    return pd.DataFrame(
        [(c.x, c.y, c.score, c.level) for c in corners],
        columns=CORNER_COLUMNS,
    )


def write_corners_csv(corners: List[Corner], path: str) -> None:
    """Запись углов в CSV с заголовком"""
    try:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        corners_to_frame(corners).to_csv(path, index=False, lineterminator='\n')
    except OSError as e:
        raise IoFailure(f"Не удалось записать углы в {path}: {e}") from e
    logger.debug(f"💾 Записано {len(corners)} углов в {path}")


def read_corners_csv(path: str) -> List[Corner]:
    """Чтение CSV углов; целочисленные оценки остаются целыми"""
    try:
        frame = pd.read_csv(path, float_precision='round_trip')
    except (OSError, pd.errors.ParserError) as e:
        raise IoFailure(f"Не удалось прочитать углы из {path}: {e}") from e

    integral = pd.api.types.is_integer_dtype(frame['score'])
    return [
        Corner(
            x=int(row.x),
            y=int(row.y),
            score=int(row.score) if integral else float(row.score),
            level=int(row.level),
        )
        for row in frame.itertuples(index=False)
    ]
