"""
Метрики стенда: ускорение, энергия на кадр, согласие детекторов

Энергия — модель: заданная мощность × измеренное время (Вт · мс = мДж).
"""

import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy.spatial import cKDTree

from config import load_toml_file, reject_unknown_keys
from detectors.corner import Corner
from errors import BenchError, ConfigError, NonPositiveTime

logger = logging.getLogger(__name__)

POWER_KEYS = ('processor_w', 'accelerator_w', 'total_w', 'label')


def speedup(baseline_ms: float, candidate_ms: float) -> float:
    """Во сколько раз кандидат быстрее базовой реализации"""
    if baseline_ms <= 0 or candidate_ms <= 0:
        raise NonPositiveTime(f"Время должно быть > 0: baseline={baseline_ms}, candidate={candidate_ms}")
    return baseline_ms / candidate_ms


def energy_per_frame(power_w: float, frame_time_ms: float) -> float:
    """Энергия на кадр, мДж"""
    if frame_time_ms <= 0:
        raise NonPositiveTime(f"Время кадра должно быть > 0: {frame_time_ms}")
    if power_w < 0:
        raise BenchError(f"Мощность не может быть отрицательной: {power_w}")
    return power_w * frame_time_ms


def energy_improvement(baseline_mj: float, candidate_mj: float) -> float:
    """Во сколько раз кандидат экономнее по энергии на кадр"""
    if baseline_mj <= 0 or candidate_mj <= 0:
        raise NonPositiveTime(f"Энергия должна быть > 0: baseline={baseline_mj}, candidate={candidate_mj}")
    return baseline_mj / candidate_mj


@dataclass(frozen=True)
class PowerModel:
    """Мощности платформы, Вт (константы пользователя, не измерения)"""
    processor_w: float
    accelerator_w: float
    total_w: float
    label: str = ""

    def __post_init__(self):
        for name in ('processor_w', 'accelerator_w', 'total_w'):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} не может быть отрицательной: {getattr(self, name)}")
        if self.total_w < max(self.processor_w, self.accelerator_w):
            raise ConfigError(
                f"total_w={self.total_w} меньше максимума processor_w/accelerator_w"
            )

    @property
    def detection_w(self) -> float:
        """Мощность этапа детекции: ускоритель, а без него — процессор"""
        return self.accelerator_w if self.accelerator_w > 0 else self.processor_w


def _power_from_table(table: dict, where: str) -> PowerModel:
    reject_unknown_keys(table, POWER_KEYS, where)
    try:
        return PowerModel(
            processor_w=float(table.get('processor_w', 0.0)),
            accelerator_w=float(table.get('accelerator_w', 0.0)),
            total_w=float(table['total_w']),
            label=str(table.get('label', where)),
        )
    except KeyError as e:
        raise ConfigError(f"В [{where}] нет обязательного ключа {e}") from e
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Некорректное значение в [{where}]: {e}") from e


def load_power_model(path: str, preset: Optional[str] = None) -> PowerModel:
    """
    Модель мощности из TOML

    Файл содержит либо таблицу [power], либо набор [presets.<имя>] и
    необязательный ключ default. Явно указанный preset имеет приоритет.
    """
    data = load_toml_file(path)
    reject_unknown_keys(data, ('power', 'presets', 'default'), path)

    if preset is None and 'power' in data:
        return _power_from_table(data['power'], 'power')

    presets = data.get('presets', {})
    name = preset or data.get('default')
    if not name:
        raise ConfigError(f"{path}: нет [power] и не выбран пресет")
    if name not in presets:
        raise ConfigError(f"{path}: пресет '{name}' не найден, доступны: {', '.join(sorted(presets))}")
    return _power_from_table(presets[name], f"presets.{name}")


@dataclass(frozen=True)
class AgreementStats:
    """Статистика сопоставления двух наборов углов"""
    matched: int
    size_a: int
    size_b: int
    precision: float
    recall: float
    mean_offset: float


def match_corners(a: List[Corner], b: List[Corner], radius: float):
    """
    Жадное сопоставление: пары в порядке возрастания расстояния, затем по (y, x)

    Сопоставляются только углы одного уровня; каждый угол — не более одного раза.

    Returns:
        Список (i, j, distance)
    """
    if radius < 0:
        raise BenchError(f"Радиус должен быть ≥ 0: {radius}")

    candidates = []
    for level in sorted({c.level for c in a} & {c.level for c in b}):
        ia = [i for i, c in enumerate(a) if c.level == level]
        ib = [j for j, c in enumerate(b) if c.level == level]
        pa = np.array([(a[i].x, a[i].y) for i in ia], dtype=np.float64)
        pb = np.array([(b[j].x, b[j].y) for j in ib], dtype=np.float64)
        neighbours = cKDTree(pa).query_ball_tree(cKDTree(pb), r=radius)
        for local_i, local_js in enumerate(neighbours):
            for local_j in local_js:
                i, j = ia[local_i], ib[local_j]
                d = float(np.hypot(a[i].x - b[j].x, a[i].y - b[j].y))
                candidates.append((d, a[i].y, a[i].x, b[j].y, b[j].x, i, j))

    candidates.sort()
    used_a, used_b, pairs = set(), set(), []
    for d, _, _, _, _, i, j in candidates:
        if i in used_a or j in used_b:
            continue
        used_a.add(i)
        used_b.add(j)
        pairs.append((i, j, d))
    return pairs


def agreement(a: List[Corner], b: List[Corner], radius: float) -> AgreementStats:
    """
    Согласие двух детекторов в радиусе radius пикселей

    precision = matched / |b|, recall = matched / |a|; пустой набор дает 1.0.
    """
    pairs = match_corners(a, b, radius)
    matched = len(pairs)
    return AgreementStats(
        matched=matched,
        size_a=len(a),
        size_b=len(b),
        precision=matched / len(b) if b else 1.0,
        recall=matched / len(a) if a else 1.0,
        mean_offset=float(np.mean([d for _, _, d in pairs])) if pairs else 0.0,
    )
