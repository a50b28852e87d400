"""
Замер времени этапов фронтенда по кадрам
"""

import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, Iterator, List, Optional, Tuple

import numpy as np

logger = logging.getLogger(__name__)


class Stage(Enum):
    PREPROCESS = "preprocess"
    DETECTION = "detection"
    FLOW = "flow"


STAGE_ORDER = (Stage.PREPROCESS, Stage.DETECTION, Stage.FLOW)


@dataclass
class StageEvent:
    stage: str
    frame: int
    repetition: int
    start: float
    end: float

    @property
    def elapsed_ms(self) -> float:
        return (self.end - self.start) * 1000.0


@dataclass
class StageTimer:
    """Журнал замеров на монотонных часах с индексом по (этап, кадр)"""
    clock: Callable[[], float] = time.perf_counter
    events: List[StageEvent] = field(default_factory=list)
    _index: Dict[Tuple[str, int], List[StageEvent]] = field(default_factory=dict, init=False, repr=False)
    _first_start: Optional[float] = field(default=None, init=False, repr=False)

    @contextmanager
    def measure(self, stage: Stage, frame: int, repetition: int = 0) -> Iterator[None]:
        start = self.clock()
        try:
            yield
        finally:
            self.record(StageEvent(
                stage=stage.value,
                frame=frame,
                repetition=repetition,
                start=start,
                end=self.clock(),
            ))

    def record(self, event: StageEvent) -> None:
        self.events.append(event)
        self._index.setdefault((event.stage, event.frame), []).append(event)
        if self._first_start is None or event.start < self._first_start:
            self._first_start = event.start

    def first_start(self) -> Optional[float]:
        """Начало самого раннего замера (для проверки, что загрузка была раньше)"""
        return self._first_start

    def samples_ms(self, stage: Stage, frame: int) -> List[float]:
        return [e.elapsed_ms for e in self._index.get((stage.value, frame), [])]

    def median_ms(self, stage: Stage, frame: int) -> float:
        samples = self.samples_ms(stage, frame)
        return float(np.median(samples)) if samples else 0.0

    def frame_medians(self, frame: int) -> Dict[Stage, float]:
        return {stage: self.median_ms(stage, frame) for stage in STAGE_ORDER}
