"""
🔍 Проверка инвариантов отчета о разбивке времени

Отчет с нарушенными инвариантами (доли не складываются в 1, этапы не
складываются в итог) не должен попадать в сравнение реализаций.
"""

import logging
from typing import List, Tuple

from pipeline import BreakdownReport
from stage_timer import STAGE_ORDER

logger = logging.getLogger(__name__)

SHARE_TOLERANCE = 0.01
STAGE_SUM_TOLERANCE = 0.01  # относительная
FPS_TOLERANCE = 0.001       # относительная


class ReportValidator:
    """Валидатор BreakdownReport"""

    def __init__(self):
        self.errors: List[str] = []

    def validate_report(self, report: BreakdownReport) -> Tuple[bool, List[str]]:
        """
        Проверка отчета

        Returns:
            Tuple[bool, List[str]]: (is_valid, error_messages)
        """
        self.errors = []

        # 1. Структура этапов
        names = [s.value for s in STAGE_ORDER]
        for name in names:
            if name not in report.stage_ms or name not in report.stage_share:
                self.errors.append(f"❌ Нет этапа {name}")
        if self.errors:
            return False, self.errors

        # 2. Значения неотрицательны
        for name in names:
            if report.stage_ms[name] < 0:
                self.errors.append(f"❌ Отрицательное время этапа {name}: {report.stage_ms[name]}")
        if report.total_ms <= 0:
            self.errors.append(f"❌ Итоговое время должно быть > 0: {report.total_ms}")

        # 3. Этапы складываются в итог
        stage_sum = sum(report.stage_ms[name] for name in names)
        if report.total_ms > 0 and abs(stage_sum - report.total_ms) > STAGE_SUM_TOLERANCE * report.total_ms:
            self.errors.append(f"❌ Сумма этапов {stage_sum:.3f} мс не равна итогу {report.total_ms:.3f} мс")

        # 4. Доли складываются в 1
        share_sum = sum(report.stage_share[name] for name in names)
        if abs(share_sum - 1.0) > SHARE_TOLERANCE:
            self.errors.append(f"❌ Сумма долей {share_sum:.3f} ≠ 1")

        # 5. FPS согласован со средним временем кадра
        if report.total_ms > 0 and abs(report.fps * report.total_ms - 1000.0) > 1000.0 * FPS_TOLERANCE:
            self.errors.append(f"❌ FPS {report.fps} не согласован со временем кадра {report.total_ms} мс")

        # 6. Кадры
        if report.n_frames != len(report.frames):
            self.errors.append(f"❌ n_frames={report.n_frames}, а кадров в отчете {len(report.frames)}")
        if report.warmup_frames >= max(report.n_frames, 1):
            self.errors.append(f"⚠️ Все {report.n_frames} кадров помечены как прогрев")
        for frame in report.frames:
            if frame.corners < 0 or frame.tracked < 0:
                self.errors.append(f"❌ Кадр {frame.frame}: некорректные счетчики")

        if self.errors:
            for error in self.errors:
                logger.warning(error)
        return len(self.errors) == 0, self.errors


def validate_report(report: BreakdownReport) -> Tuple[bool, List[str]]:
    return ReportValidator().validate_report(report)
