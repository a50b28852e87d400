"""
Запись отчетов BreakdownReport: CSV, JSON, Markdown, XLSX

Порядок полей фиксирован, числа выводятся с тремя знаками, поэтому
одинаковый отчет всегда дает побайтно одинаковые CSV/JSON/Markdown.
"""

import io
import logging
import os
from dataclasses import asdict
from typing import Any, Dict, Optional, Tuple, Union

import openpyxl
import pandas as pd
import ujson
from openpyxl.styles import Font, PatternFill

from errors import IoFailure, ReportError
from pipeline import BreakdownReport, FrameBreakdown
from stage_timer import STAGE_ORDER

logger = logging.getLogger(__name__)

REPORT_FORMATS = ('csv', 'json', 'markdown', 'xlsx')
TOTAL_ROW = 'total'


def report_to_dict(report: BreakdownReport) -> Dict[str, Any]:
    return {
        'summary': report.summary(),
        'stages': [
            {
                'stage': stage.value,
                'ms': report.stage_ms[stage.value],
                'share': report.stage_share[stage.value],
            }
            for stage in STAGE_ORDER
        ],
        'frames': [asdict(frame) for frame in report.frames],
    }


def report_from_dict(payload: Dict[str, Any]) -> BreakdownReport:
    summary = payload['summary']
    return BreakdownReport(
        detector=summary['detector'],
        n_frames=summary['n_frames'],
        warmup_frames=summary['warmup_frames'],
        repetitions=summary['repetitions'],
        stage_ms={row['stage']: row['ms'] for row in payload['stages']},
        stage_share={row['stage']: row['share'] for row in payload['stages']},
        total_ms=summary['total_ms'],
        fps=summary['fps'],
        fps_aggregate=summary['fps_aggregate'],
        corners_per_frame=summary['corners_per_frame'],
        energy_per_frame_mj=summary['energy_per_frame_mj'],
        pipeline_energy_per_frame_mj=summary['pipeline_energy_per_frame_mj'],
        power_label=summary['power_label'],
        frames=[FrameBreakdown(**frame) for frame in payload['frames']],
    )


def stage_table(report: BreakdownReport) -> pd.DataFrame:
    """Строка на этап плюс итог"""
    rows = [(s.value, report.stage_ms[s.value], report.stage_share[s.value]) for s in STAGE_ORDER]
    rows.append((TOTAL_ROW, report.total_ms, 1.0))
    return pd.DataFrame(rows, columns=['stage', 'ms', 'share'])


def summary_table(report: BreakdownReport) -> pd.DataFrame:
    """Агрегаты отчета парами key,value; None записывается пустой строкой"""
    rows = [(key, "" if value is None else str(value)) for key, value in report.summary().items()]
    return pd.DataFrame(rows, columns=['key', 'value'])


class BreakdownReportWriter:
    """Генератор файлов отчета"""

    def write_csv(self, report: BreakdownReport, path: str) -> None:
        """Таблица этапов, пустая строка, затем агрегаты"""
        with open(path, 'w', encoding='utf-8', newline='') as f:
            stage_table(report).to_csv(f, index=False, float_format='%.3f', lineterminator='\n')
            f.write('\n')
            summary_table(report).to_csv(f, index=False, lineterminator='\n')

    def write_json(self, report: BreakdownReport, path: str) -> None:
        with open(path, 'w', encoding='utf-8') as f:
            f.write(ujson.dumps(report_to_dict(report), indent=2, ensure_ascii=False))
            f.write('\n')

    def render_markdown(self, report: BreakdownReport) -> str:
        lines = [
            f"# Разбивка времени фронтенда: {report.detector}",
            "",
            "| Этап | мс | Доля |",
            "|---|---:|---:|",
        ]
        for row in stage_table(report).itertuples(index=False):
            name = f"**{row.stage}**" if row.stage == TOTAL_ROW else row.stage
            lines.append(f"| {name} | {row.ms:.3f} | {row.share:.3f} |")
        lines += [
            "",
            f"- Кадров: {report.n_frames} (прогрев {report.warmup_frames}), повторов {report.repetitions}",
            f"- FPS после прогрева: {report.fps:.3f}; по всей последовательности: {report.fps_aggregate:.3f}",
            f"- Углов на кадр: {report.corners_per_frame:.3f}",
        ]
        if report.energy_per_frame_mj is not None:
            lines.append(f"- Энергия детекции на кадр: {report.energy_per_frame_mj:.3f} мДж")
        if report.pipeline_energy_per_frame_mj is not None:
            label = f" ({report.power_label})" if report.power_label else ""
            lines.append(f"- Энергия фронтенда на кадр: {report.pipeline_energy_per_frame_mj:.3f} мДж{label}")
        return "\n".join(lines) + "\n"

    def write_markdown(self, report: BreakdownReport, path: str) -> None:
        with open(path, 'w', encoding='utf-8') as f:
            f.write(self.render_markdown(report))

    def write_xlsx(self, report: BreakdownReport, path: str) -> None:
        wb = openpyxl.Workbook()
        wb.remove(wb.active)

        sheet = wb.create_sheet("Breakdown")
        sheet['A1'] = f"Разбивка времени фронтенда: {report.detector}"
        sheet['A1'].font = Font(size=14, bold=True)
        for col, title in enumerate(['Этап', 'мс', 'Доля'], start=1):
            sheet.cell(row=3, column=col, value=title).font = Font(size=11, bold=True)
        for row_idx, row in enumerate(stage_table(report).itertuples(index=False), start=4):
            sheet.cell(row=row_idx, column=1, value=row.stage)
            sheet.cell(row=row_idx, column=2, value=row.ms).number_format = '0.000'
            sheet.cell(row=row_idx, column=3, value=row.share).number_format = '0.000'
            if row.stage == TOTAL_ROW:
                for col in range(1, 4):
                    sheet.cell(row=row_idx, column=col).font = Font(bold=True)
        detection_row = 4 + [s.value for s in STAGE_ORDER].index('detection')
        highlight = PatternFill(start_color='90EE90', end_color='90EE90', fill_type='solid')
        sheet.cell(row=detection_row, column=3).fill = highlight

        summary_row = 10
        for offset, (key, value) in enumerate(report.summary().items()):
            sheet.cell(row=summary_row + offset, column=1, value=key)
            sheet.cell(row=summary_row + offset, column=2, value=value)
        sheet.column_dimensions['A'].width = 32
        sheet.column_dimensions['B'].width = 18
        sheet.column_dimensions['C'].width = 12

        frames = wb.create_sheet("Frames")
        columns = list(FrameBreakdown.__dataclass_fields__)
        for col, title in enumerate(columns, start=1):
            frames.cell(row=1, column=col, value=title).font = Font(bold=True)
        for row_idx, frame in enumerate(report.frames, start=2):
            for col, name in enumerate(columns, start=1):
                frames.cell(row=row_idx, column=col, value=getattr(frame, name))

        wb.save(path)


def emit_report(report: BreakdownReport, fmt: str, path: str) -> None:
    """
    Запись отчета в выбранном формате

    Raises:
        ReportError: неизвестный формат
        IoFailure: ошибка записи файла
    """
    if fmt not in REPORT_FORMATS:
        raise ReportError(f"Неизвестный формат отчета '{fmt}', доступны: {', '.join(REPORT_FORMATS)}")

    writer = BreakdownReportWriter()
    try:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        getattr(writer, f"write_{fmt}")(report, path)
    except OSError as e:
        raise IoFailure(f"Не удалось записать отчет {path}: {e}") from e
    logger.info(f"💾 Отчет {fmt} сохранен: {path}")


def load_report_json(path: str) -> BreakdownReport:
    """Чтение JSON-формы отчета"""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            payload = ujson.load(f)
    except (OSError, ValueError) as e:
        raise IoFailure(f"Не удалось прочитать отчет {path}: {e}") from e
    try:
        return report_from_dict(payload)
    except (KeyError, TypeError) as e:
        raise ReportError(f"Отчет {path} имеет неверную структуру: {e}") from e


def _summary_value(text: str) -> Optional[Union[int, float, str]]:
    if text == "":
        return None
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def load_report_csv(path: str) -> Tuple[pd.DataFrame, Dict[str, Any]]:
    """Чтение CSV-формы отчета: таблица этапов и агрегаты с восстановленными типами"""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            text = f.read()
    except OSError as e:
        raise IoFailure(f"Не удалось прочитать отчет {path}: {e}") from e
    if '\n\n' not in text:
        raise ReportError(f"В отчете {path} нет секции агрегатов")

    stages_text, summary_text = text.split('\n\n', 1)
    stages = pd.read_csv(io.StringIO(stages_text))
    summary = pd.read_csv(io.StringIO(summary_text), dtype=str, keep_default_na=False)
    return stages, {row.key: _summary_value(row.value) for row in summary.itertuples(index=False)}
