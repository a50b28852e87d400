"""
Опубликованные эталонные значения: время выполнения и мощность платформ

Это справочные константы из публикации (Jetson AGX Orin и Versal VCK190),
а не результаты измерений на этой машине. Используются для сводной
таблицы ускорений и энергии на кадр.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional

import pandas as pd

from bench_metrics import energy_improvement, energy_per_frame, speedup

logger = logging.getLogger(__name__)

SEQUENCES = ('MH01', 'MH02', 'MH03', 'MH04', 'MH05')


@dataclass(frozen=True)
class ReferenceRuntime:
    """Время, мс: детектор признаков / поток локализации / весь конвейер"""
    detector_ms: float
    localization_ms: float
    pipeline_ms: float


@dataclass(frozen=True)
class ReferencePower:
    """Мощность, Вт; accelerator_w = None — ускорителя нет"""
    processor_w: float
    accelerator_w: Optional[float]
    total_w: float


class ReferenceData:
    """Таблицы опубликованных значений"""

    RUNTIMES: Dict[str, Dict[str, ReferenceRuntime]] = {
        'opencv_fast_orin_max': {
            'MH01': ReferenceRuntime(2.41, 4.03, 30.69),
            'MH02': ReferenceRuntime(1.88, 4.03, 31.19),
            'MH03': ReferenceRuntime(1.66, 3.64, 24.26),
            'MH04': ReferenceRuntime(1.27, 3.39, 50.68),
            'MH05': ReferenceRuntime(1.26, 3.22, 79.28),
        },
        'ftfast_orin_max': {
            'MH01': ReferenceRuntime(0.26, 2.84, 12.77),
            'MH02': ReferenceRuntime(0.26, 2.90, 13.19),
            'MH03': ReferenceRuntime(0.26, 2.58, 8.97),
            'MH04': ReferenceRuntime(0.26, 2.51, 9.97),
            'MH05': ReferenceRuntime(0.25, 2.61, 15.94),
        },
        'opencv_fast_versal': {
            'MH01': ReferenceRuntime(7.35, 15.82, 128.19),
            'MH02': ReferenceRuntime(7.15, 15.61, 128.63),
            'MH03': ReferenceRuntime(6.34, 14.47, 96.12),
            'MH04': ReferenceRuntime(5.07, 13.44, 157.78),
            'MH05': ReferenceRuntime(5.02, 12.90, 318.93),
        },
        'vitis_fast': {
            'MH01': ReferenceRuntime(0.23, 10.96, 42.07),
            'MH02': ReferenceRuntime(0.30, 11.19, 64.72),
            'MH03': ReferenceRuntime(0.30, 9.54, 28.16),
            'MH04': ReferenceRuntime(0.29, 9.09, 29.92),
            'MH05': ReferenceRuntime(0.30, 9.50, 44.47),
        },
    }

    POWER: Dict[str, ReferencePower] = {
        'fast_opencv_xeon': ReferencePower(120.0, None, 120.0),
        'fast_ftfast_orin_vs': ReferencePower(0.8, 5.6, 12.6),
        'fast_ftfast_orin_max': ReferencePower(4.4, 8.8, 20.4),
        'fast_vitis_fast': ReferencePower(4.9, 10.8, 16.7),
        'harris_opencv_xeon': ReferencePower(120.0, None, 120.0),
        'harris_vpi_orin_vs': ReferencePower(3.8, 6.0, 17.5),
        'harris_vpi_orin_max': ReferencePower(4.4, 8.8, 21.5),
        'harris_vitis_harris': ReferencePower(4.6, 10.3, 16.5),
        'superpoint_orin_vs': ReferencePower(2.4, 8.8, 18.5),
        'superpoint_orin_max': ReferencePower(4.4, 9.6, 22.0),
        'superpoint_vitis': ReferencePower(5.2, 21.1, 30.0),
    }

    # Реализация -> пресет мощности ее платформы
    RUNTIME_POWER = {
        'ftfast_orin_max': 'fast_ftfast_orin_max',
        'vitis_fast': 'fast_vitis_fast',
    }

    @classmethod
    def runtime(cls, implementation: str, sequence: str) -> ReferenceRuntime:
        return cls.RUNTIMES[implementation][sequence]

    @classmethod
    def accelerator_energy_mj(cls, implementation: str, sequence: str) -> float:
        power = cls.POWER[cls.RUNTIME_POWER[implementation]]
        return energy_per_frame(power.accelerator_w, cls.runtime(implementation, sequence).detector_ms)


def reference_summary() -> pd.DataFrame:
    """
    Сводка по последовательностям: ускорения детектора и потока локализации,
    энергия детектора на кадр и выигрыш FTFast по энергии относительно Vitis FAST
    """
    rows = []
    for seq in SEQUENCES:
        orin_cpu = ReferenceData.runtime('opencv_fast_orin_max', seq)
        orin_gpu = ReferenceData.runtime('ftfast_orin_max', seq)
        versal_cpu = ReferenceData.runtime('opencv_fast_versal', seq)
        versal_fpga = ReferenceData.runtime('vitis_fast', seq)
        ftfast_mj = ReferenceData.accelerator_energy_mj('ftfast_orin_max', seq)
        vitis_mj = ReferenceData.accelerator_energy_mj('vitis_fast', seq)
        rows.append({
            'sequence': seq,
            'orin_detector_speedup': speedup(orin_cpu.detector_ms, orin_gpu.detector_ms),
            'versal_detector_speedup': speedup(versal_cpu.detector_ms, versal_fpga.detector_ms),
            'orin_localization_speedup': speedup(orin_cpu.localization_ms, orin_gpu.localization_ms),
            'versal_localization_speedup': speedup(versal_cpu.localization_ms, versal_fpga.localization_ms),
            'orin_pipeline_speedup': speedup(orin_cpu.pipeline_ms, orin_gpu.pipeline_ms),
            'versal_pipeline_speedup': speedup(versal_cpu.pipeline_ms, versal_fpga.pipeline_ms),
            'ftfast_energy_mj': ftfast_mj,
            'vitis_energy_mj': vitis_mj,
            'ftfast_vs_vitis_energy': energy_improvement(vitis_mj, ftfast_mj),
        })
    return pd.DataFrame(rows).round(3)
