"""
Конфигурационный файл для FeatFront Bench
Содержит все настройки и константы
"""

import logging
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from typing import Any, Dict

from dotenv import load_dotenv

from errors import ConfigError

logger = logging.getLogger(__name__)

# Переменные из .env подхватываются до чтения настроек
load_dotenv()


class Config:
    """Основные настройки стенда (значения по умолчанию — конфигурация фронтенда VIO)"""

    # FAST
    FAST_ARC_LENGTH = int(os.getenv("FAST_ARC_LENGTH", "9"))  # FAST-9
    FAST_THRESHOLD = int(os.getenv("FAST_THRESHOLD", "10"))
    FAST_NMS_WINDOW = int(os.getenv("FAST_NMS_WINDOW", "3"))  # 3×3
    FAST_LANES = int(os.getenv("FAST_LANES", "8"))  # пикселей за такт пакетного движка

    # Harris
    HARRIS_K = float(os.getenv("HARRIS_K", "0.04"))
    HARRIS_SOBEL_SIZE = int(os.getenv("HARRIS_SOBEL_SIZE", "7"))
    HARRIS_BLOCK_SIZE = int(os.getenv("HARRIS_BLOCK_SIZE", "7"))
    HARRIS_NMS_WINDOW = int(os.getenv("HARRIS_NMS_WINDOW", "2"))  # 2×2, якорь слева сверху
    # Пустое значение: порог калибруется на первых HARRIS_CALIBRATION_FRAMES кадрах
    # синтетического корпуса (SYNTH_SEED, 752×480) так, чтобы углов Harris было
    # не больше HARRIS_FAST_RATIO × углов FAST. Откалиброванное значение
    # печатает `python config.py`; его можно закрепить через переменную окружения
    HARRIS_RESPONSE_THRESHOLD = (float(os.environ["HARRIS_RESPONSE_THRESHOLD"])
                                 if os.getenv("HARRIS_RESPONSE_THRESHOLD") else None)
    HARRIS_CALIBRATION_FRAMES = int(os.getenv("HARRIS_CALIBRATION_FRAMES", "2"))
    HARRIS_FAST_RATIO = float(os.getenv("HARRIS_FAST_RATIO", "1.0"))

    # Фиксированная точка: I.F для градиентов/тензора и для аккумулятора отклика
    FIXED_FORMAT = os.getenv("FIXED_FORMAT", "16.8")
    FIXED_ACC_FORMAT = os.getenv("FIXED_ACC_FORMAT", "48.8")

    # Lucas-Kanade (параметры фронтенда не опубликованы, типовые значения)
    LK_WINDOW = int(os.getenv("LK_WINDOW", "21"))
    LK_MAX_ITERS = int(os.getenv("LK_MAX_ITERS", "30"))
    LK_EPS = float(os.getenv("LK_EPS", "0.01"))

    # Пирамида и предобработка
    PYRAMID_LEVELS = int(os.getenv("PYRAMID_LEVELS", "3"))
    BLUR_ENABLED = os.getenv("BLUR_ENABLED", "0") == "1"
    BLUR_KSIZE = int(os.getenv("BLUR_KSIZE", "5"))
    BLUR_SIGMA = float(os.getenv("BLUR_SIGMA", "1.0"))

    # Протокол измерений
    BENCH_WARMUP = int(os.getenv("BENCH_WARMUP", "5"))
    BENCH_REPETITIONS = int(os.getenv("BENCH_REPETITIONS", "3"))
    AGREEMENT_RADIUS = float(os.getenv("AGREEMENT_RADIUS", "2"))

    # Синтетический корпус
    SYNTH_SEED = int(os.getenv("SYNTH_SEED", "2024"))
    SYNTH_WIDTH = int(os.getenv("SYNTH_WIDTH", "752"))  # разрешение EuRoC
    SYNTH_HEIGHT = int(os.getenv("SYNTH_HEIGHT", "480"))

    # Пути к файлам
    REPORTS_DIR = os.getenv("REPORTS_DIR", "reports")
    LOG_FILE = os.getenv("LOG_FILE", "")

    # Настройки логирования
    LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")

    @classmethod
    def validate_config(cls) -> bool:
        """Валидация диапазонов настроек"""
        problems = []

        if not 9 <= cls.FAST_ARC_LENGTH <= 16:
            problems.append(f"FAST_ARC_LENGTH={cls.FAST_ARC_LENGTH} вне [9, 16]")
        if not 1 <= cls.FAST_THRESHOLD <= 254:
            problems.append(f"FAST_THRESHOLD={cls.FAST_THRESHOLD} вне [1, 254]")
        if cls.FAST_LANES not in (1, 4, 8, 16):
            problems.append(f"FAST_LANES={cls.FAST_LANES} не из {{1, 4, 8, 16}}")
        if not 0 < cls.HARRIS_K < 0.25:
            problems.append(f"HARRIS_K={cls.HARRIS_K} вне (0, 0.25)")
        for name in ('HARRIS_SOBEL_SIZE', 'HARRIS_BLOCK_SIZE', 'FAST_NMS_WINDOW', 'LK_WINDOW'):
            if getattr(cls, name) % 2 == 0:
                problems.append(f"{name} должен быть нечетным")
        if cls.HARRIS_RESPONSE_THRESHOLD is not None and cls.HARRIS_RESPONSE_THRESHOLD < 0:
            problems.append(f"HARRIS_RESPONSE_THRESHOLD={cls.HARRIS_RESPONSE_THRESHOLD} < 0")
        if cls.HARRIS_CALIBRATION_FRAMES < 1 or not 0 < cls.HARRIS_FAST_RATIO <= 2:
            problems.append("HARRIS_CALIBRATION_FRAMES ≥ 1 и HARRIS_FAST_RATIO в (0, 2]")
        if cls.BENCH_REPETITIONS < 1 or cls.BENCH_WARMUP < 0:
            problems.append("BENCH_REPETITIONS ≥ 1 и BENCH_WARMUP ≥ 0")

        if problems:
            for problem in problems:
                logger.error(f"❌ Некорректная настройка: {problem}")
            return False

        logger.info("✅ Конфигурация валидна")
        return True

    @classmethod
    def print_config_status(cls):
        """Вывод статуса конфигурации"""
        print("🔧 Статус конфигурации FeatFront Bench:")
        print(f"  FAST: FAST-{cls.FAST_ARC_LENGTH}, t={cls.FAST_THRESHOLD}, "
              f"NMS {cls.FAST_NMS_WINDOW}×{cls.FAST_NMS_WINDOW}, линий {cls.FAST_LANES}")
        from detectors.harris import default_response_threshold

        source = "задан" if cls.HARRIS_RESPONSE_THRESHOLD is not None else "калибровка"
        print(f"  Harris: k={cls.HARRIS_K}, Sobel {cls.HARRIS_SOBEL_SIZE}×{cls.HARRIS_SOBEL_SIZE}, "
              f"блок {cls.HARRIS_BLOCK_SIZE}×{cls.HARRIS_BLOCK_SIZE}, "
              f"порог {default_response_threshold():.6g} ({source})")
        print(f"  Фиксированная точка: {cls.FIXED_FORMAT} (аккумулятор {cls.FIXED_ACC_FORMAT})")
        print(f"  LK: окно {cls.LK_WINDOW}, итераций {cls.LK_MAX_ITERS}, eps {cls.LK_EPS}")
        print(f"  Стенд: warmup {cls.BENCH_WARMUP}, повторов {cls.BENCH_REPETITIONS}")
        print(f"  Отчеты: {cls.REPORTS_DIR}, лог: {cls.LOG_FILE or '—'}")


def load_toml_file(path: str) -> Dict[str, Any]:
    """Чтение TOML-файла конфигурации с понятными ошибками"""
    try:
        with open(path, 'rb') as f:
            return tomllib.load(f)
    except FileNotFoundError as e:
        raise ConfigError(f"Файл конфигурации не найден: {path}") from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"Ошибка разбора TOML {path}: {e}") from e


def reject_unknown_keys(section: Dict[str, Any], allowed, where: str) -> None:
    """Проверка, что в секции нет неизвестных ключей"""
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigError(f"Неизвестные ключи в [{where}]: {', '.join(unknown)}")


if __name__ == "__main__":
    Config.print_config_status()
    Config.validate_config()
