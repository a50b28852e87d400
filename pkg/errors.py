"""
Исключения FeatFront Bench

Единая иерархия ошибок: базовый класс, промежуточные классы по доменам
(изображения, детекторы, трекинг, бенчмарк, конфигурация, отчеты)
и конечные классы для каждой конкретной ситуации.
"""


class FeatFrontError(Exception):
    """Базовая ошибка библиотеки"""


# Изображения
class ImageError(FeatFrontError):
    """Ошибки работы с растрами и файлами PGM"""


class MalformedHeader(ImageError):
    """Некорректный заголовок PGM (magic, размеры)"""


class TruncatedData(ImageError):
    """В файле меньше байт, чем width×height"""


class UnsupportedMaxval(ImageError):
    """maxval > 255 (16-битные изображения не поддерживаются)"""


class KernelTooLarge(ImageError):
    """Ядро фильтра больше изображения"""


class EvenKernel(ImageError):
    """Размер ядра должен быть нечетным"""


class ImageTooSmall(ImageError):
    """Изображение меньше, чем требует операция"""


class TooManyLevels(ImageError):
    """Верхний уровень пирамиды получился бы пустым"""


# Детекторы
class DetectorError(FeatFrontError):
    """Ошибки детекторов углов"""


class OutOfInterior(DetectorError):
    """Пиксель вне допустимой внутренней области детектора"""


class NotACorner(DetectorError):
    """Оценка запрошена для пикселя, не прошедшего segment test"""


class UnsupportedLaneCount(DetectorError):
    """Неподдерживаемое число линий пакетного движка"""


class BlockTooLarge(DetectorError):
    """Окно суммирования тензора не помещается в область градиентов"""


class FormatOverflow(DetectorError):
    """Аккумулятор фиксированной точки превысил бюджет бит"""


class InvalidDetectorConfig(DetectorError):
    """Параметры детектора вне допустимых диапазонов"""


# Оптический поток
class FlowError(FeatFrontError):
    """Ошибки трекера Lucas-Kanade"""


class PyramidMismatch(FlowError):
    """Пирамиды кадров имеют разную геометрию"""


# Бенчмарк
class BenchError(FeatFrontError):
    """Ошибки измерительного стенда"""


class MissingIndex(BenchError):
    """Нет файла mav0/cam0/data.csv"""


class UnreadableFrame(BenchError):
    """Кадр последовательности не читается"""


class NonMonotonicTimestamps(BenchError):
    """Метки времени кадров не строго возрастают"""


class EmptySequence(BenchError):
    """Последовательность без кадров"""


class NonPositiveTime(BenchError):
    """Время (или энергия) должно быть строго положительным"""


# Конфигурация и отчеты
class ConfigError(FeatFrontError):
    """Ошибки конфигурационных файлов и параметров"""


class ReportError(FeatFrontError):
    """Ошибки формирования отчетов"""


class IoFailure(ReportError):
    """Ошибка записи/чтения файла отчета"""
