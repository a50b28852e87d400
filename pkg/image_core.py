"""
Базовые операции с изображениями: растр, PGM, размытие, градиенты, пирамида

Этап предобработки фронтенда. Все функции чистые: входные изображения
не изменяются, результаты можно разделять между потоками.
"""

import logging
import os
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy import ndimage

from errors import (
    EvenKernel,
    ImageError,
    ImageTooSmall,
    KernelTooLarge,
    MalformedHeader,
    TooManyLevels,
    TruncatedData,
    UnsupportedMaxval,
)

logger = logging.getLogger(__name__)

SOBEL_SIZES = (3, 7)
PYRAMID_MIN_SIDE = 1  # каждый уровень непустой


@dataclass(frozen=True, eq=False)
class Image:
    """8-битный полутоновый растр (строки подряд, stride = width)"""
    width: int
    height: int
    data: np.ndarray  # (height, width) uint8, только чтение

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ImageError(f"Размеры изображения должны быть > 0: {self.width}×{self.height}")

        arr = np.asarray(self.data)
        if arr.size != self.width * self.height:
            raise ImageError(
                f"Длина данных {arr.size} не равна width×height = {self.width * self.height}"
            )
        if arr.dtype != np.uint8:
            if arr.size and (arr.min() < 0 or arr.max() > 255):
                raise ImageError("Интенсивности должны лежать в [0, 255]")
            arr = arr.astype(np.uint8)

        owned = np.array(arr.reshape(self.height, self.width), dtype=np.uint8, copy=True)
        owned.flags.writeable = False
        object.__setattr__(self, 'data', owned)

    @classmethod
    def from_array(cls, arr) -> "Image":
        """Создание изображения из 2D массива"""
        arr = np.asarray(arr)
        if arr.ndim != 2:
            raise ImageError(f"Ожидается 2D массив, получено измерений: {arr.ndim}")
        return cls(width=arr.shape[1], height=arr.shape[0], data=arr)

    @property
    def stride(self) -> int:
        return self.width

    @property
    def shape(self) -> Tuple[int, int]:
        return self.height, self.width

    def to_array(self) -> np.ndarray:
        """Представление (height, width) без копирования, только чтение"""
        return self.data

    def pixel(self, x: int, y: int) -> int:
        return int(self.data[y, x])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Image):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.data, other.data)

    def __repr__(self) -> str:
        return f"Image({self.width}×{self.height})"


@dataclass(frozen=True, eq=False)
class GradientField:
    """Производные по x и y только для внутренней области (граница ядра отброшена)"""
    width: int  # размеры исходного изображения
    height: int
    margin: int  # полуширина ядра Sobel
    gx: np.ndarray  # (height - 2·margin, width - 2·margin) int64
    gy: np.ndarray

    def __post_init__(self):
        if self.gx.shape != self.gy.shape:
            raise ImageError(f"Размеры gx {self.gx.shape} и gy {self.gy.shape} не совпадают")
        expected = (self.height - 2 * self.margin, self.width - 2 * self.margin)
        if self.gx.shape != expected:
            raise ImageError(f"Размер градиентов {self.gx.shape}, ожидалось {expected}")

    @property
    def interior_shape(self) -> Tuple[int, int]:
        return self.gx.shape

    def full(self) -> Tuple[np.ndarray, np.ndarray]:
        """Градиенты в координатах исходного изображения, граница = 0 (не читать!)"""
        gx = np.zeros((self.height, self.width), dtype=np.int64)
        gy = np.zeros_like(gx)
        m = self.margin
        gx[m:self.height - m, m:self.width - m] = self.gx
        gy[m:self.height - m, m:self.width - m] = self.gy
        return gx, gy


@dataclass(frozen=True)
class Pyramid:
    """Многомасштабное представление: уровень 0 — исходный кадр"""
    levels: Tuple[Image, ...]
    scale_factor: int = 2

    def __post_init__(self):
        levels = tuple(self.levels)
        if not levels:
            raise ImageError("Пирамида должна содержать хотя бы один уровень")
        for prev, cur in zip(levels, levels[1:]):
            if cur.width != prev.width // 2 or cur.height != prev.height // 2:
                raise ImageError(
                    f"Уровень {cur!r} не является половиной уровня {prev!r}"
                )
        object.__setattr__(self, 'levels', levels)

    def __len__(self) -> int:
        return len(self.levels)

    def __getitem__(self, level: int) -> Image:
        return self.levels[level]

    def geometry(self) -> List[Tuple[int, int]]:
        return [(img.width, img.height) for img in self.levels]


def _next_token(raw: bytes, pos: int) -> Tuple[bytes, int]:
    """Следующий токен заголовка PGM с пропуском пробелов и комментариев"""
    n = len(raw)
    while pos < n:
        ch = raw[pos:pos + 1]
        if ch == b'#':
            while pos < n and raw[pos:pos + 1] not in (b'\n', b'\r'):
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not raw[pos:pos + 1].isspace() and raw[pos:pos + 1] != b'#':
        pos += 1
    if start == pos:
        raise MalformedHeader("Заголовок PGM обрывается")
    return raw[start:pos], pos


def load_pgm(path: str) -> Image:
    """
    Чтение бинарного PGM (P5), 8 бит

    Args:
        path: Путь к файлу

    Returns:
        Image с точными байтами пикселей
    """
    with open(path, 'rb') as f:
        raw = f.read()

    magic, pos = _next_token(raw, 0)
    if magic != b'P5':
        raise MalformedHeader(f"{path}: ожидался magic P5, получено {magic[:8]!r}")

    values = []
    for name in ('width', 'height', 'maxval'):
        token, pos = _next_token(raw, pos)
        if not token.isdigit():
            raise MalformedHeader(f"{path}: некорректное поле {name}: {token[:16]!r}")
        values.append(int(token))
    width, height, maxval = values

    if width <= 0 or height <= 0:
        raise MalformedHeader(f"{path}: некорректные размеры {width}×{height}")
    if maxval > 255:
        raise UnsupportedMaxval(f"{path}: maxval={maxval}, поддерживается только ≤ 255")
    if maxval <= 0:
        raise MalformedHeader(f"{path}: некорректный maxval={maxval}")

    # Ровно один пробельный символ отделяет заголовок от данных
    if pos >= len(raw) or not raw[pos:pos + 1].isspace():
        raise MalformedHeader(f"{path}: нет разделителя после заголовка")
    pos += 1

    expected = width * height
    payload = raw[pos:pos + expected]
    if len(payload) < expected:
        raise TruncatedData(f"{path}: {len(payload)} байт данных из {expected}")

    data = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    logger.debug(f"Загружен PGM {path}: {width}×{height}")
    return Image(width=width, height=height, data=data)


def save_pgm(img: Image, path: str) -> None:
    """Запись изображения в бинарный PGM (P5)"""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    header = f"P5\n{img.width} {img.height}\n255\n".encode('ascii')
    with open(path, 'wb') as f:
        f.write(header)
        f.write(img.data.tobytes())


def gaussian_kernel(ksize: int, sigma: float) -> np.ndarray:
    """Одномерное гауссово ядро, нормированное к сумме 1"""
    radius = ksize // 2
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return kernel / kernel.sum()


def gaussian_blur(img: Image, ksize: int, sigma: float) -> Image:
    """
    Сепарабельное гауссово размытие с повтором краевых пикселей

    Args:
        img: Исходное изображение
        ksize: Нечетный размер ядра, не больше min(width, height)
        sigma: Стандартное отклонение (> 0)
    """
    if ksize % 2 == 0:
        raise EvenKernel(f"Размер ядра должен быть нечетным: {ksize}")
    if ksize > min(img.width, img.height):
        raise KernelTooLarge(f"Ядро {ksize} больше изображения {img.width}×{img.height}")
    if sigma <= 0:
        raise ImageError(f"sigma должна быть > 0: {sigma}")

    kernel = gaussian_kernel(ksize, sigma)
    work = img.data.astype(np.float64)
    work = ndimage.correlate1d(work, kernel, axis=1, mode='nearest')
    work = ndimage.correlate1d(work, kernel, axis=0, mode='nearest')
    out = np.clip(np.rint(work), 0, 255).astype(np.uint8)
    return Image.from_array(out)


def binomial_row(length: int) -> np.ndarray:
    """Биномиальные коэффициенты (1 + x)^(length-1)"""
    row = np.array([1], dtype=np.int64)
    for _ in range(length - 1):
        row = np.convolve(row, [1, 1])
    return row


def sobel_kernels(ksize: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Расширенный Sobel: сглаживающий вектор и вектор центральной разности

    smooth = биномиальный ряд длины ksize,
    deriv = биномиальный ряд длины ksize-2, свернутый с [-1, 0, 1].
    Ядро по x — внешнее произведение smooth (строки) и deriv (столбцы).
    """
    if ksize not in SOBEL_SIZES:
        raise ImageError(f"Поддерживаются ядра Sobel {SOBEL_SIZES}, получено {ksize}")
    smooth = binomial_row(ksize)
    deriv = np.convolve(binomial_row(ksize - 2), [-1, 0, 1])
    return smooth, deriv


def sobel_gradients(img: Image, ksize: int) -> GradientField:
    """
    Целочисленные градиенты Sobel 3×3 или 7×7

    Граница шириной ksize//2 отбрасывается: там ядро не помещается.
    """
    if ksize not in SOBEL_SIZES:
        raise ImageError(f"Поддерживаются ядра Sobel {SOBEL_SIZES}, получено {ksize}")
    if img.width < ksize or img.height < ksize:
        raise ImageTooSmall(f"Изображение {img.width}×{img.height} меньше ядра {ksize}×{ksize}")

    smooth, deriv = sobel_kernels(ksize)
    margin = ksize // 2
    src = img.data.astype(np.int64)

    gx = ndimage.correlate1d(src, deriv, axis=1, mode='nearest')
    gx = ndimage.correlate1d(gx, smooth, axis=0, mode='nearest')
    gy = ndimage.correlate1d(src, smooth, axis=1, mode='nearest')
    gy = ndimage.correlate1d(gy, deriv, axis=0, mode='nearest')

    inner = (slice(margin, img.height - margin), slice(margin, img.width - margin))
    return GradientField(
        width=img.width,
        height=img.height,
        margin=margin,
        gx=np.ascontiguousarray(gx[inner]),
        gy=np.ascontiguousarray(gy[inner]),
    )


def downsample_box(img: Image) -> Image:
    """Усреднение 2×2 и прореживание; округление к ближайшему (половина вверх)"""
    h2, w2 = img.height // 2, img.width // 2
    src = img.data[:2 * h2, :2 * w2].astype(np.int32)
    total = src[0::2, 0::2] + src[0::2, 1::2] + src[1::2, 0::2] + src[1::2, 1::2]
    return Image.from_array(((total + 2) // 4).astype(np.uint8))


def build_pyramid(img: Image, levels: int) -> Pyramid:
    """
    Пирамида изображений с коэффициентом 2

    Args:
        img: Уровень 0
        levels: Число уровней (≥ 1); верхний уровень непустой
    """
    if levels < 1:
        raise ImageError(f"Число уровней должно быть ≥ 1: {levels}")
    top_w = img.width >> (levels - 1)
    top_h = img.height >> (levels - 1)
    if top_w < PYRAMID_MIN_SIDE or top_h < PYRAMID_MIN_SIDE:
        raise TooManyLevels(
            f"{levels} уровней для {img.width}×{img.height}: верхний уровень {top_w}×{top_h} пуст"
        )

    stack = [img]
    for _ in range(1, levels):
        stack.append(downsample_box(stack[-1]))
    return Pyramid(levels=tuple(stack))
