"""
Общие фикстуры тестов FeatFront Bench
"""

import numpy as np
import pytest
from scipy import ndimage

from image_core import Image, save_pgm


def make_bright_dot(size: int = 17, background: int = 50, center: int = 200) -> Image:
    arr = np.full((size, size), background, dtype=np.uint8)
    arr[size // 2, size // 2] = center
    return Image.from_array(arr)


def make_random_image(seed: int, width: int, height: int) -> Image:
    rng = np.random.default_rng(seed)
    return Image.from_array(rng.integers(0, 256, size=(height, width), dtype=np.uint8))


def smooth_texture(seed: int, height: int, width: int, sigma: float = 4.0) -> np.ndarray:
    """Гладкая текстура в float64 с диапазоном [20, 235]"""
    rng = np.random.default_rng(seed)
    field = ndimage.gaussian_filter(rng.random((height, width)), sigma)
    field = (field - field.min()) / (field.max() - field.min())
    return 20.0 + 215.0 * field


def to_image(values: np.ndarray) -> Image:
    return Image.from_array(np.clip(np.rint(values), 0, 255).astype(np.uint8))


@pytest.fixture
def bright_dot() -> Image:
    return make_bright_dot()


@pytest.fixture
def blank() -> Image:
    return Image.from_array(np.full((32, 32), 100, dtype=np.uint8))


@pytest.fixture
def random_image():
    """Фабрика случайных изображений с фиксированным seed"""
    return make_random_image


@pytest.fixture
def dot_pgm(tmp_path, bright_dot) -> str:
    path = str(tmp_path / "dot.pgm")
    save_pgm(bright_dot, path)
    return path


@pytest.fixture
def checker_corner() -> Image:
    """Шахматный угол: четыре квадранта 50/200, общая вершина в (15.5, 15.5)"""
    arr = np.full((32, 32), 50, dtype=np.uint8)
    arr[:16, :16] = 200
    arr[16:, 16:] = 200
    return Image.from_array(arr)
