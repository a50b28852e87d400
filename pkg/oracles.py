"""
Переборные эталоны для тестов

Каждый эталон написан заново прямыми циклами и не использует код
детекторов, трекера или метрик (общий только тип Image). Предназначены
для маленьких изображений: FAST до 64×64, Harris до 32×32.
"""

import math
from dataclasses import dataclass
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np

from image_core import Image

# (dx, dy) по часовой стрелке от верхней точки
RING = [(0, -3), (1, -3), (2, -2), (3, -1), (3, 0), (3, 1), (2, 2), (1, 3),
        (0, 3), (-1, 3), (-2, 2), (-3, 1), (-3, 0), (-3, -1), (-2, -2), (-1, -3)]


@dataclass
class OracleCase:
    """Вход, ожидаемый результат эталона и допуск сравнения"""
    seed: int
    description: str
    expected: Any
    tolerance: float = 0.0


@dataclass(frozen=True)
class OracleCorner:
    x: int
    y: int
    score: Any
    level: int = 0


def oracle_segment_test(rows: List[List[int]], x: int, y: int, t: int, n: int = 9) -> bool:
    """Перебор всех 16 циклических дуг длины n"""
    center = rows[y][x]
    ring = [rows[y + dy][x + dx] for dx, dy in RING]
    for start in range(16):
        if all(ring[(start + i) % 16] > center + t for i in range(n)):
            return True
        if all(ring[(start + i) % 16] < center - t for i in range(n)):
            return True
    return False


def oracle_fast_score(rows: List[List[int]], x: int, y: int, t: int, n: int = 9) -> int:
    """Шаг t = t + ε с ε = 1, пока пиксель остается углом"""
    while oracle_segment_test(rows, x, y, t + 1, n):
        t = t + 1
    return t


def oracle_fast(img: Image, cfg) -> List[OracleCorner]:
    """Три прохода: segment test, оценка, NMS (строгое сравнение по исходным кандидатам)"""
    rows = img.to_array().tolist()
    h, w = img.height, img.width
    t, n = cfg.threshold, cfg.arc_length

    scores = {}
    for y in range(3, h - 3):
        for x in range(3, w - 3):
            if oracle_segment_test(rows, x, y, t, n):
                scores[(x, y)] = oracle_fast_score(rows, x, y, t, n)

    half = cfg.nms_window // 2
    result = []
    for (x, y), s in scores.items():
        suppressed = False
        for dy in range(-half, half + 1):
            for dx in range(-half, half + 1):
                other = scores.get((x + dx, y + dy))
                if other is not None and other > s:
                    suppressed = True
        if not suppressed:
            result.append(OracleCorner(x, y, s))
    result.sort(key=lambda c: (c.y, c.x))
    return result


def _sobel_vectors(ksize: int) -> Tuple[List[int], List[int]]:
    smooth = [math.comb(ksize - 1, i) for i in range(ksize)]
    inner = [math.comb(ksize - 3, i) for i in range(ksize - 2)]

    def at(j):
        return inner[j] if 0 <= j < len(inner) else 0

    deriv = [at(j - 2) - at(j) for j in range(ksize)]
    return smooth, deriv


def oracle_gradients(rows: List[List[int]], ksize: int):
    """Прямая 2D корреляция с ядрами Sobel; словари (x, y) -> int"""
    h, w = len(rows), len(rows[0])
    m = ksize // 2
    smooth, deriv = _sobel_vectors(ksize)
    gx, gy = {}, {}
    for y in range(m, h - m):
        for x in range(m, w - m):
            sx = sy = 0
            for dy in range(-m, m + 1):
                for dx in range(-m, m + 1):
                    v = rows[y + dy][x + dx]
                    sx += smooth[dy + m] * deriv[dx + m] * v
                    sy += deriv[dy + m] * smooth[dx + m] * v
            gx[(x, y)] = sx
            gy[(x, y)] = sy
    return gx, gy


def oracle_structure_tensor(gx, gy, block: int, positions):
    """Суммы произведений градиентов по окну для заданных центров"""
    r = block // 2
    tensor = {}
    for x, y in positions:
        a = b = c = 0
        for dy in range(-r, r + 1):
            for dx in range(-r, r + 1):
                u, v = gx[(x + dx, y + dy)], gy[(x + dx, y + dy)]
                a += u * u
                b += u * v
                c += v * v
        tensor[(x, y)] = (a, b, c)
    return tensor


def oracle_response(a: float, b: float, c: float, k: float) -> float:
    det = a * c - b * b
    trace = a + c
    return det - k * (trace * trace)


def oracle_harris_responses(img: Image, cfg):
    rows = img.to_array().tolist()
    gx, gy = oracle_gradients(rows, cfg.sobel_size)
    margin = cfg.sobel_size // 2 + cfg.block_size // 2
    positions = [(x, y) for y in range(margin, img.height - margin)
                 for x in range(margin, img.width - margin)]
    tensor = oracle_structure_tensor(gx, gy, cfg.block_size, positions)
    return {
        pos: oracle_response(float(a), float(b), float(c), cfg.k)
        for pos, (a, b, c) in tensor.items()
    }


def oracle_harris(img: Image, cfg) -> List[OracleCorner]:
    """Прямые свертки, прямые суммы, скалярная формула, порог, NMS"""
    responses = oracle_harris_responses(img, cfg)
    candidates = {pos: r for pos, r in responses.items() if r > cfg.response_threshold}

    if cfg.nms_window == 2:
        neighbours = [(1, 0), (0, 1), (1, 1)]
    else:
        half = cfg.nms_window // 2
        neighbours = [(dx, dy) for dy in range(-half, half + 1) for dx in range(-half, half + 1)
                      if (dx, dy) != (0, 0)]

    result = []
    for (x, y), r in candidates.items():
        if any(candidates.get((x + dx, y + dy), -math.inf) > r for dx, dy in neighbours):
            continue
        result.append(OracleCorner(x, y, r))
    result.sort(key=lambda c: (c.y, c.x))
    return result


def _bilinear(image: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    h, w = image.shape
    xs = np.clip(xs, 0, w - 1)
    ys = np.clip(ys, 0, h - 1)
    x0 = np.floor(xs).astype(int)
    y0 = np.floor(ys).astype(int)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx, fy = xs - x0, ys - y0
    top = image[y0, x0] * (1 - fx) + image[y0, x1] * fx
    bottom = image[y1, x0] * (1 - fx) + image[y1, x1] * fx
    return top * (1 - fy) + bottom * fy


def oracle_flow(prev: Image, next: Image, point: Tuple[float, float], search_range: float = 2.0,
                step: float = 0.05, window: int = 21) -> Tuple[float, float]:
    """
    Перебор смещений на сетке [-range, range] с шагом step по SSD окна

    При равенстве — меньшая длина смещения, затем лексикографически (dx, dy).
    """
    src = prev.to_array().astype(np.float64)
    dst = next.to_array().astype(np.float64)
    half = window // 2
    oy, ox = np.mgrid[-half:half + 1, -half:half + 1]
    px, py = point
    ox, oy = ox.ravel().astype(np.float64), oy.ravel().astype(np.float64)
    patch = _bilinear(src, px + ox, py + oy)

    count = int(round(2 * search_range / step)) + 1
    grid = [-search_range + i * step for i in range(count)]
    best: Optional[Tuple[float, float, float, float]] = None
    for dx in grid:
        for dy in grid:
            warped = _bilinear(dst, px + dx + ox, py + dy + oy)
            ssd = float(((warped - patch) ** 2).sum())
            key = (ssd, math.hypot(dx, dy), dx, dy)
            if best is None or key < best:
                best = key
    return round(best[2], 10), round(best[3], 10)


def oracle_matching(a: Sequence, b: Sequence, radius: float):
    """
    Оптимальное сопоставление перебором: максимум пар, затем минимум суммы расстояний

    Только для маленьких наборов (≤ 20 точек). Returns: (число пар, сумма расстояний)
    """
    options = []
    for ca in a:
        near = []
        for j, cb in enumerate(b):
            if ca.level != cb.level:
                continue
            d = math.hypot(ca.x - cb.x, ca.y - cb.y)
            if d <= radius:
                near.append((j, d))
        options.append(near)

    best = [0, 0.0]

    def search(i: int, used: frozenset, count: int, total: float) -> None:
        if count + (len(a) - i) < best[0]:
            return
        if i == len(a):
            if count > best[0] or (count == best[0] and total < best[1]):
                best[0], best[1] = count, total
            return
        for j, d in options[i]:
            if j not in used:
                search(i + 1, used | {j}, count + 1, total + d)
        search(i + 1, used, count, total)

    search(0, frozenset(), 0, 0.0)
    return best[0], best[1]
