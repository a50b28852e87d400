"""
Harris в фиксированной точке: модель арифметики FPGA-ускорителя

Градиенты и элементы тензора хранятся в формате I.F, отклик — в широком
аккумуляторе. Деления заменены сдвигами, умножение на k — суммой сдвигов,
округление везде к нулю. План (сдвиги, показатели k, проверки переполнения)
строится один раз по конфигурации.

Единицы: "float-единицы" — единицы эталонного float-уровня (целые суммы
Sobel-градиентов). Отклик фиксированного уровня пересчитывается в них
умножением на степень двойки, поэтому сравнение с порогом и вывод оценок
совпадают по масштабу с detect_harris.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from config import Config
from detectors.corner import Corner
from detectors.harris import (
    HarrisConfig,
    ResponseMap,
    box_sum,
    check_harris_size,
    corners_from_response,
)
from errors import FormatOverflow, InvalidDetectorConfig
from image_core import GradientField, Image, sobel_gradients, sobel_kernels

logger = logging.getLogger(__name__)

MAX_TENSOR_BITS = 32
MAX_ACCUMULATOR_BITS = 64
PRODUCT_BITS = 63  # знаковое int64
FLOAT_ROUNDING_SLACK = 1e-12


@dataclass(frozen=True)
class FixedPointFormat:
    """Формат I.F с округлением к нулю"""
    integer_bits: int
    fraction_bits: int
    rounding: str = "truncate"

    def __post_init__(self):
        if self.integer_bits < 2 or self.fraction_bits < 0:
            raise InvalidDetectorConfig(f"Некорректный формат {self}")
        if self.total_bits > MAX_ACCUMULATOR_BITS:
            raise InvalidDetectorConfig(f"Формат {self} шире {MAX_ACCUMULATOR_BITS} бит")
        if self.rounding != "truncate":
            raise InvalidDetectorConfig(f"Поддерживается только truncate, получено {self.rounding}")

    @classmethod
    def parse(cls, text: str) -> "FixedPointFormat":
        """Разбор строки вида '16.8'"""
        try:
            integer, fraction = text.strip().split('.')
            return cls(int(integer), int(fraction))
        except ValueError as e:
            raise InvalidDetectorConfig(f"Формат фиксированной точки должен быть I.F: '{text}'") from e

    @property
    def total_bits(self) -> int:
        return self.integer_bits + self.fraction_bits

    def __str__(self) -> str:
        return f"{self.integer_bits}.{self.fraction_bits}"


def truncate_shift(values, shift: int):
    """Сдвиг вправо с округлением к нулю (shift < 0 — сдвиг влево)"""
    if shift > 0:
        if isinstance(values, np.ndarray):
            return np.sign(values) * (np.abs(values) >> shift)
        return -((-values) >> shift) if values < 0 else values >> shift
    if shift < 0:
        return values << -shift
    return values


def shift_sum_exponents(k: float, max_exponent: int) -> Tuple[int, ...]:
    """Показатели e_i такие, что k ≈ Σ 2^-e_i с точностью 2^-(max_exponent+1)"""
    quantized = int(round(k * (1 << max_exponent)))
    return tuple(
        max_exponent - bit
        for bit in reversed(range(quantized.bit_length()))
        if quantized >> bit & 1
    )


@dataclass(frozen=True)
class FixedPointPlan:
    """Параметры фиксированного конвейера, вычисленные по конфигурации"""
    fmt: FixedPointFormat
    acc_fmt: FixedPointFormat
    k: float
    block_area: int
    gradient_max: int        # max |g| в float-единицах
    gradient_shift: int
    tensor_shift: int
    window_sum_max: int      # max суммы по окну (сырые единицы произведений)
    k_exponents: Tuple[int, ...]

    @property
    def k_approx(self) -> float:
        return sum(2.0 ** -e for e in self.k_exponents)

    @property
    def tensor_scale(self) -> float:
        """Одна единица значения тензора в float-единицах"""
        return 2.0 ** (2 * self.gradient_shift + self.tensor_shift)

    @property
    def tensor_ulp(self) -> float:
        return self.tensor_scale * 2.0 ** -self.fmt.fraction_bits

    @property
    def response_ulp(self) -> float:
        """Одна сырая единица отклика в float-единицах"""
        return self.tensor_scale ** 2 * 2.0 ** -self.fmt.fraction_bits

    @property
    def tensor_raw_max(self) -> int:
        return 1 << (self.fmt.integer_bits - 1 + self.fmt.fraction_bits)

    def tensor_error(self) -> float:
        """Граница ошибки элемента тензора (float-единицы)"""
        f, gs = self.fmt.fraction_bits, self.gradient_shift
        gradient_error = 2.0 ** (gs - f) if gs > f else 0.0
        products_exact = gs <= f and f >= 2 * gs
        product_error = 0.0 if products_exact else 2.0 ** (2 * gs - f)
        per_product = gradient_error * (2 * self.gradient_max + gradient_error) + product_error
        final_shift = self.tensor_ulp if self.tensor_shift > 0 else 0.0
        return self.block_area * per_product + final_shift


def build_plan(cfg: HarrisConfig, fmt: FixedPointFormat,
               acc_fmt: Optional[FixedPointFormat] = None) -> FixedPointPlan:
    """
    План фиксированного конвейера

    Raises:
        FormatOverflow: формат не вмещает градиенты, тензор или отклик
    """
    acc_fmt = acc_fmt or FixedPointFormat.parse(Config.FIXED_ACC_FORMAT)
    i_bits, f_bits = fmt.integer_bits, fmt.fraction_bits

    if fmt.total_bits > MAX_TENSOR_BITS:
        raise FormatOverflow(f"Формат тензора {fmt} шире {MAX_TENSOR_BITS} бит")
    if acc_fmt.fraction_bits != f_bits:
        raise InvalidDetectorConfig(
            f"Дробные биты аккумулятора ({acc_fmt}) и тензора ({fmt}) должны совпадать"
        )
    if 2 * fmt.total_bits + 1 > PRODUCT_BITS:
        raise FormatOverflow(f"Квадрат следа в формате {fmt} не помещается в {PRODUCT_BITS} бит")

    smooth, deriv = sobel_kernels(cfg.sobel_size)
    gradient_max = 255 * int(smooth.sum()) * int(deriv[deriv > 0].sum())
    gradient_shift = max(0, gradient_max.bit_length() - (i_bits - 1))

    gradient_raw_max = truncate_shift(gradient_max, gradient_shift - f_bits)
    product_raw_max = (gradient_raw_max * gradient_raw_max) >> f_bits
    block_area = cfg.block_size * cfg.block_size
    window_sum_max = block_area * product_raw_max

    acc_bits = acc_fmt.total_bits - 1
    if window_sum_max.bit_length() > acc_bits:
        raise FormatOverflow(
            f"Сумма по окну {cfg.block_size}×{cfg.block_size} требует "
            f"{window_sum_max.bit_length()} бит, аккумулятор {acc_fmt} дает {acc_bits}"
        )

    tensor_shift = max(0, (window_sum_max >> f_bits).bit_length() - (i_bits - 1))
    trace_raw_max = 2 * (window_sum_max >> tensor_shift)
    if ((trace_raw_max * trace_raw_max) >> f_bits).bit_length() > acc_bits:
        raise FormatOverflow(f"Квадрат следа не помещается в аккумулятор {acc_fmt}")

    exponents = shift_sum_exponents(cfg.k, 2 * f_bits + i_bits)
    if not exponents:
        raise InvalidDetectorConfig(f"k={cfg.k} не представимо в формате {fmt}")

    plan = FixedPointPlan(
        fmt=fmt,
        acc_fmt=acc_fmt,
        k=cfg.k,
        block_area=block_area,
        gradient_max=gradient_max,
        gradient_shift=gradient_shift,
        tensor_shift=tensor_shift,
        window_sum_max=window_sum_max,
        k_exponents=exponents,
    )
    logger.debug(
        f"План {fmt}/{acc_fmt}: сдвиг градиентов {gradient_shift}, тензора {tensor_shift}, "
        f"k ≈ {plan.k_approx:.10f} ({len(exponents)} сдвигов)"
    )
    return plan


@dataclass(frozen=True, eq=False)
class FixedTensorField:
    """Сырые элементы тензора (int64, F дробных бит)"""
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    offset: int
    width: int
    height: int


@dataclass(frozen=True, eq=False)
class FixedResponse:
    """Сырой отклик и тензор, из которого он получен"""
    r_raw: np.ndarray
    tensor: FixedTensorField
    plan: FixedPointPlan

    def to_response_map(self) -> ResponseMap:
        """Отклик в float-единицах (умножение на степень двойки, без потерь)"""
        return ResponseMap(
            r=self.r_raw.astype(np.float64) * self.plan.response_ulp,
            offset=self.tensor.offset,
            width=self.tensor.width,
            height=self.tensor.height,
        )

    def error_bound(self) -> np.ndarray:
        return response_error_bound(self.plan, self.tensor.a, self.tensor.b, self.tensor.c)


def structure_tensor_fixed(grads: GradientField, block_size: int,
                           plan: FixedPointPlan) -> FixedTensorField:
    """Тензор в формате plan.fmt: квантование градиентов, произведения, сумма, сдвиг"""
    f_bits = plan.fmt.fraction_bits
    h = grads.interior_shape[0]
    if (plan.window_sum_max // block_size * h).bit_length() > PRODUCT_BITS:
        raise FormatOverflow(f"Суммирование по столбцам высотой {h} переполняет int64")

    gx = truncate_shift(grads.gx.astype(np.int64), plan.gradient_shift - f_bits)
    gy = truncate_shift(grads.gy.astype(np.int64), plan.gradient_shift - f_bits)

    def accumulate(product: np.ndarray) -> np.ndarray:
        window = box_sum(truncate_shift(product, f_bits), block_size)
        return truncate_shift(window, plan.tensor_shift)

    return FixedTensorField(
        a=accumulate(gx * gx),
        b=accumulate(gx * gy),
        c=accumulate(gy * gy),
        offset=grads.margin + block_size // 2,
        width=grads.width,
        height=grads.height,
    )


def harris_response_fixed(tensor: FixedTensorField, plan: FixedPointPlan) -> FixedResponse:
    """R = det - k·trace² в сырых единицах; k через сумму сдвигов"""
    f_bits = plan.fmt.fraction_bits
    a, b, c = tensor.a, tensor.b, tensor.c
    det = truncate_shift(a * c, f_bits) - truncate_shift(b * b, f_bits)
    trace = a + c
    trace_sq = truncate_shift(trace * trace, f_bits)
    k_term = np.zeros_like(trace_sq)
    for exponent in plan.k_exponents:
        k_term += trace_sq >> exponent
    return FixedResponse(r_raw=det - k_term, tensor=tensor, plan=plan)


def response_error_bound(plan: FixedPointPlan, a_raw, b_raw, c_raw):
    """
    Граница |R_fixed - R_float| в float-единицах для данного фиксированного тензора

    Складывается из ошибки элементов тензора, усечений det и trace², ошибки
    приближения k и усечения каждого слагаемого суммы сдвигов.
    """
    q = plan.tensor_ulp
    u = plan.response_ulp
    e_t = plan.tensor_error()
    a = np.abs(np.asarray(a_raw, dtype=np.float64)) * q
    b = np.abs(np.asarray(b_raw, dtype=np.float64)) * q
    c = np.abs(np.asarray(c_raw, dtype=np.float64)) * q
    trace = a + c
    k_error = abs(plan.k_approx - plan.k)

    det_error = e_t * (a + c + 2 * b) + 2 * e_t * e_t + 2 * u
    trace_sq_error = 4 * e_t * trace + 4 * e_t * e_t + u
    trace_sq_bound = (trace + 2 * e_t) ** 2
    k_term_error = ((plan.k + k_error) * trace_sq_error + k_error * trace_sq_bound
                    + len(plan.k_exponents) * u)
    rounding = FLOAT_ROUNDING_SLACK * ((a + e_t) * (c + e_t) + (b + e_t) ** 2 + trace_sq_bound)
    return det_error + k_term_error + rounding


def format_error_bound(plan: FixedPointPlan) -> float:
    """Худший случай границы ошибки по всему диапазону формата"""
    worst = plan.tensor_raw_max
    return float(response_error_bound(plan, worst, worst, worst))


def format_delta(plan: FixedPointPlan, response_threshold: float) -> float:
    """δ = граница ошибки / порог (относительная погрешность порога)"""
    if response_threshold <= 0:
        return float('inf')
    return format_error_bound(plan) / response_threshold


def fixed_response_map(img: Image, cfg: HarrisConfig, plan: FixedPointPlan) -> FixedResponse:
    check_harris_size(img, cfg)
    grads = sobel_gradients(img, cfg.sobel_size)
    return harris_response_fixed(structure_tensor_fixed(grads, cfg.block_size, plan), plan)


def detect_harris_fixed(img: Image, cfg: HarrisConfig, fmt: FixedPointFormat,
                        acc_fmt: Optional[FixedPointFormat] = None) -> List[Corner]:
    """
    Детектор Harris в фиксированной точке

    Returns:
        Углы в формате detect_harris; score — отклик в float-единицах
    """
    plan = build_plan(cfg, fmt, acc_fmt)
    response = fixed_response_map(img, cfg, plan).to_response_map()
    corners = corners_from_response(response, response.r, cfg.response_threshold, cfg.nms_window)
    logger.debug(f"Harris {fmt}: {len(corners)} углов на {img!r}")
    return corners
