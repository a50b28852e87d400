"""
Тесты растра, PGM, размытия, градиентов и пирамиды
"""

import numpy as np
import pytest

from conftest import make_random_image
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
from image_core import (
    Image,
    build_pyramid,
    gaussian_blur,
    gaussian_kernel,
    load_pgm,
    save_pgm,
    sobel_gradients,
)
from oracles import oracle_gradients


def write_bytes(tmp_path, name, payload: bytes) -> str:
    path = tmp_path / name
    path.write_bytes(payload)
    return str(path)


class TestImage:
    def test_wrong_data_length(self):
        with pytest.raises(ImageError):
            Image(width=4, height=4, data=np.zeros(15, dtype=np.uint8))

    def test_data_is_read_only(self):
        img = Image.from_array(np.zeros((3, 3), dtype=np.uint8))
        with pytest.raises(ValueError):
            img.data[0, 0] = 1

    def test_source_array_is_copied(self):
        arr = np.zeros((3, 3), dtype=np.uint8)
        img = Image.from_array(arr)
        arr[1, 1] = 9
        assert img.pixel(1, 1) == 0

    def test_out_of_range_values_rejected(self):
        with pytest.raises(ImageError):
            Image.from_array(np.array([[0, 300]]))


class TestPgm:
    def test_load_simple(self, tmp_path):
        path = write_bytes(tmp_path, "a.pgm", b"P5\n2 2\n255\n" + bytes([0, 64, 128, 255]))
        img = load_pgm(path)
        assert (img.width, img.height) == (2, 2)
        assert img.to_array().tolist() == [[0, 64], [128, 255]]

    def test_header_comment_skipped(self, tmp_path):
        path = write_bytes(tmp_path, "c.pgm", b"P5\n# c\n1 1\n255\n" + bytes([7]))
        assert load_pgm(path).pixel(0, 0) == 7

    def test_bad_magic(self, tmp_path):
        path = write_bytes(tmp_path, "p2.pgm", b"P2\n1 1\n255\n7\n")
        with pytest.raises(MalformedHeader):
            load_pgm(path)

    def test_truncated(self, tmp_path):
        path = write_bytes(tmp_path, "t.pgm", b"P5\n4 4\n255\n" + bytes(10))
        with pytest.raises(TruncatedData):
            load_pgm(path)

    def test_sixteen_bit_rejected(self, tmp_path):
        path = write_bytes(tmp_path, "w.pgm", b"P5\n1 1\n65535\n" + bytes(2))
        with pytest.raises(UnsupportedMaxval):
            load_pgm(path)

    def test_save_then_load(self, tmp_path):
        img = make_random_image(3, 752, 480)
        path = str(tmp_path / "frame.pgm")
        save_pgm(img, path)
        assert load_pgm(path) == img


def direct_blur(img: Image, ksize: int, sigma: float) -> np.ndarray:
    """Несепарабельная 2D свертка с повтором края"""
    g = gaussian_kernel(ksize, sigma)
    kernel = np.outer(g, g)
    r = ksize // 2
    padded = np.pad(img.to_array().astype(np.float64), r, mode='edge')
    out = np.zeros(img.shape)
    for y in range(img.height):
        for x in range(img.width):
            out[y, x] = (padded[y:y + ksize, x:x + ksize] * kernel).sum()
    return np.rint(out)


class TestGaussianBlur:
    @pytest.mark.parametrize("ksize", [1, 3, 5, 7])
    def test_constant_preserved(self, ksize):
        img = Image.from_array(np.full((16, 16), 100, dtype=np.uint8))
        assert gaussian_blur(img, ksize, 1.0) == img

    def test_impulse_response(self):
        arr = np.zeros((15, 15), dtype=np.uint8)
        arr[7, 7] = 255
        out = gaussian_blur(Image.from_array(arr), 5, 1.0).to_array().astype(int)
        g = gaussian_kernel(5, 1.0)
        expected = np.rint(255 * np.outer(g, g))
        assert np.abs(out[5:10, 5:10] - expected).max() <= 1
        outside = out.copy()
        outside[5:10, 5:10] = 0
        assert not outside.any()

    def test_matches_direct_convolution(self):
        img = make_random_image(11, 32, 32)
        out = gaussian_blur(img, 3, 1.0).to_array().astype(int)
        assert np.abs(out - direct_blur(img, 3, 1.0)).max() <= 1

    def test_even_kernel(self, blank):
        with pytest.raises(EvenKernel):
            gaussian_blur(blank, 4, 1.0)

    def test_kernel_too_large(self):
        img = Image.from_array(np.zeros((4, 8), dtype=np.uint8))
        with pytest.raises(KernelTooLarge):
            gaussian_blur(img, 5, 1.0)


class TestSobel:
    @pytest.mark.parametrize("ksize", [3, 7])
    def test_constant_has_zero_gradient(self, ksize, blank):
        grads = sobel_gradients(blank, ksize)
        assert not grads.gx.any()
        assert not grads.gy.any()

    def test_horizontal_ramp(self):
        arr = np.tile(np.arange(16, dtype=np.uint8), (16, 1))
        grads = sobel_gradients(Image.from_array(arr), 3)
        assert not grads.gy.any()
        assert np.all(grads.gx == 8)

    @pytest.mark.parametrize("ksize", [3, 7])
    def test_matches_direct_convolution(self, ksize):
        img = make_random_image(5, 16, 16)
        grads = sobel_gradients(img, ksize)
        gx, gy = oracle_gradients(img.to_array().tolist(), ksize)
        m = ksize // 2
        for (x, y), value in gx.items():
            assert grads.gx[y - m, x - m] == value
            assert grads.gy[y - m, x - m] == gy[(x, y)]

    def test_interior_shape(self):
        grads = sobel_gradients(make_random_image(1, 20, 10), 7)
        assert grads.interior_shape == (4, 14)
        full_gx, _ = grads.full()
        assert full_gx.shape == (10, 20)

    def test_too_small(self):
        with pytest.raises(ImageTooSmall):
            sobel_gradients(Image.from_array(np.zeros((6, 6), dtype=np.uint8)), 7)


class TestPyramid:
    def test_single_level_is_source(self, blank):
        pyr = build_pyramid(blank, 1)
        assert len(pyr) == 1
        assert pyr[0] is blank

    def test_constant_levels(self):
        img = Image.from_array(np.full((8, 8), 77, dtype=np.uint8))
        pyr = build_pyramid(img, 3)
        assert pyr.geometry() == [(8, 8), (4, 4), (2, 2)]
        for level in pyr.levels:
            assert np.all(level.to_array() == 77)

    def test_box_average(self):
        img = make_random_image(8, 16, 16)
        src = img.to_array().astype(int)
        level = build_pyramid(img, 2)[1]
        for y in range(8):
            for x in range(8):
                total = src[2 * y, 2 * x] + src[2 * y, 2 * x + 1] + src[2 * y + 1, 2 * x] + src[2 * y + 1, 2 * x + 1]
                assert level.pixel(x, y) == (total + 2) // 4

    def test_odd_sizes_floor(self):
        pyr = build_pyramid(make_random_image(2, 753, 481), 3)
        assert pyr.geometry() == [(753, 481), (376, 240), (188, 120)]

    def test_too_many_levels(self):
        img = Image.from_array(np.zeros((4, 4), dtype=np.uint8))
        with pytest.raises(TooManyLevels):
            build_pyramid(img, 4)
