"""
Тесты загрузки последовательностей EuRoC
"""

import os

import numpy as np
import pytest

from conftest import make_random_image
from errors import MissingIndex, NonMonotonicTimestamps, UnreadableFrame
from image_core import Image, save_pgm
from sequence_loader import SequenceSource, load_euroc_sequence


def make_sequence(root, rows, frames=None, header=True):
    """Каталог mav0/cam0 с индексом rows = [(timestamp, filename)]"""
    camera = os.path.join(root, "mav0", "cam0")
    data = os.path.join(camera, "data")
    os.makedirs(data, exist_ok=True)
    for name, img in (frames or {}).items():
        save_pgm(img, os.path.join(data, name))
    lines = ["#timestamp [ns],filename"] if header else []
    lines += [f"{ts},{name}" for ts, name in rows]
    with open(os.path.join(camera, "data.csv"), 'w') as f:
        f.write("\n".join(lines) + "\n")
    return str(root)


def test_load_sorted(tmp_path):
    frames = {f"{ts}.pgm": make_random_image(ts, 20, 10) for ts in (300, 100, 200)}
    root = make_sequence(tmp_path, [(300, "300.pgm"), (100, "100.pgm"), (200, "200.pgm")], frames)
    seq = load_euroc_sequence(root)
    assert len(seq) == 3
    assert seq.timestamps == [100, 200, 300]
    assert seq.frames[0].image == frames["100.pgm"]


def test_png_names_use_pgm_mirror(tmp_path):
    frames = {"1403636579763555584.pgm": make_random_image(1, 12, 12)}
    root = make_sequence(tmp_path, [(1403636579763555584, "1403636579763555584.png")], frames)
    seq = load_euroc_sequence(root)
    assert seq.timestamps == [1403636579763555584]
    assert seq.frames[0].path.endswith(".pgm")


def test_png_without_mirror(tmp_path):
    root = make_sequence(tmp_path, [(1, "1.png")])
    with pytest.raises(UnreadableFrame, match="PGM"):
        load_euroc_sequence(root)


def test_missing_index(tmp_path):
    with pytest.raises(MissingIndex):
        load_euroc_sequence(str(tmp_path))


def test_missing_frame(tmp_path):
    root = make_sequence(tmp_path, [(1, "1.pgm")])
    with pytest.raises(UnreadableFrame):
        load_euroc_sequence(root)


def test_corrupt_frame(tmp_path):
    root = make_sequence(tmp_path, [(1, "1.pgm")])
    with open(os.path.join(root, "mav0", "cam0", "data", "1.pgm"), 'wb') as f:
        f.write(b"P5\n4 4\n255\n\x00")
    with pytest.raises(UnreadableFrame):
        load_euroc_sequence(root)


def test_duplicate_timestamp(tmp_path):
    frames = {"a.pgm": make_random_image(1, 8, 8), "b.pgm": make_random_image(2, 8, 8)}
    root = make_sequence(tmp_path, [(5, "a.pgm"), (5, "b.pgm")], frames)
    with pytest.raises(NonMonotonicTimestamps):
        load_euroc_sequence(root)


def test_empty_index(tmp_path):
    root = make_sequence(tmp_path, [])
    seq = load_euroc_sequence(root)
    assert len(seq) == 0


def test_from_images_default_timestamps():
    img = Image.from_array(np.zeros((8, 8), dtype=np.uint8))
    seq = SequenceSource.from_images([img, img])
    assert seq.timestamps == [0, 1]
    assert seq.images == [img, img]


def test_from_images_rejects_disorder():
    img = Image.from_array(np.zeros((8, 8), dtype=np.uint8))
    with pytest.raises(NonMonotonicTimestamps):
        SequenceSource.from_images([img, img], timestamps=[10, 3])
