"""
Тесты командной строки: вывод, файлы и коды возврата
"""

import os

import numpy as np
import pytest
import ujson

from cli import EXIT_BAD_ARGS, EXIT_IO, EXIT_LIBRARY, EXIT_OK, main
from detectors.corner import read_corners_csv
from detectors.harris import HarrisConfig
from detectors.harris_fixed import FixedPointFormat, detect_harris_fixed
from image_core import Image, load_pgm, save_pgm


def test_detect_to_stdout(dot_pgm, capsys):
    assert main(['detect', dot_pgm]) == EXIT_OK
    assert capsys.readouterr().out == "x,y,score,level\n8,8,149,0\n"


def test_detect_to_file(dot_pgm, tmp_path, capsys):
    out = tmp_path / "corners.csv"
    assert main(['detect', dot_pgm, '--out', str(out)]) == EXIT_OK
    assert capsys.readouterr().out.startswith("corners=1 ")
    assert out.read_text() == "x,y,score,level\n8,8,149,0\n"


def test_detect_missing_file(tmp_path):
    assert main(['detect', str(tmp_path / "nope.pgm")]) == EXIT_IO


def test_detect_without_image():
    assert main(['detect']) == EXIT_BAD_ARGS


def test_detect_invalid_threshold(dot_pgm):
    assert main(['detect', dot_pgm, '--threshold', '0']) == EXIT_BAD_ARGS


def test_detect_image_too_small(tmp_path):
    path = str(tmp_path / "tiny.pgm")
    save_pgm(Image.from_array(np.full((5, 5), 9, dtype=np.uint8)), path)
    assert main(['detect', path]) == EXIT_LIBRARY


def test_synth_then_bench_is_deterministic(tmp_path, capsys):
    root = str(tmp_path / "seq")
    assert main(['synth', root, '--frames', '3', '--width', '160', '--height', '120']) == EXIT_OK
    assert "frames=3" in capsys.readouterr().out

    runs = []
    for name in ('first', 'second'):
        out = tmp_path / f"{name}.json"
        corners_dir = tmp_path / f"{name}_corners"
        code = main(['bench', root, '--levels', '2', '--format', 'json',
                     '--out', str(out), '--corners-dir', str(corners_dir)])
        assert code == EXIT_OK
        assert capsys.readouterr().out.startswith("frames=3 ")
        runs.append((ujson.loads(out.read_text(encoding="utf-8")), corners_dir))

    (first, first_dir), (second, second_dir) = runs
    assert sorted(os.listdir(first_dir)) == ["frame_00000.csv", "frame_00001.csv", "frame_00002.csv"]
    for name in os.listdir(first_dir):
        assert (first_dir / name).read_bytes() == (second_dir / name).read_bytes()
    assert first['summary']['n_frames'] == second['summary']['n_frames'] == 3
    assert [f['corners'] for f in first['frames']] == [f['corners'] for f in second['frames']]


def test_bench_without_input():
    assert main(['bench']) == EXIT_BAD_ARGS


def test_bench_missing_sequence(tmp_path):
    assert main(['bench', str(tmp_path)]) == EXIT_IO


def test_bench_reference_summary(capsys):
    code = main(['bench', '--synthetic', '2', '--levels', '1', '--reference'])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert "| detection |" in out
    assert "MH01" in out


def test_pyramid_writes_levels(dot_pgm, tmp_path, capsys):
    out = tmp_path / "levels"
    out.mkdir()
    assert main(['pyramid', dot_pgm, '--levels', '2', '--out', str(out)]) == EXIT_OK
    assert load_pgm(str(out / "level_0.pgm")).width == 17
    assert load_pgm(str(out / "level_1.pgm")).width == 8
    assert "8x8" in capsys.readouterr().out


def test_compare_identical_detectors(dot_pgm, capsys):
    code = main(['compare', dot_pgm, '--detector-a', 'fast', '--detector-b', 'fast_batch',
                 '--format', 'json'])
    assert code == EXIT_OK
    payload = ujson.loads(capsys.readouterr().out)
    assert payload['aggregate']['precision'] == 1.0
    assert payload['aggregate']['matched'] == 1


@pytest.mark.parametrize("argv", [['bench', '--synthetic', '1', '--format', 'html'],
                                  ['detect', 'x.pgm', '--lanes', '3']])
def test_argparse_rejects(argv):
    assert main(argv) == EXIT_BAD_ARGS


def test_detect_too_many_levels(dot_pgm):
    assert main(['detect', dot_pgm, '--levels', '9']) == EXIT_BAD_ARGS


def test_detect_blur_kernel_larger_than_image(tmp_path):
    path = str(tmp_path / "tiny3.pgm")
    save_pgm(Image.from_array(np.full((3, 3), 9, dtype=np.uint8)), path)
    assert main(['detect', path, '--blur']) == EXIT_LIBRARY


def test_detect_malformed_pgm(tmp_path):
    path = tmp_path / "broken.pgm"
    path.write_bytes(b"P2\n4 4\n255\n")
    assert main(['detect', str(path)]) == EXIT_IO


def test_detect_harris_fixed_matches_library(tmp_path, checker_corner, capsys):
    image_path = str(tmp_path / "checker.pgm")
    save_pgm(checker_corner, image_path)
    config_path = tmp_path / "harris.toml"
    config_path.write_text("[harris]\nresponse_threshold = 1e17\n", encoding="utf-8")
    out = str(tmp_path / "corners.csv")

    code = main(['detect', image_path, '--detector', 'harris_fixed', '--fmt', '16.8',
                 '--config', str(config_path), '--out', out])
    assert code == EXIT_OK
    expected = detect_harris_fixed(checker_corner, HarrisConfig(response_threshold=1e17),
                                   FixedPointFormat.parse("16.8"))
    assert expected
    assert read_corners_csv(out) == expected
    assert f"corners={len(expected)}" in capsys.readouterr().out


def test_bench_batched_counts_match_scalar(tmp_path, capsys):
    root = str(tmp_path / "seq")
    assert main(['synth', root, '--frames', '3', '--width', '160', '--height', '120']) == EXIT_OK

    counts = {}
    for detector, extra in (('fast', []), ('fast_batch', ['--lanes', '8'])):
        out = tmp_path / f"{detector}.json"
        code = main(['bench', root, '--detector', detector, *extra, '--levels', '1',
                     '--format', 'json', '--out', str(out)])
        assert code == EXIT_OK
        counts[detector] = [f['corners'] for f in ujson.loads(out.read_text(encoding="utf-8"))['frames']]
    capsys.readouterr()

    assert len(counts['fast']) == 3
    assert counts['fast_batch'] == counts['fast']
