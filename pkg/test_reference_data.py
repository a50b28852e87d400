"""
Тесты справочных таблиц и сводки
"""

import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import pytest

from reference_data import SEQUENCES, ReferenceData, reference_summary

POWER_TOML = os.path.join(os.path.dirname(os.path.abspath(__file__)), "power_reference.toml")


def test_power_presets_match_reference_table():
    with open(POWER_TOML, 'rb') as f:
        presets = tomllib.load(f)['presets']
    assert set(presets) == set(ReferenceData.POWER)
    for name, power in ReferenceData.POWER.items():
        preset = presets[name]
        assert preset['processor_w'] == power.processor_w
        assert preset['accelerator_w'] == (power.accelerator_w or 0.0)
        assert preset['total_w'] == power.total_w


def test_runtime_tables_cover_all_sequences():
    for table in ReferenceData.RUNTIMES.values():
        assert tuple(table) == SEQUENCES


def test_summary_mh01():
    row = reference_summary().set_index('sequence').loc['MH01']
    assert row['orin_detector_speedup'] == 9.269
    assert row['ftfast_energy_mj'] == 2.288
    assert row['vitis_energy_mj'] == 2.484
    assert row['ftfast_vs_vitis_energy'] == pytest.approx(1.086)


def test_ftfast_energy_band():
    for seq in SEQUENCES:
        assert 2.2 <= ReferenceData.accelerator_energy_mj('ftfast_orin_max', seq) <= 2.3


def test_accelerated_detector_always_faster():
    summary = reference_summary()
    assert (summary['orin_detector_speedup'] > 1).all()
    assert (summary['versal_detector_speedup'] > 1).all()
