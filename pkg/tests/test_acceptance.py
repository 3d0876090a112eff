"""
Tests for the verify-all battery
"""
import pytest

from app.acceptance import get_runner
from app.errors import InvalidArgument


def _failures(report):
    return [(c.name, c.value, c.detail) for c in report.checks if not c.passed]


def test_battery_passes_at_full_counts():
    report = get_runner(7).run()
    assert report.success, _failures(report)
    assert report.seed == 7
    assert len(report.checks) == 14


def test_scaled_battery_passes():
    report = get_runner(12345, scale=0.2).run()
    assert report.success, _failures(report)
    assert len(report.checks) == 14


def test_counts_scale_down_to_one():
    runner = get_runner(1, scale=0.01)
    assert runner.count(100) == 1
    assert runner.count(20) == 1
    assert get_runner(1).count(30) == 30


def test_scale_must_be_positive():
    with pytest.raises(InvalidArgument):
        get_runner(1, scale=0.0)


def test_battery_is_reproducible():
    first = get_runner(3, scale=0.2).run()
    second = get_runner(3, scale=0.2).run()
    assert [c.value for c in first.checks] == [c.value for c in second.checks]
