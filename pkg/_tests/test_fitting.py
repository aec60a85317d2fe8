#!/usr/bin/env python3
"""
수렴 속도 피팅 테스트
"""

import math

import numpy as np
import pytest

from core.enums import RateModel
from core.exceptions import InsufficientDataError
from harness.fitting import fit_rate, compare_models, bounded_ratio

EPS = [0.2 * 2.0 ** -k for k in range(6)]


def test_exact_power_law():
    fit = fit_rate(EPS, [3.0 * e ** 2 for e in EPS])
    assert fit.exponent == pytest.approx(2.0, abs=1e-10)
    assert fit.prefactor == pytest.approx(3.0, rel=1e-10)
    assert fit.r_squared == pytest.approx(1.0)
    assert fit.half_width == pytest.approx(0.0, abs=1e-8)
    assert fit.points == len(EPS)


def test_power_log_recovered_and_preferred():
    values = [0.5 * e * abs(math.log(e)) for e in EPS]
    comparison = compare_models(EPS, values)
    assert comparison.power_log.exponent == pytest.approx(1.0, abs=1e-10)
    assert comparison.preferred is RateModel.POWER_LOG
    assert comparison.to_dict()["preferred"] == "power_log"


def test_unresolved_rows_are_dropped():
    values = [e for e in EPS]
    values[0] = 100.0
    fit = fit_rate(EPS, values, resolved=[False] + [True] * (len(EPS) - 1))
    assert fit.exponent == pytest.approx(1.0, abs=1e-10)
    assert fit.points == len(EPS) - 1


def test_too_few_rows():
    with pytest.raises(InsufficientDataError):
        fit_rate(EPS[:3], EPS[:3])


def test_nonpositive_values_rejected():
    with pytest.raises(InsufficientDataError):
        fit_rate(EPS, [0.0] * len(EPS))


def test_power_log_needs_small_eps():
    with pytest.raises(InsufficientDataError):
        fit_rate([2.0, 1.0, 0.5, 0.25], [1.0, 0.5, 0.25, 0.125], RateModel.POWER_LOG)


def test_prediction_matches_data():
    values = np.array([3.0 * e ** 2 for e in EPS])
    fit = fit_rate(EPS, values)
    assert np.allclose(fit.predict(EPS), values)


def test_bounded_ratio():
    ratio = bounded_ratio([0.1, 0.01], [2.0, 0.4], [1.0, 0.1])
    assert ratio["first"] == pytest.approx(2.0)
    assert ratio["max"] == pytest.approx(4.0)
