#!/usr/bin/env python3
"""
방사 채널 Nyström 계산 테스트
"""

import math

import pytest

from core.enums import PotentialKind
from core.exceptions import GridError, ThresholdViolationError
from solver.potentials import PotentialSpec
from solver.radial import (radial_nodes, odd_channels, all_channels, odd_norm_radial, bs_eigenvalue_radial,
                           resolvent_difference_radial, split_norms_radial)

GAUSSIAN = PotentialSpec(PotentialKind.GAUSSIAN)
COULOMBIC = PotentialSpec(PotentialKind.COULOMBIC_CUTOFF)


def test_channels():
    assert odd_channels(1) == [1]
    assert odd_channels(3) == [1, 3, 5]
    assert all_channels(1) == [0, 1]
    assert all_channels(2, ell_max=3) == [0, 1, 2, 3]


def test_quadrature_integrates_polynomials():
    quadrature = radial_nodes(2.0, panels=4, order=6)
    assert quadrature.weights.sum() == pytest.approx(2.0, rel=1e-12)
    assert (quadrature.weights * quadrature.nodes ** 3).sum() == pytest.approx(4.0, rel=1e-12)


def test_quadrature_rejects_empty_interval():
    with pytest.raises(GridError):
        radial_nodes(0.0)


def test_coulombic_zero_energy_resonance():
    """V = 2/r − 1 은 ψ = e^{-r} 을 영에너지 공명으로 가짐: BS 고유값 1"""
    value = bs_eigenvalue_radial(COULOMBIC, 3, 0.0, mass_factor=1.0, ell=0)
    assert value == pytest.approx(1.0, abs=1e-3)


def test_bs_eigenvalue_decreases_with_shift():
    low = bs_eigenvalue_radial(GAUSSIAN, 3, 0.1)
    high = bs_eigenvalue_radial(GAUSSIAN, 3, 1.0)
    assert 0.0 < high < low


@pytest.mark.parametrize("d,expected", [(1, 1.0), (3, 0.5)])
def test_odd_norm_exponent(d, expected):
    coarse = odd_norm_radial(GAUSSIAN, 0.01, 1.0, d)
    fine = odd_norm_radial(GAUSSIAN, 0.005, 1.0, d)
    exponent = math.log(coarse / fine) / math.log(2.0)
    assert exponent == pytest.approx(expected, abs=0.05)


def test_zero_potential_gives_zero_norms():
    zero = PotentialSpec(PotentialKind.GAUSSIAN, amplitude=0.0)
    assert odd_norm_radial(zero, 0.1, 1.0, 2) == 0.0
    assert resolvent_difference_radial(zero, 0.1, 1.0, 1.0, 2).norm == 0.0


def test_resolvent_difference_shrinks_with_eps():
    coarse = resolvent_difference_radial(GAUSSIAN, 0.1, 0.1, 1.0, 3)
    fine = resolvent_difference_radial(GAUSSIAN, 0.05, 0.05, 1.0, 3)
    assert 0.0 < fine.norm < coarse.norm
    assert fine.s_norm >= 1.0


def test_repulsive_difference_has_bounded_s():
    repulsive = GAUSSIAN.scaled_by(-1.0)
    result = resolvent_difference_radial(repulsive, 0.2, 1.0, 1.0, 1)
    assert result.norm > 0.0
    assert result.s_norm <= 1.0 + 1e-12


def test_coupling_above_threshold_raises():
    with pytest.raises(ThresholdViolationError):
        resolvent_difference_radial(GAUSSIAN, 1.0, 1.0e4, 0.01, 1)


def test_split_norms_far_part_vanishes_for_compact_support():
    square = PotentialSpec(PotentialKind.SQUARE_WELL, radius=1.0)
    near, far = split_norms_radial(square, 0.1, 1.0, 3, k=2.0)
    assert near > 0.0
    assert far == 0.0
