#!/usr/bin/env python3
"""
부등식 검증 테스트: Hardy, log-Hölder, 절단 수열, Vandermonde trace, 강수렴
"""

import math

import numpy as np
import pytest

from core.enums import PotentialKind, ScheduleKind
from core.exceptions import GridError, PotentialError
from solver.lattice import Grid
from solver.potentials import PotentialSpec, CouplingSchedule
from solver.inequalities import (InequalityReport, summarize, hardy_check, hardy_audit, slater_state,
                                 symmetric_diagonal_state, interpolate, gaussian_field, log_holder_check,
                                 log_holder_audit, plane_wave_holder, profile, profile_integrals, cutoff_sequence,
                                 cutoff_integrals, vandermonde_trace_check, collar, collared_state,
                                 strong_conv_check, first_exact_zero)


class TestHardy:
    def test_slater_state_passes(self):
        grid = Grid(1, 2, 4.0, 32)
        report = hardy_check(slater_state(grid), 2, 1)
        assert math.isfinite(report.lhs)
        assert report.passed

    def test_symmetric_state_breaks_inequality(self):
        report = hardy_check(symmetric_diagonal_state(Grid(1, 2, 4.0, 32)), 2, 1)
        assert report.lhs == math.inf
        assert not report.passed

    def test_random_antisymmetric_fields(self, rng):
        reports = hardy_audit(Grid(1, 2, 4.0, 32), 10, rng)
        assert len(reports) == 10
        assert all(report.passed for report in reports)
        assert summarize(reports)["hardy"]["passed"] == 10

    def test_grid_mismatch(self):
        with pytest.raises(GridError):
            hardy_check(slater_state(Grid(1, 2, 4.0, 8)), 3, 1)


class TestLogHolder:
    def test_interpolation_is_exact_at_nodes(self):
        grid = Grid(2, 1, 8.0, 64)
        u = gaussian_field(grid)
        nodes = grid.axis_nodes()
        points = np.array([[nodes[20], nodes[33]], [nodes[31], nodes[31]]])
        values = interpolate(u, points)
        assert values[0] == pytest.approx(u.values[20, 33], abs=1e-10)
        assert values[1] == pytest.approx(u.values[31, 31], abs=1e-10)

    def test_gaussian_pairs(self, rng):
        reports = log_holder_audit(gaussian_field(Grid(2, 1, 8.0, 64)), 50, rng)
        assert all(report.passed for report in reports)

    def test_plane_wave(self):
        report = plane_wave_holder(Grid(2, 1, 8.0, 64), (1, 2), (0.3, -0.2), (1e-3, 2e-3))
        assert 0.0 < report.lhs < report.rhs

    def test_single_check_and_errors(self):
        u = gaussian_field(Grid(2, 1, 8.0, 32))
        assert log_holder_check(u, (0.1, 0.2), (0.01, 0.0)).passed
        with pytest.raises(ValueError):
            log_holder_check(u, (0.0, 0.0), (0.0, 0.0))
        with pytest.raises(GridError):
            log_holder_check(slater_state(Grid(1, 3, 4.0, 8)), (0.0, 0.0), (0.1, 0.0))


class TestCutoff:
    def test_profile(self):
        assert profile(-0.5) == 1.0
        assert profile(1.5) == 0.0
        assert profile(0.5) == pytest.approx(0.5, abs=1e-12)
        first, second = profile_integrals()
        assert first > 0.0 and second > 0.0

    def test_two_dimensional_prediction(self):
        result = cutoff_integrals(cutoff_sequence(2, 1.0e6))
        assert result.grad_sq == pytest.approx(result.predicted_grad_sq, rel=0.02)
        assert result.weighted_lap_sq == pytest.approx(result.predicted_weighted_lap_sq, rel=0.02)

    def test_three_dimensional_halving(self):
        coarse = cutoff_integrals(cutoff_sequence(3, 64.0))
        fine = cutoff_integrals(cutoff_sequence(3, 128.0))
        assert coarse.grad_sq / fine.grad_sq == pytest.approx(2.0, rel=1e-6)
        assert coarse.predicted_grad_sq is None

    def test_sequence_is_one_near_origin(self):
        seq = cutoff_sequence(3, 64.0)
        assert seq.value(0.5 / 64.0) == 1.0
        assert seq.value(seq.outer_radius) == 0.0

    @pytest.mark.parametrize("d,n", [(1, 100.0), (2, 8.0)])
    def test_invalid_sequences(self, d, n):
        with pytest.raises(PotentialError):
            cutoff_sequence(d, n)


class TestVandermonde:
    def test_two_particle_norm(self, rng):
        report = vandermonde_trace_check(2, rng=rng)
        assert report.trace_norm == pytest.approx((math.pi / 4.0) ** 0.25, abs=1e-10)
        assert report.positive
        assert report.pointwise_error <= 1e-10

    @pytest.mark.parametrize("N", [3, 4])
    def test_larger_systems_positive(self, N, rng):
        report = vandermonde_trace_check(N, rng=rng)
        assert report.positive
        assert report.pointwise_error <= 1e-10

    def test_unsupported_particle_count(self):
        with pytest.raises(ValueError):
            vandermonde_trace_check(5)


class TestStrongConvergence:
    def test_collar_vanishes_inside(self):
        values = collar(np.array([0.0, 0.5, 1.0, 2.0, 3.0]), 1.0)
        assert list(values[:3]) == [0.0, 0.0, 0.0]
        assert values[3] == 1.0 and values[4] == 1.0

    def test_compact_potential_gives_exact_zeros(self):
        phi = collared_state(Grid(1, 2, 4.0, 32), 1.0)
        square = PotentialSpec(PotentialKind.SQUARE_WELL, radius=1.0)
        rows = strong_conv_check(phi, square, CouplingSchedule(), [2.0, 0.5, 0.25])
        assert rows[0].value > 0.0
        assert rows[1].value == 0.0 and rows[2].value == 0.0
        assert first_exact_zero(rows) == 0.5

    def test_gaussian_values_decrease(self):
        phi = collared_state(Grid(1, 2, 4.0, 32), 1.0)
        rows = strong_conv_check(phi, PotentialSpec(), CouplingSchedule(ScheduleKind.LINEAR), [0.5, 0.25, 0.125])
        values = [row.value for row in rows]
        assert values[0] > values[1] > values[2] > 0.0
        assert first_exact_zero(rows) is None

    def test_collar_keeps_antisymmetry(self):
        phi = collared_state(Grid(1, 2, 4.0, 16), 0.5)
        assert np.allclose(phi.values, -phi.values.T)


def test_report_ratio_edge_cases():
    assert InequalityReport("x", 0.0, 0.0).passed
    assert not InequalityReport("x", 1.0, 0.0).passed
