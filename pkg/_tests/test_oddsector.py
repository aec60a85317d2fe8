#!/usr/bin/env python3
"""
홀수 섹터 노름, 격자 해상도 정책, ε 스윕 테스트
"""

import math

import numpy as np
import pytest

from core.enums import PotentialKind, SweepMethod
from core.exceptions import GridError
from solver.lattice import Grid
from solver.potentials import PotentialSpec, compute_moment
from solver.radial import odd_norm_radial
from solver.oddsector import (odd_norm, odd_norm_estimate, grid_for_eps, is_resolved, compute_sweep_row,
                              sweep_odd_norm, truncated_split_norms, empirical_holder_constants)

GAUSSIAN = PotentialSpec(PotentialKind.GAUSSIAN)


class TestGridPolicy:
    def test_doubles_until_resolved(self):
        grid, resolved = grid_for_eps(GAUSSIAN, 0.25, Grid(1, 1, 8.0, 32), nodes_per_width=8)
        assert grid.points_per_axis == 512
        assert resolved
        assert is_resolved(GAUSSIAN, 0.25, grid)

    def test_cap_leaves_row_unresolved(self):
        grid, resolved = grid_for_eps(GAUSSIAN, 0.25, Grid(1, 1, 8.0, 32), nodes_per_width=8, max_points=128)
        assert grid.points_per_axis == 128
        assert not resolved


class TestOddNorm:
    def test_grid_agrees_with_radial(self, rng):
        grid_value = odd_norm(GAUSSIAN, 0.5, 1.0, Grid(1, 1, 8.0, 256), tol=1e-10, rng=rng)
        radial_value = odd_norm_radial(GAUSSIAN, 0.5, 1.0, 1)
        assert grid_value == pytest.approx(radial_value, rel=5e-3)

    def test_odd_restriction_lowers_norm(self, rng):
        grid = Grid(1, 1, 8.0, 64)
        odd = odd_norm_estimate(GAUSSIAN, 1.0, 1.0, grid, tol=1e-10, rng=rng)
        full = odd_norm_estimate(GAUSSIAN, 1.0, 1.0, grid, tol=1e-10, rng=rng, odd=False)
        assert odd.converged and full.converged
        assert odd.value < full.value

    def test_nonpositive_z_rejected(self):
        with pytest.raises(GridError):
            odd_norm(GAUSSIAN, 0.5, 0.0, Grid(1, 1, 4.0, 16))


class TestSweep:
    def test_radial_rows_are_resolved_and_decrease(self):
        result = sweep_odd_norm(GAUSSIAN, [0.1, 0.05, 0.025], 1.0, 3, check_refinement=True)
        assert all(result.resolved)
        assert result.norms[0] > result.norms[1] > result.norms[2]
        assert all(change is not None and change < 0.02 for change in result.refinement_change)

    def test_list_must_decrease(self):
        with pytest.raises(GridError):
            sweep_odd_norm(GAUSSIAN, [0.1, 0.2], 1.0, 1)

    def test_grid_row_reports_points(self):
        row = compute_sweep_row(GAUSSIAN, 0.5, 1.0, 1, SweepMethod.GRID, Grid(1, 1, 8.0, 32), seed=7)
        assert row["grid_n"] == 256
        assert row["resolved_flag"]

    def test_grid_rows_are_reproducible(self):
        kwargs = dict(method=SweepMethod.GRID, base_grid=Grid(1, 1, 8.0, 32), seed=3, tol=1e-8)
        first = compute_sweep_row(GAUSSIAN, 0.5, 1.0, 1, **kwargs)
        second = compute_sweep_row(GAUSSIAN, 0.5, 1.0, 1, **kwargs)
        assert first["norm"] == second["norm"]

    def test_truncation_past_support(self):
        square = PotentialSpec(PotentialKind.SQUARE_WELL, radius=1.0)
        near, far = truncated_split_norms(square, 0.1, 1.0, 1.5, 3)
        assert far == 0.0
        assert near == pytest.approx(odd_norm_radial(square, 0.1, 1.0, 3))

    def test_holder_constants_bound_the_data(self):
        result = sweep_odd_norm(GAUSSIAN, [0.08, 0.04, 0.02], 1.0, 3)
        constants = empirical_holder_constants(result, GAUSSIAN, [0.5])
        assert math.isfinite(constants[0.5]) and constants[0.5] > 0.0
        eps = np.asarray(result.eps_values)
        norms = np.asarray(result.norms)
        moment = compute_moment(GAUSSIAN, 0.5, 3)
        assert np.all(norms ** 2 <= constants[0.5] * eps * moment * (1.0 + 1e-12))
