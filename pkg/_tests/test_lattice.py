#!/usr/bin/env python3
"""
주기 격자, Field, 스펙트럴 연산자 테스트
"""

import math

import numpy as np
import pytest

from core.exceptions import GridError, ThresholdViolationError
from solver.lattice import (Grid, Field, build_laplacian, apply_resolvent, resolvent_map, solve_shifted,
                            operator_norm, lowest_eigenpair, parity_project_odd, reflect, antisymmetrize,
                            permutation_sign, dense_matrix, lobpcg_lowest)


class TestGrid:
    def test_describe_keys(self):
        grid = Grid(2, 1, 4.0, 16)
        assert grid.describe() == {"d": 2, "m": 1, "L": 4.0, "n": 16, "offset": 0.5, "h": 0.5}

    def test_nodes_avoid_origin_with_half_offset(self):
        grid = Grid(1, 1, 4.0, 16)
        assert np.min(np.abs(grid.axis_nodes())) == pytest.approx(0.25)

    @pytest.mark.parametrize("kwargs", [
        dict(dim_per_particle=4, num_particles=1, box_half_length=1.0, points_per_axis=8),
        dict(dim_per_particle=1, num_particles=1, box_half_length=1.0, points_per_axis=7),
        dict(dim_per_particle=1, num_particles=1, box_half_length=-1.0, points_per_axis=8),
        dict(dim_per_particle=3, num_particles=3, box_half_length=1.0, points_per_axis=8),
    ])
    def test_invalid_grid_rejected(self, kwargs):
        with pytest.raises(GridError):
            Grid(**kwargs)


class TestField:
    def test_inner_uses_cell_volume(self):
        grid = Grid(1, 2, 2.0, 8)
        one = Field.constant(grid, 1.0)
        assert one.norm() ** 2 == pytest.approx(grid.volume)

    def test_parseval(self, rng):
        f = Field.random(Grid(2, 1, 3.0, 16), rng)
        assert f.fourier_norm() == pytest.approx(f.norm(), rel=1e-12)

    def test_non_finite_values_rejected(self):
        grid = Grid(1, 1, 1.0, 4)
        with pytest.raises(GridError):
            Field(grid, np.array([0.0, np.nan, 1.0, 2.0]))


class TestSpectralOperators:
    def test_laplacian_on_cosine(self):
        grid = Grid(1, 1, math.pi, 32)
        f = Field.from_function(grid, lambda x: np.cos(3.0 * x))
        lap_f = build_laplacian(grid).apply(f)
        assert np.max(np.abs(lap_f.values - 9.0 * f.values)) < 1e-10

    def test_laplacian_is_symmetric(self):
        grid = Grid(1, 1, 2.0, 8)
        matrix = dense_matrix(build_laplacian(grid))
        assert np.allclose(matrix, matrix.conj().T, atol=1e-12)

    def test_resolvent_norm_is_inverse_shift(self, rng):
        grid = Grid(1, 1, 4.0, 16)
        z = 2.0
        estimate = operator_norm(resolvent_map(build_laplacian(grid), z), tol=1e-12, rng=rng)
        assert estimate.converged
        assert estimate.value == pytest.approx(1.0 / z, rel=1e-8)

    def test_cg_matches_diagonal_solve(self, rng):
        grid = Grid(2, 1, 3.0, 16)
        lap = build_laplacian(grid)
        f = Field.random(grid, rng)
        direct = apply_resolvent(lap, 0.5, f)
        iterative = solve_shifted(lap, 0.5, f, tol=1e-12)
        assert (direct - iterative).norm() / direct.norm() < 1e-9

    def test_nonpositive_shift_rejected(self, rng):
        grid = Grid(1, 1, 2.0, 8)
        lap = build_laplacian(grid)
        f = Field.random(grid, rng)
        with pytest.raises(ThresholdViolationError):
            apply_resolvent(lap, 0.0, f)
        with pytest.raises(ThresholdViolationError):
            solve_shifted(lap, -1.0, f)

    def test_lowest_odd_eigenvalue(self, rng):
        grid = Grid(1, 1, math.pi, 32)
        pair = lowest_eigenpair(build_laplacian(grid), tol=1e-10, rng=rng, project=parity_project_odd)
        assert pair.value == pytest.approx(1.0, abs=1e-8)

    def test_lobpcg_reports_iterations(self, rng):
        grid = Grid(1, 1, math.pi, 1024)
        lap = build_laplacian(grid)
        pair = lobpcg_lowest(lap.shifted(1.0), resolvent_map(lap, 1.0), tol=1e-10, rng=rng)
        assert pair.converged
        assert pair.value == pytest.approx(1.0, abs=1e-8)
        assert 1 <= pair.iterations < 2000

    def test_lobpcg_flags_iteration_cap(self, rng):
        grid = Grid(1, 1, math.pi, 1024)
        pair = lobpcg_lowest(build_laplacian(grid).shifted(1.0), None, tol=1e-10, rng=rng, max_iters=2)
        assert not pair.converged
        assert pair.iterations <= 2


class TestSymmetry:
    def test_reflection_is_involution(self, rng):
        f = Field.random(Grid(2, 1, 2.0, 8), rng)
        assert np.allclose(reflect(reflect(f)).values, f.values)

    def test_odd_projection_is_odd(self, rng):
        f = Field.random(Grid(1, 1, 2.0, 8, offset=0.0), rng)
        odd = parity_project_odd(f)
        assert np.allclose(reflect(odd).values, -odd.values)

    def test_permutation_sign(self):
        assert permutation_sign((0, 1, 2)) == 1
        assert permutation_sign((1, 0, 2)) == -1
        assert permutation_sign((1, 2, 0)) == 1

    def test_antisymmetrize_is_idempotent_and_odd_under_swap(self, rng):
        grid = Grid(1, 2, 2.0, 8)
        f = antisymmetrize(Field.random(grid, rng), 2, 1)
        assert np.allclose(f.values, -f.values.T)
        assert np.allclose(antisymmetrize(f, 2, 1).values, f.values)

    def test_antisymmetrize_grid_mismatch(self, rng):
        f = Field.random(Grid(1, 2, 2.0, 8), rng)
        with pytest.raises(GridError):
            antisymmetrize(f, 3, 1)
