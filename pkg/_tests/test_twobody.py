#!/usr/bin/env python3
"""
상대 좌표 2체 문제 테스트: 바닥 상태, λ 보정, Birman–Schwinger, 공명
"""

import math

import numpy as np
import pytest

from core.enums import PotentialKind
from core.exceptions import BracketError, GridError, PotentialError
from solver.lattice import Grid
from solver.potentials import PotentialSpec
from solver.twobody import (RelativeHamiltonian, ground_state, calibrate_coupling, calibrate_schedule,
                            energy_curve, is_concave_nonincreasing, bs_zero_energy_limit,
                            bs_threshold_consistency, odd_threshold_coupling, resonance_residual,
                            resonance_wavefunction, scaling_identity_gap, extrapolate_to_zero)

GAUSSIAN = PotentialSpec(PotentialKind.GAUSSIAN)
COULOMBIC = PotentialSpec(PotentialKind.COULOMBIC_CUTOFF)


class TestGroundState:
    def test_free_hamiltonian_has_zero_energy(self):
        h = RelativeHamiltonian(Grid(1, 1, 4.0, 16), GAUSSIAN, 1.0, 0.0)
        assert ground_state(h).energy == 0.0

    def test_attraction_binds_on_torus(self, rng):
        h = RelativeHamiltonian(Grid(1, 1, 8.0, 64), GAUSSIAN, 1.0, 1.0)
        assert ground_state(h, tol=1e-10, rng=rng).energy < 0.0

    def test_odd_sector_lies_above_even(self, rng):
        h = RelativeHamiltonian(Grid(1, 1, 8.0, 64), GAUSSIAN, 1.0, 5.0)
        even = ground_state(h, tol=1e-10, rng=rng).energy
        odd = ground_state(h, tol=1e-10, rng=rng, odd=True).energy
        assert odd > even

    def test_multi_block_grid_rejected(self):
        with pytest.raises(GridError):
            RelativeHamiltonian(Grid(1, 2, 4.0, 8), GAUSSIAN, 1.0, 1.0)

    def test_energy_curve_is_concave(self, rng):
        h = RelativeHamiltonian(Grid(1, 1, 8.0, 32), GAUSSIAN, 1.0, 0.0)
        lambdas = [0.5, 1.0, 2.0, 3.0]
        energies = energy_curve(h, lambdas, tol=1e-10, rng=rng)
        assert is_concave_nonincreasing(lambdas, energies)

    def test_concavity_detects_increase(self):
        assert not is_concave_nonincreasing([0.0, 1.0, 2.0], [0.0, 1.0, 0.5])


class TestCalibration:
    def test_hits_target_energy(self, rng):
        grid = Grid(1, 1, 8.0, 64)
        result = calibrate_coupling(grid, GAUSSIAN, 1.0, -0.125, tol=1e-8, rng=rng)
        assert result.coupling > 0.0
        assert result.energy == pytest.approx(-0.125, abs=1e-8)

    def test_schedule_rows(self, rng):
        grids = [Grid(1, 1, 8.0, 64), Grid(1, 1, 8.0, 128)]
        table = calibrate_schedule(grids, GAUSSIAN, [1.0, 0.5], -0.125, rng=rng)
        assert [row["grid_n"] for row in table.rows()] == [64, 128]
        assert table.max_deviation() <= 1e-7

    def test_repulsive_potential_rejected(self):
        with pytest.raises(PotentialError):
            calibrate_coupling(Grid(1, 1, 4.0, 16), GAUSSIAN.scaled_by(-1.0), 1.0, -0.1)

    def test_nonnegative_target_rejected(self):
        with pytest.raises(BracketError):
            calibrate_coupling(Grid(1, 1, 4.0, 16), GAUSSIAN, 1.0, 0.0)


class TestBirmanSchwinger:
    def test_coulombic_resonance_limit(self):
        limit = bs_zero_energy_limit(COULOMBIC, d=3, mass_factor=1.0)
        assert limit.direct == pytest.approx(1.0, abs=1e-3)
        assert len(limit.eigenvalues) == len(limit.z_values)

    def test_extrapolation_recovers_model(self):
        z = [0.1, 0.01, 0.001]
        values = [2.0 + 0.5 * math.sqrt(t) - t for t in z]
        assert extrapolate_to_zero(z, values) == pytest.approx(2.0, abs=1e-10)

    def test_principle_on_grid(self, rng):
        report = bs_threshold_consistency(GAUSSIAN, Grid(1, 1, 8.0, 32), z=0.01, rng=rng)
        assert report.relative_gap < 1e-5
        assert report.lambda_continuum is None

    def test_odd_threshold_is_finite(self):
        assert 0.0 < odd_threshold_coupling(GAUSSIAN, 1) < math.inf


class TestResonance:
    def test_wavefunction_is_continuous_at_unit_radius(self):
        psi = resonance_wavefunction(Grid(3, 1, 2.0, 8))
        assert np.all(psi.values > 0.0)

    def test_wavefunction_needs_three_dimensions(self):
        with pytest.raises(GridError):
            resonance_wavefunction(Grid(2, 1, 2.0, 8))

    @pytest.mark.slow
    def test_residual_shrinks_under_refinement(self):
        coarse = resonance_residual(Grid(3, 1, 6.0, 16))
        fine = resonance_residual(Grid(3, 1, 6.0, 32))
        assert fine.residual < coarse.residual
        assert fine.truncated


def test_scaling_identity(rng):
    gap = scaling_identity_gap(GAUSSIAN, 2.0, 0.25, Grid(2, 1, 4.0, 16), rng=rng)
    assert gap < 1e-10
