#!/usr/bin/env python3
"""
포텐셜 정의, 적분 상수, 결합 스케줄 테스트
"""

import math

import numpy as np
import pytest

from core.enums import PotentialKind, ScheduleKind, SignClass
from core.exceptions import (PotentialError, SingularEvaluationError, IntegrabilityError, ScheduleError)
from solver.lattice import Grid
from solver.potentials import (PotentialSpec, CouplingSchedule, evaluate, evaluate_scaled, evaluate_radial,
                               sample_scaled, compute_integral, compute_CV, compute_moment, compute_moments,
                               lambda_max_lower_bound, coupling_at, hardy_condition, load_table)

GAUSSIAN = PotentialSpec(PotentialKind.GAUSSIAN)
COULOMBIC = PotentialSpec(PotentialKind.COULOMBIC_CUTOFF)


class TestEvaluation:
    def test_gaussian_scaling(self):
        # V_ε(0) = ε^{-2} V(0)
        assert evaluate_scaled(GAUSSIAN, 0.5, [0.0]) == pytest.approx(4.0)
        assert evaluate(GAUSSIAN, [1.0, 0.0]) == pytest.approx(math.exp(-1.0))

    def test_compact_kinds_vanish_outside_support(self):
        for kind in (PotentialKind.SQUARE_WELL, PotentialKind.SMOOTH_BUMP, PotentialKind.COULOMBIC_CUTOFF):
            spec = PotentialSpec(kind)
            assert evaluate(spec, [1.5]) == 0.0

    def test_coulombic_origin(self):
        with pytest.raises(SingularEvaluationError):
            evaluate(COULOMBIC, [0.0, 0.0, 0.0])
        capped = evaluate_radial(COULOMBIC, np.array([0.0]), cap_singular=True)
        assert capped[0] == COULOMBIC.v_cap

    def test_sample_on_offset_grid_is_finite(self):
        grid = Grid(3, 1, 2.0, 8)
        values = sample_scaled(COULOMBIC, 0.5, grid)
        assert np.all(np.isfinite(values))

    def test_nonpositive_eps_rejected(self):
        with pytest.raises(PotentialError):
            evaluate_scaled(GAUSSIAN, 0.0, [1.0])

    def test_sign_class(self):
        assert GAUSSIAN.sign_class is SignClass.NONNEGATIVE
        assert GAUSSIAN.scaled_by(-1.0).sign_class is SignClass.NONPOSITIVE

    def test_table_potential(self, tmp_path):
        table = tmp_path / "pot.txt"
        table.write_text("# r V\n0.0 1.0\n0.5 -1.0\n1.0 0.0\n")
        radii, values = load_table(str(table))
        spec = PotentialSpec(PotentialKind.TABLE, table_radii=radii, table_values=values)
        assert spec.sign_class is SignClass.MIXED
        assert evaluate(spec, [0.25]) == pytest.approx(0.0)
        assert evaluate(spec, [2.0]) == 0.0

    def test_missing_table(self, tmp_path):
        with pytest.raises(PotentialError):
            load_table(str(tmp_path / "missing.txt"))


class TestConstants:
    def test_gaussian_integrals(self):
        assert compute_integral(GAUSSIAN, 1) == pytest.approx(math.sqrt(math.pi), rel=1e-8)
        assert compute_integral(GAUSSIAN, 3) == pytest.approx(math.pi ** 1.5, rel=1e-8)

    def test_integral_is_scale_invariant(self):
        assert compute_integral(GAUSSIAN, 2, eps=0.1) == pytest.approx(math.pi, rel=1e-8)

    def test_coulombic_integral_in_three_dimensions(self):
        assert compute_integral(COULOMBIC, 3) == pytest.approx(8.0 * math.pi / 3.0, rel=1e-8)

    def test_cv(self):
        assert compute_CV(GAUSSIAN) == pytest.approx(math.exp(-1.0), rel=1e-8)
        assert compute_CV(COULOMBIC) == pytest.approx(1.0, rel=1e-8)

    def test_cv_of_repulsive_potential_is_zero(self):
        assert compute_CV(GAUSSIAN.scaled_by(-1.0)) == 0.0
        assert compute_CV(GAUSSIAN.scaled_by(-1.0), absolute=True) == pytest.approx(math.exp(-1.0), rel=1e-8)

    def test_coulombic_not_integrable_in_one_dimension(self):
        with pytest.raises(IntegrabilityError):
            compute_moment(COULOMBIC, 0.0, 1)

    def test_moments_bundle(self):
        moments = compute_moments(GAUSSIAN, 2)
        assert moments.l1_norm == pytest.approx(math.pi, rel=1e-8)
        assert moments.log_moment is not None
        assert set(moments.to_dict()) == {"l1_norm", "l2_norm_sq", "C_V", "moments", "log_moment"}

    def test_lambda_max_lower_bound(self):
        assert lambda_max_lower_bound(1.0, 2, 3) == pytest.approx(4.5)
        with pytest.raises(PotentialError):
            lambda_max_lower_bound(1.0, 1, 3)


class TestSchedules:
    def test_linear_and_constant(self):
        assert coupling_at(CouplingSchedule(ScheduleKind.LINEAR, g=2.0), 0.25) == pytest.approx(0.5)
        assert coupling_at(CouplingSchedule(ScheduleKind.CONSTANT, c=3.0), 0.01) == 3.0

    def test_log_reciprocal(self):
        schedule = CouplingSchedule(ScheduleKind.LOG_RECIPROCAL, a=1.0)
        eps = math.exp(-4.0 * math.pi)
        assert coupling_at(schedule, eps) == pytest.approx(0.5)
        with pytest.raises(ScheduleError):
            coupling_at(schedule, 1.0)

    def test_log_reciprocal_negative_inverse(self):
        with pytest.raises(ScheduleError):
            coupling_at(CouplingSchedule(ScheduleKind.LOG_RECIPROCAL, a=-10.0), 0.5)

    def test_hardy_condition(self):
        schedule = CouplingSchedule(ScheduleKind.CONSTANT, c=1.0)
        assert hardy_condition(schedule, [0.5, 0.25], C_V=math.exp(-1.0), N=2, d=1)
        assert not hardy_condition(CouplingSchedule(ScheduleKind.CONSTANT, c=5.0), [0.5], C_V=1.0, N=2, d=1)
