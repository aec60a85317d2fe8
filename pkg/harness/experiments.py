"""
Experiment Runner
설정 한 개로 실험 하나를 실행하고 결과 아티팩트를 원자적으로 기록
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from loguru import logger

from core.config import ExperimentConfig
from core.enums import ExperimentKind, PotentialKind, RateModel, SignClass, SweepMethod
from core.exceptions import InsufficientDataError, IntegrabilityError
from core.models import CheckResult, ExperimentOutcome, Manifest
from core.storage import ArtifactStore
from core.system_monitor import MemoryGuard
from harness.fitting import bounded_ratio, compare_models, fit_rate
from harness.report import (REPORT_TXT, build_report, fit_values, odd_sector_exponent, odd_sector_fit_target,
                            resolvent_fit_target)
from solver.inequalities import (collared_state, cutoff_integrals, cutoff_sequence, first_exact_zero,
                                 gaussian_field, hardy_audit, hardy_check, log_holder_audit, plane_wave_holder,
                                 strong_conv_check, summarize, symmetric_diagonal_state, vandermonde_trace_check)
from solver.lattice import Grid
from solver.nbody import (build_hamiltonian, estimate_lambda_max, factorization_gap, kk_identity_residual,
                          rate_row, s_norm_check, s_norm_suite, thomas_scaling_check)
from solver.oddsector import NormSweepResult, compute_sweep_row, empirical_holder_constants, grid_for_eps
from solver.potentials import CouplingSchedule, PotentialSpec, compute_integral, coupling_at
from solver.radial import odd_bs_eigenvalue
from solver.twobody import bs_zero_energy_limit, calibrate_coupling, resonance_residual

# 판정 임계값
KK_RESIDUAL_MAX = 1e-8
FACTORIZATION_GAP_MAX = 1e-10
CALIBRATION_LIMIT_TOL = 0.03
EXPONENT_TOL = 0.1
RATE_EXPONENT_TOL = 0.2
RATIO_GROWTH_MAX = 10.0
CUTOFF_TOL = 0.02
VANDERMONDE_POINTWISE_MAX = 1e-10
BS_LIMIT_TOL = 1e-3
# 부호 분류별 S(z) 인스턴스 수
S_SUITE_COUNT = 5

# 검증 모음 구성: (N, d, n, 필드 수)
HARDY_CASES = ((2, 1, 32, 400), (3, 1, 12, 300), (2, 2, 12, 200), (2, 3, 8, 100))
HARDY_BOX = 4.0
HOLDER_PAIRS = 1000
HOLDER_MODES = ((1, 0), (2, 3), (5, 1))
CUTOFF_N_2D = 1.0e6
CUTOFF_N_3D = 64.0
VANDERMONDE_N = (2, 3, 4)

# 공명 실험 격자
RESONANCE_BOX = 6.0
RESONANCE_POINTS = (16, 32, 64)
RESONANCE_GROWTH = ((8.0, 32), (16.0, 64))
RESONANCE_GROWTH_RANGE = (1.8, 2.2)

# strong-check 칼라 폭
STRONG_COLLAR_WIDTH = 1.0


# ---------------------------------------------------------------------------
# row workers (module level so the process pool can pickle them)

def row_seeds(seed: int, count: int) -> List[int]:
    """SeedSequence(seed).spawn 으로 행별 seed 생성"""
    return [int(child.generate_state(1)[0]) for child in np.random.SeedSequence(seed).spawn(count)]


def _invoke(worker: Callable, kwargs: Dict[str, Any]):
    return worker(**kwargs)


def run_rows(worker: Callable, tasks: Sequence[Dict[str, Any]], workers: int = 1) -> list:
    """
    Evaluate independent rows, serially or on a process pool

    Results come back in task order, so the worker count never changes the output.
    """
    tasks = list(tasks)
    if workers <= 1 or len(tasks) <= 1:
        return [worker(**kwargs) for kwargs in tasks]
    logger.debug(f"dispatching {len(tasks)} rows of {worker.__name__} to {workers} workers")
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(_invoke, [worker] * len(tasks), tasks))


def calibration_row(spec: PotentialSpec, eps: float, e_target: float, base_grid: Grid, nodes_per_width: int,
                    max_points: int, tol: float, seed: int) -> dict:
    """
    One calibrated coupling

    lambda_ratio compares λ_ε·∫V_ε with the delta-well strength √(8|E|) of −2Δ − gδ (d = 1),
    so it reads λ_ε/ε for a unit-integral V and tends to 1.
    """
    grid, resolved = grid_for_eps(spec, eps, base_grid, nodes_per_width, max_points)
    result = calibrate_coupling(grid, spec, eps, e_target, tol=tol, rng=np.random.default_rng(seed))
    ratio = None
    if grid.dim_per_particle == 1:
        ratio = result.coupling * compute_integral(spec, 1, eps) / math.sqrt(8.0 * abs(e_target))
    return {"epsilon": eps, "lambda": result.coupling, "energy": result.energy, "residual": result.residual,
            "lambda_ratio": ratio, "grid_n": grid.points_per_axis, "grid_L": grid.box_half_length,
            "resolved_flag": resolved}


def _rate_row_dict(**kwargs) -> dict:
    result = rate_row(**kwargs)
    row = result.to_row()
    row["chain_bound"] = result.chain_bound
    row["grid_n"] = result.grid.get("n")
    return row


def _column(rows: Sequence[dict], name: str) -> List[Any]:
    return [row[name] for row in rows]


# ---------------------------------------------------------------------------
# runner

class ExperimentRunner:
    """
    실험 종류별 실행기

    Every artifact of a run, the manifest included, is staged in one storage transaction, so a
    failing run leaves nothing behind.
    """

    CSV_COLUMNS = {
        "calibration.csv": ["epsilon", "lambda", "energy", "residual", "lambda_ratio", "grid_n", "grid_L",
                            "resolved_flag"],
        "norm_sweep.csv": ["epsilon", "z", "norm", "near_k", "far_k", "grid_n", "refinement_change",
                           "resolved_flag"],
        "rate_sweep.csv": ["epsilon", "lambda", "z", "norm", "delta_used", "s_norm", "bound", "chain_bound",
                           "grid_n", "resolved_flag"],
        "thomas.csv": ["epsilon", "energy", "energy_times_eps_sq"],
        "strong_check.csv": ["epsilon", "lambda", "value"],
    }

    def __init__(self, config: ExperimentConfig, flags: Optional[Dict[str, Any]] = None,
                 store: Optional[ArtifactStore] = None, version: str = "1.0.0"):
        self.config = config
        self.flags = dict(flags or {})
        self.store = store or ArtifactStore(config.output.out_dir)
        self.version = version
        self.spec = PotentialSpec.from_config(config.potential)
        self.schedule = CouplingSchedule.from_config(config.coupling)
        self.outcome = ExperimentOutcome(config.kind)
        self._grid_meta: Dict[str, Any] = {}

        self._handlers: Dict[ExperimentKind, Callable[[], None]] = {
            ExperimentKind.CALIBRATE: self.run_calibrate,
            ExperimentKind.NORM_SWEEP: self.run_norm_sweep,
            ExperimentKind.RATE_FIT: self.run_rate_fit,
            ExperimentKind.KK_CHECK: self.run_kk_check,
            ExperimentKind.VERIFY: self.run_verify,
            ExperimentKind.THOMAS_CHECK: self.run_thomas_check,
            ExperimentKind.REPORT: self.run_report,
            ExperimentKind.RESONANCE: self.run_resonance,
            ExperimentKind.STRONG_CHECK: self.run_strong_check,
        }

    # ------------------------------------------------------------------
    # shared pieces

    @property
    def tol(self):
        return self.config.tolerances

    def base_grid(self, num_particles: int) -> Grid:
        grid = self.config.grid
        return Grid(self.config.dim, num_particles, grid.box_half_length, grid.points_per_axis, grid.offset)

    @property
    def sweep_method(self) -> SweepMethod:
        return SweepMethod(self.config.sweep.method)

    def write_csv(self, name: str, rows: List[dict]):
        self.store.write_csv(name, rows, self.CSV_COLUMNS.get(name))
        self.outcome.artifacts.append(name)
        self.outcome.rows += len(rows)

    def write_json(self, name: str, payload: Any):
        self.store.write_json(name, payload)
        self.outcome.artifacts.append(name)

    def check(self, name: str, value: float, threshold: Optional[float], passed: bool, **detail):
        result = CheckResult(name, value, threshold, bool(passed), detail)
        self.outcome.add_check(result)
        if result.passed:
            logger.info(f"[CHECK] {name}: {value!r} (threshold {threshold!r}) passed")
        else:
            logger.warning(f"[CHECK] {name}: {value!r} (threshold {threshold!r}) FAILED")

    def run(self) -> ExperimentOutcome:
        """
        Run the configured kind and write its artifacts plus manifest.json

        Raises:
            SolverException: any library error; staged artifacts are discarded
        """
        kind = self.config.kind
        started_at = Manifest.now()
        logger.info(f"Running experiment '{kind.value}' (N={self.config.n_particles}, d={self.config.dim}, "
                    f"seed={self.config.seed}, workers={self.config.workers})")
        with self.store.transaction():
            self._handlers[kind]()
            manifest = Manifest(config_hash=self.config.config_hash(), version=self.version,
                                started_at=started_at, rows=self.outcome.rows, flags=self.flags,
                                grid=self._grid_meta, config=self.config.to_dict(),
                                artifacts=list(self.outcome.artifacts))
            self.store.write_manifest(manifest)
        self.outcome.artifacts.append("manifest.json")

        if self.outcome.passed:
            logger.success(f"Experiment '{kind.value}' finished: {len(self.outcome.checks)} check(s) passed")
        else:
            failed = [c.name for c in self.outcome.checks if not c.passed]
            logger.warning(f"Experiment '{kind.value}' finished with failed checks: {failed}")
        return self.outcome

    # ------------------------------------------------------------------
    # calibrate

    def run_calibrate(self):
        sweep, grid = self.config.sweep, self.config.grid
        base = self.base_grid(1)
        eps_values = self.config.eps_list
        tasks = [dict(spec=self.spec, eps=eps, e_target=sweep.e_target, base_grid=base,
                      nodes_per_width=grid.nodes_per_width, max_points=grid.max_points_per_axis,
                      tol=self.tol.calibration, seed=seed)
                 for eps, seed in zip(eps_values, row_seeds(self.config.seed, len(eps_values)))]
        rows = run_rows(calibration_row, tasks, self.config.workers)
        self.write_csv("calibration.csv", rows)
        self._grid_meta = base.describe()

        worst = max(abs(row["energy"] - sweep.e_target) for row in rows)
        self.check("calibration_energy", worst, self.tol.calibration * 10.0, worst <= self.tol.calibration * 10.0)
        last = rows[-1]
        if last["lambda_ratio"] is not None:
            gap = abs(last["lambda_ratio"] - 1.0)
            self.check("delta_well_limit", gap, CALIBRATION_LIMIT_TOL, gap <= CALIBRATION_LIMIT_TOL,
                       epsilon=last["epsilon"], lambda_ratio=last["lambda_ratio"])

    # ------------------------------------------------------------------
    # norm-sweep

    def run_norm_sweep(self):
        d, grid = self.config.dim, self.config.grid
        method = self.sweep_method
        base = self.base_grid(1) if method is SweepMethod.GRID else None
        eps_values = self.config.eps_list
        rows: List[dict] = []
        fits = {}

        for z in self.config.sweep.z_list:
            seeds = row_seeds(self.config.seed + int(round(1000 * z)), len(eps_values))
            tasks = [dict(spec=self.spec, eps=eps, z=z, d=d, method=method, base_grid=base,
                          nodes_per_width=grid.nodes_per_width, max_points=grid.max_points_per_axis,
                          truncation_radius=self.config.sweep.truncation_radius, tol=self.tol.norm,
                          seed=seed, check_refinement=True, max_iters=self.tol.max_iters)
                     for eps, seed in zip(eps_values, seeds)]
            z_rows = run_rows(compute_sweep_row, tasks, self.config.workers)
            rows.extend(z_rows)
            fits[f"{z:g}"] = self._fit_odd_norm(z, z_rows)
            fits[f"{z:g}"]["holder_constants"] = self._holder_constants(z, z_rows)

        self.write_csv("norm_sweep.csv", rows)
        self.write_json("norm_fit.json", fits)
        self._grid_meta = base.describe() if base else {"method": method.value, "dim": d}

    def _holder_constants(self, z: float, rows: List[dict]) -> dict:
        """경험적 Hölder 상수 (보고용, 판정 없음)"""
        s, _ = odd_sector_exponent(self.config.dim)
        result = NormSweepResult(z, self.config.dim, self.sweep_method.value)
        for row in rows:
            result.add_row(row)
        try:
            constants = empirical_holder_constants(result, self.spec, [s], eps_max=max(result.eps_values))
        except IntegrabilityError as e:
            logger.warning(f"Hölder constant at z={z:g} skipped: {e}")
            return {}
        return {f"{key:g}": value for key, value in constants.items()}

    def _fit_odd_norm(self, z: float, rows: List[dict]) -> dict:
        """
        d = 2 fits norm² and checks both the model preference and the power_log exponent
        """
        d = self.config.dim
        predicted, model, power = odd_sector_fit_target(d)
        eps, resolved = _column(rows, "epsilon"), _column(rows, "resolved_flag")
        values = fit_values(_column(rows, "norm"), power)
        rng = np.random.default_rng(self.config.seed)
        payload: Dict[str, Any] = {"predicted": predicted, "norm_power": power}
        try:
            if model is RateModel.POWER_LOG:
                comparison = compare_models(eps, values, resolved, rng)
                self.check(f"odd_norm_model_z{z:g}", comparison.power_log.rms_residual,
                           comparison.power.rms_residual, comparison.preferred is RateModel.POWER_LOG)
                payload.update(comparison.to_dict())
                fit = comparison.power_log
            else:
                fit = fit_rate(eps, values, model, resolved, rng)
                payload.update(fit.to_dict())
        except InsufficientDataError as e:
            logger.warning(f"odd-norm fit at z={z:g} skipped: {e}")
            self.check(f"odd_norm_exponent_z{z:g}", math.nan, predicted, False, reason=str(e))
            payload["error"] = str(e)
            return payload
        gap = abs(fit.exponent - predicted)
        self.check(f"odd_norm_exponent_z{z:g}", fit.exponent, predicted, gap <= EXPONENT_TOL,
                   half_width=fit.half_width, model=fit.model.value)
        return payload

    # ------------------------------------------------------------------
    # rate-fit

    def run_rate_fit(self):
        N, d, grid = self.config.n_particles, self.config.dim, self.config.grid
        method = self.sweep_method
        if method is SweepMethod.RADIAL and N != 2:
            logger.warning(f"radial fast path covers N = 2 only; N={N} runs on the grid")
            method = SweepMethod.GRID
        base = self.base_grid(N) if method is SweepMethod.GRID else None
        beta = None
        if method is SweepMethod.RADIAL and self.spec.sign_class is SignClass.NONNEGATIVE:
            beta = odd_bs_eigenvalue(self.spec, d, 0.0, 2.0)

        eps_values = self.config.eps_list
        lambdas = [coupling_at(self.schedule, eps) for eps in eps_values]
        rows: List[dict] = []
        fits = {}
        for z in self.config.sweep.z_list:
            seeds = row_seeds(self.config.seed + int(round(1000 * z)), len(eps_values))
            tasks = [dict(N=N, d=d, spec=self.spec, eps=eps, lam=lam, z=z, method=method, base_grid=base,
                          nodes_per_width=grid.nodes_per_width, max_points=grid.max_points_per_axis,
                          tol=self.tol.norm, seed=seed, memory_cap_mb=self.config.memory_cap_mb, beta_odd=beta,
                          solve_tol=self.tol.solve, max_iters=self.tol.max_iters)
                     for eps, lam, seed in zip(eps_values, lambdas, seeds)]
            z_rows = run_rows(_rate_row_dict, tasks, self.config.workers)
            rows.extend(z_rows)
            fits[f"{z:g}"] = self._fit_rate(z, z_rows)

        self.write_csv("rate_sweep.csv", rows)
        self.write_json("rate_fit.json", fits)
        self._grid_meta = base.describe() if base else {"method": method.value, "dim": d}

    def _fit_rate(self, z: float, rows: List[dict]) -> dict:
        """
        d = 2 is accepted on the bounded ratio norm/(λ_ε ε²|log ε|); the exponent fit of norm/λ_ε
        is kept as advisory output only
        """
        d = self.config.dim
        predicted, model, per_coupling = resolvent_fit_target(d, self.schedule.kind)
        eps, lam = _column(rows, "epsilon"), _column(rows, "lambda")
        norms, resolved = _column(rows, "norm"), _column(rows, "resolved_flag")
        payload: Dict[str, Any] = {"predicted": predicted, "model": model.value, "per_coupling": per_coupling,
                                   "advisory": per_coupling}

        if d == 2:
            reference = [l * e ** 2 * abs(math.log(e)) for e, l in zip(eps, lam)]
            ratio = bounded_ratio(eps, norms, reference)
            growth = ratio["max"] / ratio["first"] if ratio["first"] > 0 else math.inf
            self.check(f"rate_ratio_bounded_z{z:g}", growth, RATIO_GROWTH_MAX, growth <= RATIO_GROWTH_MAX,
                       min=ratio["min"], max=ratio["max"])
            payload["ratio"] = ratio

        values = fit_values(norms, couplings=lam if per_coupling else None)
        try:
            fit = fit_rate(eps, values, model, resolved, np.random.default_rng(self.config.seed))
        except InsufficientDataError as e:
            logger.warning(f"rate fit at z={z:g} skipped: {e}")
            if not per_coupling:
                self.check(f"rate_exponent_z{z:g}", math.nan, predicted, False, reason=str(e))
            payload["error"] = str(e)
            return payload
        if per_coupling:
            logger.info(f"advisory rate fit at z={z:g}: p = {fit.exponent:.3f} (predicted {predicted:g})")
            payload.update(fit.to_dict())
            return payload
        gap = abs(fit.exponent - predicted)
        self.check(f"rate_exponent_z{z:g}", fit.exponent, predicted, gap <= RATE_EXPONENT_TOL,
                   half_width=fit.half_width)
        payload.update(fit.to_dict())
        return payload

    # ------------------------------------------------------------------
    # kk-check

    def run_kk_check(self):
        N, d = self.config.n_particles, self.config.dim
        z = self.config.sweep.z_list[0]
        eps = self.config.sweep.eps_start
        lam = coupling_at(self.schedule, eps)
        grid = self.base_grid(N)
        rng = np.random.default_rng(self.config.seed)

        H = build_hamiltonian(N, d, grid, self.spec, eps, lam, self.config.memory_cap_mb)
        kk = kk_identity_residual(H, z)
        gap = factorization_gap(H, rng)
        s_report = s_norm_check(H, z=z, tol=self.tol.norm, rng=rng, solve_tol=self.tol.solve,
                                max_iters=self.tol.max_iters)
        suite = s_norm_suite(N, d, grid, self.spec, z, S_SUITE_COUNT, tol=self.tol.norm, rng=rng,
                             solve_tol=self.tol.solve, max_iters=self.tol.max_iters,
                             memory_cap_mb=self.config.memory_cap_mb)

        self.check("kk_residual", kk.residual, KK_RESIDUAL_MAX, kk.residual <= KK_RESIDUAL_MAX,
                   dimension=kk.dimension)
        self.check("factorization_gap", gap, FACTORIZATION_GAP_MAX, gap <= FACTORIZATION_GAP_MAX)
        if s_report.sign_class is not SignClass.MIXED and s_report.hypothesis_verified:
            self.check("s_norm_bound", s_report.norm, s_report.bound, s_report.within_bound)
        for index, instance in enumerate(suite):
            report = instance.report
            self.check(f"s_norm_bound_{instance.sign_class.value}_{index % S_SUITE_COUNT}", report.norm,
                       report.bound, report.within_bound, epsilon=instance.eps, lam=instance.lam,
                       delta=report.delta)

        payload = {"N": N, "d": d, "epsilon": eps, "lambda": lam, "z": z, "residual": kk.residual,
                   "dimension": kk.dimension, "min_eigenvalue": kk.min_eigenvalue, "factorization_gap": gap,
                   "s_norm": s_report.to_dict(), "s_norm_suite": [instance.to_dict() for instance in suite],
                   "hamiltonian": H.describe()}
        if N == 2:
            report = estimate_lambda_max(N, d, self.spec)
            payload["lambda_max"] = {**asdict(report), "consistent": report.consistent}
        self.write_json("kk_check.json", payload)
        self.outcome.rows = 1
        self._grid_meta = grid.describe()

    # ------------------------------------------------------------------
    # verify

    def run_verify(self):
        rng = np.random.default_rng(self.config.seed)
        reports = []
        for N, d, n, count in HARDY_CASES:
            reports.extend(hardy_audit(Grid(d, N, HARDY_BOX, n), count, rng))

        holder_grid = Grid(2, 1, 8.0, 64)
        reports.extend(log_holder_audit(gaussian_field(holder_grid), HOLDER_PAIRS, rng))
        for mode in HOLDER_MODES:
            x, y = rng.uniform(-2.0, 2.0, size=2), rng.uniform(-0.1, 0.1, size=2)
            reports.append(plane_wave_holder(holder_grid, mode, x, y))

        summary = summarize(reports)
        logger.info(f"{'inequality':<24}{'count':>8}{'passed':>8}{'max ratio':>12}")
        for name, entry in summary.items():
            logger.info(f"{name:<24}{entry['count']:>8}{entry['passed']:>8}{entry['max_ratio']:>12.6f}")
            self.check(name, entry["max_ratio"], 1.0, entry["passed"] == entry["count"], count=entry["count"])

        # 대칭 함수는 대각선에서 0 이 아니어서 Hardy 가 성립하지 않음
        symmetric = hardy_check(symmetric_diagonal_state(Grid(1, 2, HARDY_BOX, 32)), 2, 1)
        self.check("hardy_symmetric_counterexample", symmetric.ratio, 1.0, not symmetric.passed)

        cutoff = self._cutoff_checks()
        vandermonde = []
        for N in VANDERMONDE_N:
            report = vandermonde_trace_check(N, rng=rng)
            vandermonde.append(report.to_dict())
            self.check(f"vandermonde_positive_N{N}", report.trace_norm, 0.0, report.positive)
            self.check(f"vandermonde_pointwise_N{N}", report.pointwise_error, VANDERMONDE_POINTWISE_MAX,
                       report.pointwise_error <= VANDERMONDE_POINTWISE_MAX)

        failures = [r.to_dict() for r in reports if not r.passed]
        self.write_json("verify.json", {"summary": summary, "failures": failures,
                                        "symmetric_counterexample": symmetric.to_dict(),
                                        "cutoff": cutoff, "vandermonde": vandermonde})
        self.outcome.rows = len(reports)
        self._grid_meta = {"hardy_cases": [list(case) for case in HARDY_CASES], "holder": holder_grid.describe()}

    def _cutoff_checks(self) -> dict:
        plane = cutoff_integrals(cutoff_sequence(2, CUTOFF_N_2D))
        grad_error = abs(plane.grad_sq / plane.predicted_grad_sq - 1.0)
        lap_error = abs(plane.weighted_lap_sq / plane.predicted_weighted_lap_sq - 1.0)
        self.check("cutoff_2d_gradient", grad_error, CUTOFF_TOL, grad_error <= CUTOFF_TOL)
        self.check("cutoff_2d_weighted_laplacian", lap_error, CUTOFF_TOL, lap_error <= CUTOFF_TOL)

        # d = 3: 두 적분 모두 1/n 로 감소
        coarse = cutoff_integrals(cutoff_sequence(3, CUTOFF_N_3D))
        fine = cutoff_integrals(cutoff_sequence(3, 2.0 * CUTOFF_N_3D))
        ratios = (fine.grad_sq / coarse.grad_sq, fine.weighted_lap_sq / coarse.weighted_lap_sq)
        for label, ratio in zip(("gradient", "weighted_laplacian"), ratios):
            error = abs(ratio - 0.5) / 0.5
            self.check(f"cutoff_3d_{label}_halving", ratio, 0.5, error <= CUTOFF_TOL)
        return {"d2": {"n": CUTOFF_N_2D, **plane.to_dict()},
                "d3": {"n": [CUTOFF_N_3D, 2.0 * CUTOFF_N_3D], "coarse": coarse.to_dict(), "fine": fine.to_dict(),
                       "ratios": list(ratios)}}

    # ------------------------------------------------------------------
    # thomas-check

    def run_thomas_check(self):
        N, d = self.config.n_particles, self.config.dim
        report = thomas_scaling_check(N, d, tol=self.tol.ground_state, rng=np.random.default_rng(self.config.seed))
        self.write_csv("thomas.csv", report.rows())
        self.write_json("thomas.json", {**asdict(report), "scaling_exact": report.scaling_exact,
                                        "fermions_stable": report.fermions_stable})

        self.check("thomas_scaling", report.scaling_gap, 1e-12, report.scaling_exact)
        self.check("fermionic_stable", report.fermionic_energy, -1e-8, report.fermions_stable)
        if not report.illustrative:
            self.check("distinguishable_binds", report.distinguishable_energy, 0.0,
                       report.distinguishable_energy < 0.0)
        self._grid_meta = {"N": N, "d": d, "illustrative": report.illustrative}

    # ------------------------------------------------------------------
    # report

    def run_report(self):
        text, lines = build_report(self.store, self.config.dim, self.schedule.kind, self.config.seed)
        self.store.write_text(REPORT_TXT, text)
        self.outcome.artifacts.append(REPORT_TXT)
        self.outcome.rows = len(lines)
        for line in lines:
            if line.fit is not None and not line.advisory:
                self.check(line.label, line.fit.exponent, line.predicted, line.agrees)

    # ------------------------------------------------------------------
    # resonance

    def run_resonance(self):
        coulombic = PotentialSpec(PotentialKind.COULOMBIC_CUTOFF)
        limit = bs_zero_energy_limit(coulombic, d=3, mass_factor=1.0)
        gap = abs(limit.value - 1.0)
        self.check("bs_zero_energy_limit", limit.value, 1.0, gap <= BS_LIMIT_TOL)

        residuals = [resonance_residual(Grid(3, 1, RESONANCE_BOX, n)) for n in RESONANCE_POINTS]
        for coarse, fine in zip(residuals, residuals[1:]):
            ratio = fine.residual / coarse.residual
            self.check(f"resonance_refinement_n{fine.grid['n']}", ratio, 0.5, ratio <= 0.5)

        small, large = (resonance_residual(Grid(3, 1, L, n)) for L, n in RESONANCE_GROWTH)
        growth = large.norm_sq / small.norm_sq
        lo, hi = RESONANCE_GROWTH_RANGE
        self.check("resonance_norm_growth", growth, 2.0, lo <= growth <= hi)

        self.write_json("resonance.json", {"bs_limit": limit.to_dict(),
                                           "refinement": [r.to_dict() for r in residuals],
                                           "box_growth": {"small": small.to_dict(), "large": large.to_dict(),
                                                          "ratio": growth}})
        self.outcome.rows = len(residuals) + 2
        self._grid_meta = {"box_half_length": RESONANCE_BOX, "points_per_axis": list(RESONANCE_POINTS)}

    # ------------------------------------------------------------------
    # strong-check

    def run_strong_check(self):
        N = max(self.config.n_particles, 2)
        grid = self.base_grid(N)
        MemoryGuard(self.config.memory_cap_mb).check(grid.num_nodes, copies=4, label="strong-check grid")
        phi = collared_state(grid, STRONG_COLLAR_WIDTH)
        rows = strong_conv_check(phi, self.spec, self.schedule, self.config.eps_list)
        self.write_csv("strong_check.csv", [row.to_row() for row in rows])

        support = self.spec.support_radius
        if support is not None:
            inside = [row for row in rows if row.eps * support < STRONG_COLLAR_WIDTH]
            nonzero = [row.eps for row in inside if row.value != 0.0]
            self.check("strong_exact_zero", float(len(nonzero)), 0.0, not nonzero,
                       first_exact_zero=first_exact_zero(rows))
        else:
            values = [row.value for row in rows]
            decaying = all(b <= a for a, b in zip(values, values[1:]))
            self.check("strong_decay", values[-1], values[0], decaying)
        self._grid_meta = grid.describe()


def run_experiment(config: ExperimentConfig, flags: Optional[Dict[str, Any]] = None,
                   store: Optional[ArtifactStore] = None, version: str = "1.0.0") -> ExperimentOutcome:
    """
    Run one experiment

    Args:
        config: validated experiment configuration
        flags: CLI flags echoed into the manifest
        store: artifact store (default: config.output.out_dir)
        version: software version recorded in the manifest

    Returns:
        ExperimentOutcome; exit_status is 0 when every check passed, 2 otherwise
    """
    return ExperimentRunner(config, flags, store, version).run()
