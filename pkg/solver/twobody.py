"""
Relative-coordinate two-body problem

h_ε = −2Δ − λ·V_ε 의 바닥 상태, 목표 결합 에너지에 대한 λ 보정,
Birman–Schwinger 스펙트럼과 영에너지 공명 검사
"""

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Sequence

import numpy as np
from loguru import logger
from scipy.optimize import brentq

from core.enums import PotentialKind, SignClass, SolverMethod
from core.exceptions import BracketError, GridError, PotentialError
from solver.lattice import (Field, Grid, LinearMap, apply_fourier_multiplier, apply_resolvent, build_laplacian,
                            lowest_eigenpair, operator_norm, parity_project_odd)
from solver.potentials import (PotentialSpec, block_radius, compute_CV, evaluate_radial, sample_scaled,
                               scaled_sqrt_weight)
from solver.radial import bs_eigenvalue_radial, odd_bs_eigenvalue, radial_nodes

# z ↓ 0 외삽에 쓰는 스펙트럼 파라미터
RICHARDSON_Z = (1e-1, 1e-2, 1e-3)


@dataclass
class RelativeHamiltonian:
    """h = −μΔ − λ·V_ε on a single d-dimensional block (μ = 2 for the relative coordinate)"""
    grid: Grid
    spec: PotentialSpec
    eps: float
    lam: float
    mass_factor: float = 2.0

    def __post_init__(self):
        if self.grid.num_particles != 1:
            raise GridError(f"relative Hamiltonian needs a single block, grid has {self.grid.num_particles}")
        if not self.eps > 0:
            raise PotentialError(self.spec.kind.value, f"ε must be positive, got {self.eps}")

    @cached_property
    def kinetic(self) -> LinearMap:
        return build_laplacian(self.grid, self.mass_factor)

    @cached_property
    def potential_values(self) -> np.ndarray:
        return np.broadcast_to(sample_scaled(self.spec, self.eps, self.grid), self.grid.shape)

    @property
    def is_free(self) -> bool:
        return self.lam == 0.0 or self.spec.is_zero

    def as_map(self) -> LinearMap:
        coupling = self.lam * self.potential_values
        kinetic = self.kinetic

        def apply(f: Field) -> Field:
            return kinetic.apply(f) - Field(self.grid, coupling * f.values)

        return LinearMap(apply, apply, f"h(ε={self.eps:g}, λ={self.lam:g})", self.grid, self_adjoint=True)

    def with_coupling(self, lam: float) -> 'RelativeHamiltonian':
        return RelativeHamiltonian(self.grid, self.spec, self.eps, lam, self.mass_factor)


@dataclass
class GroundStateResult:
    """바닥 상태 에너지, 벡터, 잔차"""
    energy: float
    vector: Field
    residual: float
    iterations: int = 0
    method: str = "exact"
    coupling: Optional[float] = None
    converged: bool = True


def ground_state(h: RelativeHamiltonian, tol: float = 1e-8, rng: Optional[np.random.Generator] = None,
                 odd: bool = False, method: SolverMethod = SolverMethod.AUTO) -> GroundStateResult:
    """
    Lowest eigenpair of h (optionally restricted to odd functions)

    Args:
        h: relative Hamiltonian
        tol: Ritz tolerance
        rng: random generator for start vectors
        odd: restrict to the odd sector r ↦ −r
        method: eigensolver selection

    Returns:
        GroundStateResult
    """
    if h.is_free and not odd:
        # −μΔ on the torus: E = 0, constant eigenvector
        vector = Field.constant(h.grid, 1.0).normalized()
        return GroundStateResult(0.0, vector, 0.0)

    project = (lambda f: parity_project_odd(f, 0)) if odd else None
    pair = lowest_eigenpair(h.as_map(), tol=tol, rng=rng, project=project, method=method, kinetic=h.kinetic)
    logger.debug(f"ground_state {h.as_map().descriptor}{' odd' if odd else ''}: "
                 f"E={pair.value:.12e}, residual={pair.residual:.2e}")
    return GroundStateResult(pair.value, pair.vector, pair.residual, pair.iterations, pair.method.value,
                             converged=pair.converged)


@dataclass
class CalibrationResult:
    """ε 별 보정된 λ_ε 와 달성 에너지"""
    target: float
    eps_values: List[float] = field(default_factory=list)
    lambdas: List[float] = field(default_factory=list)
    energies: List[float] = field(default_factory=list)
    residuals: List[float] = field(default_factory=list)
    grids: List[Grid] = field(default_factory=list)

    def add(self, eps: float, lam: float, energy: float, residual: float, grid: Grid):
        self.eps_values.append(eps)
        self.lambdas.append(lam)
        self.energies.append(energy)
        self.residuals.append(residual)
        self.grids.append(grid)

    def rows(self) -> List[dict]:
        return [{"epsilon": e, "lambda": lam, "energy": en, "residual": r,
                 "grid_n": g.points_per_axis, "grid_L": g.box_half_length}
                for e, lam, en, r, g in zip(self.eps_values, self.lambdas, self.energies, self.residuals, self.grids)]

    def max_deviation(self) -> float:
        return max((abs(en - self.target) for en in self.energies), default=0.0)


def initial_upper_coupling(spec: PotentialSpec, d: int) -> float:
    """4·d²/(2·C_V): four times the two-body Hardy scale"""
    try:
        C_V = compute_CV(spec)
    except PotentialError:
        C_V = 1.0
    return 4.0 * d * d / (2.0 * max(C_V, 1e-12))


def calibrate_coupling(grid: Grid, spec: PotentialSpec, eps: float, e_target: float, tol: float = 1e-8,
                       rng: Optional[np.random.Generator] = None, lam_hi: Optional[float] = None,
                       max_doublings: int = 6, method: SolverMethod = SolverMethod.AUTO) -> GroundStateResult:
    """
    λ with ground_state(h(λ)).energy = e_target

    E(λ) is continuous and nonincreasing for V ≥ 0, so a root bracket [0, λ_hi] is refined by
    Brent's method. λ_hi is doubled on bracket failure.

    Returns:
        GroundStateResult of the calibrated Hamiltonian; the coupling is in result.coupling

    Raises:
        PotentialError: V not nonnegative
        BracketError: no λ ≤ λ_hi·2^max_doublings reaches e_target
    """
    if spec.sign_class is not SignClass.NONNEGATIVE:
        raise PotentialError(spec.kind.value, "calibration needs a nonnegative potential")
    if not e_target < 0:
        raise BracketError(f"target energy must be negative, got {e_target}", energies={})

    h = RelativeHamiltonian(grid, spec, eps, 0.0)
    gs_tol = min(tol, 1e-8)
    cache = {}

    def energy(lam: float) -> float:
        if lam not in cache:
            cache[lam] = ground_state(h.with_coupling(lam), tol=gs_tol, rng=rng, method=method)
        return cache[lam].energy

    lam_hi = lam_hi if lam_hi is not None else initial_upper_coupling(spec, grid.dim_per_particle)
    for doubling in range(max_doublings + 1):
        if energy(lam_hi) < e_target:
            break
        logger.debug(f"calibration bracket [0, {lam_hi:g}] misses E={e_target:g}; doubling")
        lam_hi *= 2.0
    else:
        diagnostics = {lam: cache[lam].energy for lam in sorted(cache)}
        logger.error(f"calibration bracket failed at ε={eps:g}: {diagnostics}")
        raise BracketError(f"no λ ≤ {lam_hi / 2.0:g} reaches E={e_target:g} at ε={eps:g}", energies=diagnostics)

    lam_star = brentq(lambda lam: energy(lam) - e_target, 0.0, lam_hi, xtol=1e-14, rtol=1e-13, maxiter=200)
    result = cache.get(lam_star) or ground_state(h.with_coupling(lam_star), tol=gs_tol, rng=rng, method=method)
    result.coupling = lam_star
    if abs(result.energy - e_target) > tol:
        logger.warning(f"calibration at ε={eps:g}: |E − target| = {abs(result.energy - e_target):.2e} > {tol:.1e}")
    logger.info(f"calibrated ε={eps:g}: λ={lam_star:.10e}, E={result.energy:.10e}")
    return result


def calibrate_schedule(grids: Sequence[Grid], spec: PotentialSpec, eps_values: Sequence[float], e_target: float,
                       tol: float = 1e-8, rng: Optional[np.random.Generator] = None) -> CalibrationResult:
    """ε 목록 전체를 보정"""
    table = CalibrationResult(e_target)
    for grid, eps in zip(grids, eps_values):
        result = calibrate_coupling(grid, spec, eps, e_target, tol=tol, rng=rng)
        table.add(eps, result.coupling, result.energy, result.residual, grid)
    return table


def energy_curve(h: RelativeHamiltonian, lambdas: Sequence[float], tol: float = 1e-8,
                 rng: Optional[np.random.Generator] = None) -> List[float]:
    return [ground_state(h.with_coupling(lam), tol=tol, rng=rng).energy for lam in lambdas]


def is_concave_nonincreasing(lambdas: Sequence[float], energies: Sequence[float], tol: float = 1e-7) -> bool:
    """
    E(λ) 가 λ-격자에서 오목하고 비증가인지 검사 (불균등 간격 허용)
    """
    lam = np.asarray(lambdas, dtype=float)
    E = np.asarray(energies, dtype=float)
    if np.any(np.diff(E) > tol):
        return False
    if len(E) < 3:
        return True
    slopes = np.diff(E) / np.diff(lam)
    slack = tol * max(1.0, float(np.max(np.abs(slopes))))
    return bool(np.all(np.diff(slopes) <= slack))


# ---------------------------------------------------------------------------
# Birman–Schwinger

def bs_operator(spec: PotentialSpec, grid: Grid, z: float, mass_factor: float = 1.0) -> LinearMap:
    """
    v(μ(−Δ)+z)^{-1}v with v = |V|^{1/2}; at z = 0 the zero Fourier mode is omitted
    """
    if z < 0:
        raise PotentialError(spec.kind.value, f"Birman–Schwinger operator needs z ≥ 0, got {z}")
    v = np.broadcast_to(scaled_sqrt_weight(spec, 1.0, grid), grid.shape)
    symbol = mass_factor * grid.k_squared() + z
    if z == 0.0:
        inverse = np.zeros_like(symbol)
        np.divide(1.0, symbol, out=inverse, where=symbol > 0)
    else:
        inverse = 1.0 / symbol

    def apply(f: Field) -> Field:
        return Field(grid, v * apply_fourier_multiplier(inverse, Field(grid, v * f.values)).values)

    return LinearMap(apply, apply, f"BS(z={z:g}, μ={mass_factor:g})", grid, self_adjoint=True)


def bs_max_eigenvalue(spec: PotentialSpec, grid: Grid, z: float, mass_factor: float = 1.0, tol: float = 1e-6,
                      rng: Optional[np.random.Generator] = None) -> float:
    """
    Largest eigenvalue of the positive Birman–Schwinger operator on the grid (power iteration)

    Raises:
        PotentialError: V not nonnegative
    """
    if spec.sign_class is not SignClass.NONNEGATIVE:
        raise PotentialError(spec.kind.value, "Birman–Schwinger eigenvalue needs V ≥ 0")
    if spec.is_zero:
        return 0.0
    rng = rng if rng is not None else np.random.default_rng(0)
    estimate = operator_norm(bs_operator(spec, grid, z, mass_factor), tol=tol, rng=rng)
    return estimate.value


def extrapolate_to_zero(z_values: Sequence[float], values: Sequence[float]) -> float:
    """
    β(z) = β₀ + β₁√z + β₂z 최소제곱 적합의 β₀
    """
    z = np.asarray(z_values, dtype=float)
    basis = np.column_stack([np.ones_like(z), np.sqrt(z), z])
    coeffs, *_ = np.linalg.lstsq(basis, np.asarray(values, dtype=float), rcond=None)
    return float(coeffs[0])


@dataclass
class ZeroEnergyLimit:
    """z ↓ 0 Birman–Schwinger 외삽 결과"""
    value: float
    z_values: List[float]
    eigenvalues: List[float]
    direct: Optional[float] = None
    method: str = "radial"

    def to_dict(self) -> dict:
        return {"value": self.value, "z_values": self.z_values, "eigenvalues": self.eigenvalues,
                "direct": self.direct, "method": self.method}


def bs_zero_energy_limit(spec: PotentialSpec, d: int = 3, mass_factor: float = 1.0,
                         z_values: Sequence[float] = RICHARDSON_Z, grid: Optional[Grid] = None,
                         panels: int = 128, order: int = 8,
                         rng: Optional[np.random.Generator] = None) -> ZeroEnergyLimit:
    """
    z ↓ 0 limit of the top s-wave Birman–Schwinger eigenvalue

    Radial Nyström values by default (also evaluated directly at z = 0); a grid gives the
    periodic-box values with the zero mode omitted.
    """
    if grid is not None:
        values = [bs_max_eigenvalue(spec, grid, z, mass_factor, rng=rng) for z in z_values]
        direct = bs_max_eigenvalue(spec, grid, 0.0, mass_factor, rng=rng)
        method = "grid"
    else:
        quadrature = radial_nodes(spec.effective_radius, panels, order)
        values = [bs_eigenvalue_radial(spec, d, z, mass_factor, 0, quadrature=quadrature) for z in z_values]
        direct = bs_eigenvalue_radial(spec, d, 0.0, mass_factor, 0, quadrature=quadrature) if d >= 3 else None
        method = "radial"
    limit = extrapolate_to_zero(z_values, values)
    logger.info(f"Birman–Schwinger z↓0 ({method}): extrapolated {limit:.8f}"
                + (f", direct {direct:.8f}" if direct is not None else ""))
    return ZeroEnergyLimit(limit, list(z_values), values, direct, method)


@dataclass
class ThresholdConsistency:
    """E(λ) = −z 가 되는 λ 와 1/β(z) 의 비교"""
    z: float
    lambda_energy: float
    lambda_bs: float
    lambda_continuum: Optional[float]

    @property
    def relative_gap(self) -> float:
        return abs(self.lambda_energy - self.lambda_bs) / self.lambda_bs


def bs_threshold_consistency(spec: PotentialSpec, grid: Grid, z: float = 1e-2, mass_factor: float = 2.0,
                             tol: float = 1e-8, rng: Optional[np.random.Generator] = None) -> ThresholdConsistency:
    """
    Birman–Schwinger principle on the grid: E(λ) = −z exactly when λ·β(z) = 1

    On a periodic box every λ > 0 binds, so the threshold is compared at a small z > 0; the
    continuum s-wave value 1/β(0) (d = 3) is reported next to it.
    """
    lam_energy = calibrate_coupling(grid, spec, 1.0, -z, tol=tol, rng=rng).coupling
    lam_bs = 1.0 / bs_max_eigenvalue(spec, grid, z, mass_factor, tol=1e-10, rng=rng)
    continuum = None
    if grid.dim_per_particle == 3:
        continuum = 1.0 / bs_eigenvalue_radial(spec, 3, 0.0, mass_factor, 0)
    report = ThresholdConsistency(z, lam_energy, lam_bs, continuum)
    logger.info(f"threshold consistency z={z:g}: λ(E=−z)={lam_energy:.6f}, 1/β(z)={lam_bs:.6f}, "
                f"gap={report.relative_gap:.2e}")
    return report


def odd_threshold_coupling(spec: PotentialSpec, d: int) -> float:
    """
    λ_max of the odd sector of −2Δ − λV: 1/β_odd(0) from the odd-channel zero-energy eigenvalue
    """
    beta = odd_bs_eigenvalue(spec, d, 0.0, mass_factor=2.0)
    return math.inf if beta <= 0 else 1.0 / beta


# ---------------------------------------------------------------------------
# zero-energy resonance

def resonance_wavefunction(grid: Grid) -> Field:
    """ψ = e^{−|x|} for |x| ≤ 1, e^{−1}/|x| outside"""
    if grid.dim_per_particle != 3 or grid.num_particles != 1:
        raise GridError("resonance function lives on a single d = 3 block")
    r = np.broadcast_to(block_radius(grid, 0), grid.shape)
    return Field(grid, np.where(r <= 1.0, np.exp(-r), math.exp(-1.0) / np.maximum(r, 1e-300)))


@dataclass
class ResonanceReport:
    """공명 함수 잔차와 노름"""
    residual: float
    norm_sq: float
    grid: dict
    truncated: bool

    def to_dict(self) -> dict:
        return {"residual": self.residual, "norm_sq": self.norm_sq, "truncated": self.truncated, **self.grid}


def resonance_residual(grid: Grid, z: float = 1.0) -> ResonanceReport:
    """
    Smoothed residual of −Δψ = Vψ for the resonance function of the coulombic well

    ‖χ R_0(z)(−Δ − V)ψ‖ / ‖χ R_0(z)(−Δ)ψ‖ with χ the ball of radius L/2; R_0(z)(−Δ)ψ is
    ψ − zR_0(z)ψ exactly.
    """
    psi = resonance_wavefunction(grid)
    spec = PotentialSpec(PotentialKind.COULOMBIC_CUTOFF)
    lap = build_laplacian(grid, 1.0)
    V = np.broadcast_to(evaluate_radial(spec, block_radius(grid, 0), cap_singular=True), grid.shape)

    smoothed_kinetic = psi - apply_resolvent(lap, z, psi) * z
    smoothed_potential = apply_resolvent(lap, z, Field(grid, V * psi.values))
    chi = np.broadcast_to(block_radius(grid, 0), grid.shape) <= grid.box_half_length / 2.0

    numerator = Field(grid, chi * (smoothed_kinetic - smoothed_potential).values).norm()
    denominator = Field(grid, chi * smoothed_kinetic.values).norm()
    truncated = math.exp(-1.0) / grid.box_half_length > 1e-3
    if truncated:
        logger.info(f"resonance: tail e^(-1)/L = {math.exp(-1.0) / grid.box_half_length:.2e} exceeds 1e-3 "
                    f"(box L={grid.box_half_length:g} truncates the non-normalizable tail)")
    report = ResonanceReport(numerator / denominator, psi.norm() ** 2, grid.describe(), truncated)
    logger.debug(f"resonance residual n={grid.points_per_axis}, L={grid.box_half_length:g}: "
                 f"{report.residual:.4e}, ‖ψ‖²={report.norm_sq:.4f}")
    return report


# ---------------------------------------------------------------------------
# unitary scaling

def scaling_identity_gap(spec: PotentialSpec, lam: float, eps: float, grid: Grid,
                         rng: Optional[np.random.Generator] = None) -> float:
    """
    max |ε²·h_ε f − h_1 f| / max|h_1 f| for the same node values on the boxes εL and L
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    small = grid.with_box(eps * grid.box_half_length)
    values = rng.standard_normal(grid.shape)
    scaled = RelativeHamiltonian(small, spec, eps, lam).as_map().apply(Field(small, values)).values * eps ** 2
    unit = RelativeHamiltonian(grid, spec, 1.0, lam).as_map().apply(Field(grid, values)).values
    return float(np.max(np.abs(scaled - unit)) / max(np.max(np.abs(unit)), 1e-300))
