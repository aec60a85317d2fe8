"""
Fermionic N-body operators

반대칭 부분공간 위의 H_ε = −Δ − λ Σ_{i<j} V_ε(x_i − x_j), 좌표 변환 𝒦 와 A/B 분해,
Konno–Kuroda 항등식, S(z) 노름, 리졸벤트 차이 노름, 수렴 속도 스윕, Thomas 스케일링
"""

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.optimize import brentq

from core.enums import PotentialKind, SignClass, SolverMethod, SweepMethod
from core.exceptions import BracketError, GridError, ThresholdViolationError
from core.system_monitor import MemoryGuard
from solver.lattice import (Field, Grid, LinearMap, NormEstimate, antisymmetrize, build_laplacian, dense_matrix,
                            lowest_eigenpair, operator_norm, parity_project_odd, permutation_sign, resolvent_map,
                            solve_shifted)
from solver.oddsector import grid_for_eps
from solver.potentials import (CouplingSchedule, PotentialSpec, compute_CV, coupling_at, evaluate_scaled_radial,
                               lambda_max_lower_bound)
from solver.radial import odd_bs_eigenvalue, resolvent_difference_radial
from solver.twobody import RelativeHamiltonian, ground_state, odd_threshold_coupling, scaling_identity_gap

# δ 가설 검사에 쓰는 후보 (큰 값부터)
DELTA_CANDIDATES = (1.0, 0.5, 0.25, 0.1)
# H₀ − (1+δ)W ≥ 0 판정 허용치
RITZ_FLOOR = -1e-10
# 조밀 Konno–Kuroda 검사의 최대 반대칭 기저 차원
MAX_DENSE_DIM = 4096
# 격자 맵이 동시에 유지하는 필드 수 (메모리 추정용)
WORKING_COPIES = 16


def pair_distance(grid: Grid, i: int, j: int) -> np.ndarray:
    """minimum-image |x_j − x_i| on the torus (broadcast array)"""
    period = 2.0 * grid.box_half_length
    total = 0.0
    for axis_i, axis_j in zip(grid.block_axes(i), grid.block_axes(j)):
        diff = grid.coordinate(axis_j) - grid.coordinate(axis_i)
        diff = diff - period * np.round(diff / period)
        total = total + diff ** 2
    return np.sqrt(total)


def pair_potential(spec: PotentialSpec, eps: float, grid: Grid) -> np.ndarray:
    """Σ_{i<j} V_ε(x_i − x_j); coincident nodes of singular kinds take V_cap"""
    total = np.zeros(grid.shape)
    for i, j in itertools.combinations(range(grid.num_particles), 2):
        total = total + evaluate_scaled_radial(spec, eps, pair_distance(grid, i, j), cap_singular=True)
    return total


@dataclass
class FermionicHamiltonian:
    """H_ε = −Δ − λ Σ_{i<j} V_ε(x_i − x_j), sandwiched by the antisymmetrizer unless disabled"""
    grid: Grid
    spec: PotentialSpec
    eps: float
    lam: float
    antisymmetric: bool = True

    def __post_init__(self):
        if self.grid.num_particles < 2:
            raise GridError("N-body Hamiltonian needs at least two particle blocks")

    @property
    def N(self) -> int:
        return self.grid.num_particles

    @property
    def d(self) -> int:
        return self.grid.dim_per_particle

    @cached_property
    def kinetic(self) -> LinearMap:
        return build_laplacian(self.grid, 1.0)

    @cached_property
    def pair_values(self) -> np.ndarray:
        return pair_potential(self.spec, self.eps, self.grid)

    def project(self, f: Field) -> Field:
        return antisymmetrize(f, self.N, self.d) if self.antisymmetric else f

    def as_map(self) -> LinearMap:
        interaction = self.lam * self.pair_values
        kinetic = self.kinetic

        def apply(f: Field) -> Field:
            f = self.project(f)
            return self.project(kinetic.apply(f) - Field(self.grid, interaction * f.values))

        label = f"H(N={self.N}, d={self.d}, ε={self.eps:g}, λ={self.lam:g})"
        return LinearMap(apply, apply, label, self.grid, self_adjoint=True)

    def free_map(self) -> LinearMap:
        return self.with_coupling(0.0).as_map()

    def with_coupling(self, lam: float) -> 'FermionicHamiltonian':
        other = FermionicHamiltonian(self.grid, self.spec, self.eps, lam, self.antisymmetric)
        # 쌍 퍼텐셜 배열은 λ 와 무관
        if "pair_values" in self.__dict__:
            other.__dict__["pair_values"] = self.pair_values
        return other

    def describe(self) -> dict:
        return {"N": self.N, "eps": self.eps, "lambda": self.lam, **self.grid.describe()}


def build_hamiltonian(N: int, d: int, grid: Grid, spec: PotentialSpec, eps: float, lam: float,
                      memory_cap_mb: Optional[float] = None, antisymmetric: bool = True) -> FermionicHamiltonian:
    """
    Fermionic Hamiltonian on a grid of N blocks of dimension d

    Raises:
        GridError: grid does not hold N blocks of dimension d
        MemoryCapError: the working set would exceed the memory cap (checked before allocation)
    """
    if grid.num_particles != N or grid.dim_per_particle != d:
        raise GridError(f"grid holds {grid.num_particles} blocks of dimension {grid.dim_per_particle}, "
                        f"expected {N} of dimension {d}")
    MemoryGuard(memory_cap_mb).check(grid.num_nodes, WORKING_COPIES, label=f"H(N={N}, d={d}, n={grid.points_per_axis})")
    hamiltonian = FermionicHamiltonian(grid, spec, eps, lam, antisymmetric)
    logger.debug(f"built {hamiltonian.as_map().descriptor} on {grid.num_nodes} nodes")
    return hamiltonian


def fermionic_ground_state(H: FermionicHamiltonian, tol: float = 1e-8,
                           rng: Optional[np.random.Generator] = None) -> float:
    project = H.project if H.antisymmetric else None
    method = SolverMethod.LANCZOS if H.antisymmetric else SolverMethod.AUTO
    return lowest_eigenpair(H.as_map(), tol=tol, rng=rng, project=project, method=method,
                            kinetic=H.kinetic).value


# ---------------------------------------------------------------------------
# coordinate map and factorization

def _index_arrays(grid: Grid) -> List[np.ndarray]:
    n, D = grid.points_per_axis, grid.total_dim
    arrays = []
    for axis in range(D):
        shape = [1] * D
        shape[axis] = n
        arrays.append(np.arange(n).reshape(shape))
    return arrays


def coordinate_map(f: Field) -> Field:
    """
    (𝒦f)(r, x₁, x₃, …) = f(x₁, x₁ + r, x₃, …) on lattice indices (r index taken mod n)
    """
    grid = f.grid
    n, d = grid.points_per_axis, grid.dim_per_particle
    out = _index_arrays(grid)
    source = list(out)
    for a in range(d):
        source[a] = out[d + a]
        source[d + a] = (out[d + a] + out[a]) % n
    return Field(grid, f.values[tuple(source)])


def coordinate_map_inverse(g: Field) -> Field:
    """𝒦* = 𝒦^{-1}: f(x₁, x₂, …) = g(x₂ − x₁, x₁, …)"""
    grid = g.grid
    n, d = grid.points_per_axis, grid.dim_per_particle
    out = _index_arrays(grid)
    source = list(out)
    for a in range(d):
        source[a] = (out[d + a] - out[a]) % n
        source[d + a] = out[a]
    return Field(grid, g.values[tuple(source)])


def relative_radius(grid: Grid) -> np.ndarray:
    """|r| of the first block in the 𝒦 layout (minimum image of the index difference)"""
    n, h = grid.points_per_axis, grid.spacing
    total = 0.0
    for axis in grid.block_axes(0):
        shape = [1] * grid.total_dim
        shape[axis] = n
        r = (((np.arange(n) + n // 2) % n) - n // 2) * h
        total = total + r.reshape(shape) ** 2
    return np.sqrt(total)


class KKFactorization:
    """
    W = A*B with A = √C(N,2)·(v⊗1)·𝒦, B = J·A, v = |λV_ε|^{1/2}, J = sgn V

    A acts on antisymmetric fields; A* maps back through the antisymmetrizer.
    """

    def __init__(self, hamiltonian: FermionicHamiltonian):
        self.hamiltonian = hamiltonian
        grid = hamiltonian.grid
        values = evaluate_scaled_radial(hamiltonian.spec, hamiltonian.eps, relative_radius(grid), cap_singular=True)
        values = np.broadcast_to(hamiltonian.lam * values, grid.shape)
        self.pair_count = math.comb(hamiltonian.N, 2)
        self.v = np.sqrt(self.pair_count * np.abs(values))
        self.J = np.where(values < 0, -1.0, 1.0)

    @property
    def grid(self) -> Grid:
        return self.hamiltonian.grid

    def A(self, f: Field) -> Field:
        return Field(self.grid, self.v * coordinate_map(f).values)

    def A_adjoint(self, g: Field) -> Field:
        return self.hamiltonian.project(coordinate_map_inverse(Field(self.grid, self.v * g.values)))

    def B(self, f: Field) -> Field:
        return Field(self.grid, self.J * self.A(f).values)

    def B_adjoint(self, g: Field) -> Field:
        return self.A_adjoint(Field(self.grid, self.J * g.values))

    def a_map(self) -> LinearMap:
        return LinearMap(self.A, self.A_adjoint, "A", self.grid)

    def b_map(self) -> LinearMap:
        return LinearMap(self.B, self.B_adjoint, "B", self.grid)

    def interaction(self, f: Field) -> Field:
        """W f = λ Σ_{i<j} V_ε,ij f"""
        return Field(self.grid, self.hamiltonian.lam * self.hamiltonian.pair_values * f.values)


def antisymmetric_basis(grid: Grid) -> np.ndarray:
    """
    Orthonormal columns spanning the antisymmetric node space: one antisymmetrized delta per
    set of N distinct single-particle nodes (dimension C(n^d, N))

    Raises:
        GridError: dimension above MAX_DENSE_DIM
    """
    n, d, N = grid.points_per_axis, grid.dim_per_particle, grid.num_particles
    single = n ** d
    dim = math.comb(single, N)
    if dim > MAX_DENSE_DIM:
        raise GridError(f"antisymmetric space has dimension {dim} > {MAX_DENSE_DIM}; use a coarser grid")
    perms = list(itertools.permutations(range(N)))
    signs = [permutation_sign(p) for p in perms]
    scale = 1.0 / math.sqrt(math.factorial(N))
    single_index = np.array(np.unravel_index(np.arange(single), (n,) * d)).T

    Q = np.zeros((grid.num_nodes, dim))
    for column, nodes in enumerate(itertools.combinations(range(single), N)):
        for perm, sign in zip(perms, signs):
            multi = np.concatenate([single_index[nodes[p]] for p in perm])
            Q[np.ravel_multi_index(tuple(multi), grid.shape), column] = sign * scale
    return Q


def _apply_columns(func, grid: Grid, matrix: np.ndarray) -> np.ndarray:
    return np.stack([func(Field.from_vector(grid, matrix[:, i])).as_vector() for i in range(matrix.shape[1])],
                    axis=1)


@dataclass
class KKResidual:
    """Konno–Kuroda 항등식 조밀 검사 결과"""
    residual: float
    dimension: int
    z: float
    min_eigenvalue: float


def kk_identity_residual(H: FermionicHamiltonian, z: float = 1.0,
                         basis: Optional[np.ndarray] = None) -> KKResidual:
    """
    Relative operator-norm residual of (H+z)^{-1} = R_0 + (AR_0)* S(z) B R_0 on the antisymmetric space

    Dense assembly in the orthonormal antisymmetric basis Q:
        lhs = (Q^T H Q + z)^{-1}
        rhs = Q^T R_0 Q + X^T Y + X^T (BQ)(Q^T H Q + z)^{-1}(AQ)^T Y,  X = A R_0 Q, Y = B R_0 Q

    Raises:
        ThresholdViolationError: H + z not positive definite
    """
    grid = H.grid
    Q = antisymmetric_basis(grid) if basis is None else basis
    dim = Q.shape[1]
    factorization = KKFactorization(H)
    R0 = resolvent_map(build_laplacian(grid, 1.0), z)

    Hf = dense_matrix(H.as_map(), Q).real
    Hf = 0.5 * (Hf + Hf.T)
    shifted = Hf + z * np.eye(dim)
    min_eig = float(np.linalg.eigvalsh(shifted)[0])
    try:
        chol = cho_factor(shifted)
    except LinAlgError:
        logger.error(f"H + z indefinite on the antisymmetric space (λ_min = {min_eig:.3e})")
        raise ThresholdViolationError(f"H + {z:g} is not positive definite: coupling above threshold",
                                      min_eigenvalue=min_eig)
    lhs = cho_solve(chol, np.eye(dim))

    R0Q = _apply_columns(R0.apply, grid, Q).real
    X = _apply_columns(factorization.A, grid, R0Q)
    Y = _apply_columns(factorization.B, grid, R0Q)
    AQ = _apply_columns(factorization.A, grid, Q)
    BQ = _apply_columns(factorization.B, grid, Q)

    rhs = Q.T @ R0Q + X.T @ Y + (X.T @ BQ) @ cho_solve(chol, AQ.T @ Y)
    residual = float(np.linalg.norm(lhs - rhs, 2) / np.linalg.norm(lhs, 2))
    logger.info(f"Konno–Kuroda residual N={H.N}, d={H.d}, n={grid.points_per_axis}, dim={dim}: {residual:.3e}")
    return KKResidual(residual, dim, z, min_eig - z)


def factorization_gap(H: FermionicHamiltonian, rng: Optional[np.random.Generator] = None) -> float:
    """|⟨φ, Wψ⟩ − ⟨Aφ, Bψ⟩| / (‖φ‖‖ψ‖‖W‖_max) on random antisymmetric fields"""
    rng = rng if rng is not None else np.random.default_rng(0)
    factorization = KKFactorization(H)
    phi = H.project(Field.random(H.grid, rng, complex_valued=False))
    psi = H.project(Field.random(H.grid, rng, complex_valued=False))
    lhs = phi.inner(factorization.interaction(psi))
    rhs = factorization.A(phi).inner(factorization.B(psi))
    scale = phi.norm() * psi.norm() * max(float(np.max(np.abs(H.lam * H.pair_values))), 1e-300)
    return abs(lhs - rhs) / scale


# ---------------------------------------------------------------------------
# S(z)

class SOperator:
    """S(z) = 1 + B(H+z)^{-1}A*, inner resolvent by conjugate gradients"""

    def __init__(self, factorization: KKFactorization, z: float = 1.0, tol: float = 1e-10, max_iters: int = 5000):
        self.factorization = factorization
        self.z = z
        self.tol = tol
        self.max_iters = max_iters
        self._H = factorization.hamiltonian.as_map()

    def apply(self, g: Field) -> Field:
        inner = solve_shifted(self._H, self.z, self.factorization.A_adjoint(g), tol=self.tol,
                              max_iters=self.max_iters)
        return g + self.factorization.B(inner)

    def adjoint_apply(self, g: Field) -> Field:
        inner = solve_shifted(self._H, self.z, self.factorization.B_adjoint(g), tol=self.tol,
                              max_iters=self.max_iters)
        return g + self.factorization.A(inner)

    def as_map(self) -> LinearMap:
        return LinearMap(self.apply, self.adjoint_apply, f"S({self.z:g})", self.factorization.grid)


@dataclass
class SNormReport:
    """‖S(z)‖ 와 적용 가능한 해석적 상한"""
    norm: float
    bound: float
    sign_class: SignClass
    delta: Optional[float]
    min_ritz: Optional[float]
    hypothesis_verified: bool

    @property
    def within_bound(self) -> bool:
        return self.hypothesis_verified and self.norm <= self.bound * (1.0 + 1e-6)

    def to_dict(self) -> dict:
        return {"s_norm": self.norm, "bound": self.bound, "sign_class": self.sign_class.value,
                "delta_used": self.delta, "min_ritz": self.min_ritz,
                "hypothesis_verified": self.hypothesis_verified, "within_bound": self.within_bound}


def measure_delta(H: FermionicHamiltonian, candidates: Sequence[float] = DELTA_CANDIDATES, tol: float = 1e-8,
                  rng: Optional[np.random.Generator] = None) -> Tuple[Optional[float], float]:
    """
    Largest δ among the candidates with H₀ − (1+δ)W ≥ 0 on the antisymmetric space

    Returns:
        (δ or None, smallest Ritz value seen at the last tested δ)
    """
    min_ritz = math.nan
    for delta in sorted(candidates, reverse=True):
        min_ritz = fermionic_ground_state(H.with_coupling(H.lam * (1.0 + delta)), tol=tol, rng=rng)
        logger.debug(f"δ={delta:g}: smallest Ritz value of H₀ − (1+δ)W = {min_ritz:.3e}")
        if min_ritz >= RITZ_FLOOR:
            return delta, min_ritz
    logger.warning(f"no δ in {tuple(candidates)} satisfies H₀ − (1+δ)W ≥ 0 (smallest Ritz {min_ritz:.3e})")
    return None, min_ritz


def s_bound(sign_class: SignClass, delta: Optional[float]) -> float:
    """V ≥ 0: 1 + 1/δ, V ≤ 0: 2, mixed: not available (nan)"""
    if sign_class is SignClass.NONPOSITIVE:
        return 2.0
    if sign_class is SignClass.NONNEGATIVE and delta:
        return 1.0 + 1.0 / delta
    return math.nan


def s_norm_check(H: FermionicHamiltonian, factorization: Optional[KKFactorization] = None, z: float = 1.0,
                 tol: float = 1e-6, rng: Optional[np.random.Generator] = None,
                 solve_tol: Optional[float] = None, max_iters: int = 5000) -> SNormReport:
    """
    ‖S(z)‖ next to the bound it should satisfy

    V ≥ 0 needs a verified δ with H₀ − (1+δ)W ≥ 0; a failed verification is reported, not raised.
    Mixed-sign potentials are measured without asserting a bound.

    Args:
        tol: relative tolerance of the power iteration
        solve_tol: inner conjugate-gradient tolerance (default tol/10)
        max_iters: iteration cap of each inner solve

    Raises:
        ConvergenceError: an inner solve hit max_iters
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    factorization = factorization or KKFactorization(H)
    sign_class = H.spec.sign_class
    delta, min_ritz = (None, None)
    verified = sign_class is SignClass.NONPOSITIVE
    if sign_class is SignClass.NONNEGATIVE:
        delta, min_ritz = measure_delta(H, rng=rng)
        verified = delta is not None

    s_map = SOperator(factorization, z, solve_tol or tol / 10.0, max_iters).as_map()
    estimate = operator_norm(s_map, tol=tol, rng=rng)
    report = SNormReport(estimate.value, s_bound(sign_class, delta), sign_class, delta, min_ritz, verified)
    if sign_class is SignClass.MIXED:
        logger.info(f"‖S({z:g})‖ = {report.norm:.6f} (mixed sign, bound not asserted)")
    elif not verified:
        logger.warning(f"‖S({z:g})‖ = {report.norm:.6f}; δ-hypothesis failed, bound not claimed")
    else:
        logger.info(f"‖S({z:g})‖ = {report.norm:.6f} ≤ {report.bound:.4f}: {report.within_bound}")
    return report


# 무작위 S(z) 인스턴스의 (ε, λ) 범위; V ≥ 0 은 δ 가설이 성립하도록 약한 결합만
SUITE_EPS_RANGE = (0.5, 1.5)
SUITE_LAMBDA_RANGE = {SignClass.NONNEGATIVE: (0.1, 0.4), SignClass.NONPOSITIVE: (0.1, 2.0)}


@dataclass
class SNormInstance:
    """S(z) 검사 인스턴스 하나"""
    sign_class: SignClass
    eps: float
    lam: float
    z: float
    report: SNormReport

    def to_dict(self) -> dict:
        return {"sign_class": self.sign_class.value, "epsilon": self.eps, "lambda": self.lam, "z": self.z,
                **self.report.to_dict()}


def signed_variants(spec: PotentialSpec) -> dict:
    """The potential and its negative keyed by sign class; mixed-sign potentials have no bound to test"""
    sign_class = spec.sign_class
    if sign_class is SignClass.MIXED:
        return {}
    flipped = spec.scaled_by(-1.0)
    return {sign_class: spec, flipped.sign_class: flipped}


def s_norm_suite(N: int, d: int, grid: Grid, spec: PotentialSpec, z: float = 1.0, count: int = 5,
                 tol: float = 1e-6, rng: Optional[np.random.Generator] = None, solve_tol: Optional[float] = None,
                 max_iters: int = 5000, memory_cap_mb: Optional[float] = None) -> List[SNormInstance]:
    """
    ‖S(z)‖ on `count` seeded (ε, λ) instances per sign class

    Both V and −V are tested, so one sign-definite potential covers the V ≥ 0 bound 1 + 1/δ and
    the V ≤ 0 bound 2. Mixed-sign potentials give an empty list.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    instances: List[SNormInstance] = []
    for sign_class, variant in sorted(signed_variants(spec).items(), key=lambda item: item[0].value):
        lam_lo, lam_hi = SUITE_LAMBDA_RANGE[sign_class]
        for _ in range(count):
            eps = float(rng.uniform(*SUITE_EPS_RANGE))
            lam = float(rng.uniform(lam_lo, lam_hi))
            H = build_hamiltonian(N, d, grid, variant, eps, lam, memory_cap_mb)
            report = s_norm_check(H, z=z, tol=tol, rng=rng, solve_tol=solve_tol, max_iters=max_iters)
            instances.append(SNormInstance(sign_class, eps, lam, z, report))
    if instances:
        passed = sum(instance.report.within_bound for instance in instances)
        logger.info(f"S({z:g}) suite: {passed}/{len(instances)} instances within their bound")
    return instances


# ---------------------------------------------------------------------------
# resolvent differences

@dataclass
class ResolventDifferenceResult:
    """‖(H_ε+z)^{-1} − (H₀+z)^{-1}‖ 측정 결과"""
    eps: float
    lam: float
    z: float
    norm: float
    converged: bool = True
    tol: float = 1e-6
    method: str = "grid"
    grid: dict = field(default_factory=dict)
    s_norm: Optional[float] = None
    delta: Optional[float] = None
    bound: Optional[float] = None
    chain_bound: Optional[float] = None
    resolved: bool = True

    def to_row(self) -> dict:
        return {"epsilon": self.eps, "lambda": self.lam, "z": self.z, "norm": self.norm,
                "delta_used": self.delta, "s_norm": self.s_norm, "bound": self.bound,
                "resolved_flag": self.resolved}


def resolvent_difference_map(H: FermionicHamiltonian, z: float, inner_tol: float,
                             max_iters: int = 5000) -> LinearMap:
    """D f = (H+z)^{-1}Pf − R_0 Pf on the antisymmetric space (self-adjoint)"""
    H_map = H.as_map()
    R0 = resolvent_map(build_laplacian(H.grid, 1.0), z)

    def apply(f: Field) -> Field:
        f = H.project(f)
        return solve_shifted(H_map, z, f, tol=inner_tol, max_iters=max_iters) - H.project(R0.apply(f))

    return LinearMap(apply, apply, f"D({z:g})", H.grid, self_adjoint=True)


def resolvent_difference_norm(H: FermionicHamiltonian, z: float = 1.0, tol: float = 1e-6,
                              rng: Optional[np.random.Generator] = None,
                              max_iters: int = 2000, solve_tol: Optional[float] = None,
                              solve_iters: int = 5000) -> ResolventDifferenceResult:
    """
    Power iteration on D(z)D(z)* with the antisymmetric projection; inner solves at solve_tol
    (default tol/10), at most solve_iters steps each

    Raises:
        ConvergenceError: inner solve failed (H + z not positive definite)
    """
    if H.lam == 0.0 or H.spec.is_zero:
        return ResolventDifferenceResult(H.eps, H.lam, z, 0.0, True, tol, "grid", H.grid.describe())
    difference = resolvent_difference_map(H, z, solve_tol or tol / 10.0, solve_iters)
    estimate: NormEstimate = operator_norm(difference, tol=tol, max_iters=max_iters, rng=rng, project=H.project)
    logger.debug(f"‖D({z:g})‖ N={H.N}, ε={H.eps:g}, λ={H.lam:g}: {estimate.value:.8e}")
    return ResolventDifferenceResult(H.eps, H.lam, z, estimate.value, estimate.converged, tol, "grid",
                                     H.grid.describe())


def resolvent_difference_dense(H: FermionicHamiltonian, z: float = 1.0,
                               basis: Optional[np.ndarray] = None) -> float:
    """‖(Q^T H Q + z)^{-1} − Q^T R_0 Q‖₂ on a coarse grid"""
    grid = H.grid
    Q = antisymmetric_basis(grid) if basis is None else basis
    Hf = dense_matrix(H.as_map(), Q).real
    Hf = 0.5 * (Hf + Hf.T)
    R0f = dense_matrix(resolvent_map(build_laplacian(grid, 1.0), z), Q).real
    difference = np.linalg.inv(Hf + z * np.eye(Q.shape[1])) - R0f
    return float(np.max(np.abs(np.linalg.eigvalsh(0.5 * (difference + difference.T)))))


def relative_grid(grid: Grid) -> Grid:
    """relative-coordinate lattice of a two-particle grid: r = x₂ − x₁ lands on offset-0 nodes"""
    return Grid(grid.dim_per_particle, 1, grid.box_half_length, grid.points_per_axis, offset=0.0)


def relative_difference_norm(spec: PotentialSpec, eps: float, lam: float, z: float, grid: Grid,
                             tol: float = 1e-6, rng: Optional[np.random.Generator] = None) -> float:
    """
    Odd-sector ‖(−2Δ_r − λV_ε + z)^{-1} − (−2Δ_r + z)^{-1}‖ on a single-block lattice
    (the total-momentum-zero sector of the two-particle problem)
    """
    h = RelativeHamiltonian(grid, spec, eps, lam, 2.0)
    h_map = h.as_map()
    R0 = resolvent_map(h.kinetic, z)

    def project(f: Field) -> Field:
        return parity_project_odd(f, 0)

    def apply(f: Field) -> Field:
        f = project(f)
        return project(solve_shifted(h_map, z, f, tol=tol / 10.0) - R0.apply(f))

    difference = LinearMap(apply, apply, f"D_rel({z:g})", grid, self_adjoint=True)
    return operator_norm(difference, tol=tol, rng=rng, project=project).value


def free_limit_ratio(norm: float, lam: float, eps: float, d: int) -> float:
    """norm / (λ_ε ε^{d−2}); tends to 0 along the zero-range limit"""
    return norm / (lam * eps ** (d - 2))


def select_delta(delta_max: float, candidates: Sequence[float] = DELTA_CANDIDATES) -> Optional[float]:
    admissible = [delta for delta in candidates if delta <= delta_max]
    return max(admissible) if admissible else None


def radial_difference(spec: PotentialSpec, eps: float, lam: float, z: float, d: int,
                      beta_odd: Optional[float] = None) -> ResolventDifferenceResult:
    """
    N = 2 fast path: center-of-mass separation at total momentum zero and radial odd channels

    δ comes from the zero-energy odd-channel eigenvalue: H₀ − (1+δ)W ≥ 0 ⟺ (1+δ)λβ_odd(0) ≤ 1.
    """
    channel = resolvent_difference_radial(spec, eps, lam, z, d, mass_factor=2.0)
    sign_class = spec.sign_class
    delta = None
    if sign_class is SignClass.NONNEGATIVE:
        beta = beta_odd if beta_odd is not None else odd_bs_eigenvalue(spec, d, 0.0, 2.0)
        delta = select_delta(1.0 / (lam * beta) - 1.0) if beta > 0 else max(DELTA_CANDIDATES)
    bound = s_bound(sign_class, delta)
    chain = bound * channel.x_norm_sq if not math.isnan(bound) else None
    return ResolventDifferenceResult(eps, lam, z, channel.norm, True, 0.0, "radial", {"d": d, "channel": channel.channel},
                                     s_norm=channel.s_norm, delta=delta, bound=bound, chain_bound=chain)


@dataclass
class RateSweepResult:
    """(ε, λ_ε, norm) 테이블"""
    N: int
    d: int
    z: float
    method: str
    rows: List[ResolventDifferenceResult] = field(default_factory=list)

    def to_rows(self) -> List[dict]:
        return [row.to_row() for row in self.rows]

    def resolved_data(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        kept = [row for row in self.rows if row.resolved]
        return (np.array([r.eps for r in kept]), np.array([r.lam for r in kept]), np.array([r.norm for r in kept]))


def rate_row(N: int, d: int, spec: PotentialSpec, eps: float, lam: float, z: float,
             method: SweepMethod = SweepMethod.RADIAL, base_grid: Optional[Grid] = None,
             nodes_per_width: int = 8, max_points: int = 4096, tol: float = 1e-6, seed: Optional[int] = None,
             memory_cap_mb: Optional[float] = None, beta_odd: Optional[float] = None,
             with_s_norm: bool = False, solve_tol: Optional[float] = None,
             max_iters: int = 5000) -> ResolventDifferenceResult:
    """One resolvent-difference row; pure given its arguments. solve_tol/max_iters bound the inner solves."""
    if method is SweepMethod.RADIAL:
        if N != 2:
            raise GridError("the radial fast path covers N = 2 only")
        return radial_difference(spec, eps, lam, z, d, beta_odd)

    if base_grid is None:
        raise GridError("grid rows need a base grid")
    rng = np.random.default_rng(seed)
    guard = MemoryGuard(memory_cap_mb)
    max_nodes = int(guard.cap_mb * 1024 ** 2 / (WORKING_COPIES * 16))
    grid, resolved = grid_for_eps(spec, eps, base_grid, nodes_per_width, max_points, max_nodes)
    H = build_hamiltonian(N, d, grid, spec, eps, lam, guard.cap_mb)
    result = resolvent_difference_norm(H, z, tol, rng, solve_tol=solve_tol, solve_iters=max_iters)
    result.resolved = resolved and result.converged
    if with_s_norm:
        report = s_norm_check(H, z=z, tol=tol, rng=rng, solve_tol=solve_tol, max_iters=max_iters)
        result.s_norm, result.delta, result.bound = report.norm, report.delta, report.bound
    return result


def rate_sweep(N: int, d: int, spec: PotentialSpec, schedule: CouplingSchedule, z: float,
               eps_values: Sequence[float], method: SweepMethod = SweepMethod.RADIAL,
               base_grid: Optional[Grid] = None, tol: float = 1e-6, seed: int = 0,
               memory_cap_mb: Optional[float] = None) -> RateSweepResult:
    """resolvent-difference norms along the ε sweep with λ_ε from the schedule"""
    result = RateSweepResult(N, d, z, method.value)
    beta = None
    if method is SweepMethod.RADIAL and spec.sign_class is SignClass.NONNEGATIVE:
        beta = odd_bs_eigenvalue(spec, d, 0.0, 2.0)
    seeds = np.random.SeedSequence(seed).spawn(len(eps_values))
    for eps, child in zip(eps_values, seeds):
        lam = coupling_at(schedule, eps)
        result.rows.append(rate_row(N, d, spec, eps, lam, z, method, base_grid, tol=tol,
                                    seed=int(child.generate_state(1)[0]), memory_cap_mb=memory_cap_mb,
                                    beta_odd=beta))
    logger.info(f"rate sweep N={N}, d={d}, {method.value}: {len(result.rows)} rows")
    return result


# ---------------------------------------------------------------------------
# λ_max and Thomas scaling

@dataclass
class LambdaMaxReport:
    """λ_max 추정과 Hardy 하한"""
    hardy_bound: float
    estimate: float
    method: str

    @property
    def consistent(self) -> bool:
        return self.estimate >= self.hardy_bound * (1.0 - 1e-6)


def estimate_lambda_max(N: int, d: int, spec: PotentialSpec, grid: Optional[Grid] = None, tol: float = 1e-8,
                        rng: Optional[np.random.Generator] = None) -> LambdaMaxReport:
    """
    Largest λ keeping the fermionic H ≥ 0

    N = 2 without a grid: 1/β_odd(0) of −2Δ − λV. With a grid: root of the antisymmetric
    ground-state energy in λ at ε = 1 (the problem is scale invariant).
    """
    hardy = lambda_max_lower_bound(compute_CV(spec), N, d)
    if grid is None:
        if N != 2:
            raise GridError("radial λ_max estimate covers N = 2 only")
        return LambdaMaxReport(hardy, odd_threshold_coupling(spec, d), "radial")

    H = build_hamiltonian(N, d, grid, spec, 1.0, 0.0)

    def energy(lam: float) -> float:
        return fermionic_ground_state(H.with_coupling(lam), tol=tol, rng=rng)

    lam_hi = 2.0 * hardy
    seen = {}
    for _ in range(8):
        seen[lam_hi] = energy(lam_hi)
        if seen[lam_hi] < 0:
            break
        lam_hi *= 2.0
    else:
        raise BracketError(f"fermionic ground state stays nonnegative up to λ={lam_hi / 2.0:g}", energies=seen)
    estimate = brentq(energy, 0.0, lam_hi, xtol=1e-8, rtol=1e-8)
    logger.info(f"λ_max estimate N={N}, d={d}: {estimate:.6f} (Hardy bound {hardy:.6f})")
    return LambdaMaxReport(hardy, estimate, "grid")


@dataclass
class ThomasReport:
    """일치 격자 스케일링과 구별 가능/페르미온 바닥 상태"""
    lam: float
    eps_values: List[float]
    energies: List[float]
    scaled_energies: List[float]
    scaling_gap: float
    distinguishable_energy: float
    fermionic_energy: float
    single_channel_energy: Optional[float] = None
    illustrative: bool = False

    @property
    def scaling_exact(self) -> bool:
        reference = self.scaled_energies[0]
        return all(abs(e - reference) <= 1e-8 * max(1.0, abs(reference)) for e in self.scaled_energies)

    @property
    def fermions_stable(self) -> bool:
        return self.fermionic_energy >= -1e-8

    def rows(self) -> List[dict]:
        return [{"epsilon": e, "energy": en, "energy_times_eps_sq": s}
                for e, en, s in zip(self.eps_values, self.energies, self.scaled_energies)]


def thomas_scaling_check(N: int = 2, d: int = 3, spec: Optional[PotentialSpec] = None, lam: float = 2.0,
                         eps_values: Sequence[float] = (1.0, 0.5), grid: Optional[Grid] = None,
                         tol: float = 1e-8, rng: Optional[np.random.Generator] = None) -> ThomasReport:
    """
    Matched grids (box εL against L, same n) carry the same matrix up to ε^{−2}, so
    E(ε)·ε² = E(1). N = 2 runs in the relative coordinate: the distinguishable ground state of
    −2Δ_r − λV next to its odd (fermionic) sector, plus −Δ_r − λV for the single-channel well.
    N ≥ 3 runs on the full grid and is marked illustrative.
    """
    spec = spec or PotentialSpec(PotentialKind.COULOMBIC_CUTOFF)
    rng = rng if rng is not None else np.random.default_rng(0)
    eps_values = list(eps_values)

    if N == 2:
        base = grid or Grid(d, 1, 8.0, 16)
        energies = []
        for eps in eps_values:
            h = RelativeHamiltonian(base.with_box(eps * base.box_half_length), spec, eps, lam, 2.0)
            energies.append(ground_state(h, tol=tol, rng=rng).energy)
        gap = scaling_identity_gap(spec, lam, eps_values[-1], base, rng)
        unit = RelativeHamiltonian(base, spec, 1.0, lam, 2.0)
        distinguishable = ground_state(unit, tol=tol, rng=rng).energy
        fermionic = ground_state(unit, tol=tol, rng=rng, odd=True).energy
        single = ground_state(RelativeHamiltonian(base, spec, 1.0, lam, 1.0), tol=tol, rng=rng).energy
        illustrative = False
    else:
        base = grid or Grid(d, N, 4.0, 16)
        energies = []
        for eps in eps_values:
            H = FermionicHamiltonian(base.with_box(eps * base.box_half_length), spec, eps, lam, antisymmetric=False)
            energies.append(fermionic_ground_state(H, tol=tol, rng=rng))
        gap = _nbody_scaling_gap(spec, lam, eps_values[-1], base, rng)
        distinguishable = energies[eps_values.index(1.0)] if 1.0 in eps_values else \
            fermionic_ground_state(FermionicHamiltonian(base, spec, 1.0, lam, False), tol=tol, rng=rng)
        fermionic = fermionic_ground_state(FermionicHamiltonian(base, spec, 1.0, lam, True), tol=tol, rng=rng)
        single = None
        illustrative = True

    scaled = [e * eps ** 2 for e, eps in zip(energies, eps_values)]
    report = ThomasReport(lam, eps_values, energies, scaled, gap, distinguishable, fermionic, single, illustrative)
    logger.info(f"Thomas check N={N}, d={d}, λ={lam:g}: E·ε² = {[f'{s:.10f}' for s in scaled]}, "
                f"operator gap {gap:.1e}, distinguishable {distinguishable:.6f}, fermionic {fermionic:.6f}")
    return report


def _nbody_scaling_gap(spec: PotentialSpec, lam: float, eps: float, grid: Grid,
                       rng: np.random.Generator) -> float:
    small = grid.with_box(eps * grid.box_half_length)
    values = rng.standard_normal(grid.shape)
    scaled = FermionicHamiltonian(small, spec, eps, lam, False).as_map().apply(Field(small, values)).values * eps ** 2
    unit = FermionicHamiltonian(grid, spec, 1.0, lam, False).as_map().apply(Field(grid, values)).values
    return float(np.max(np.abs(scaled - unit)) / max(np.max(np.abs(unit)), 1e-300))
