"""
Periodic lattice substrate

주기 격자, Fourier 스펙트럴 라플라시안, 리졸벤트, 패리티/반대칭 사영,
행렬 없는 연산자 노름 추정과 자기수반 바닥 상태 해법
"""

import itertools
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy.linalg import eigh_tridiagonal
from scipy.sparse.linalg import LinearOperator, cg, lobpcg

from core.enums import SolverMethod
from core.exceptions import ConvergenceError, GridError, ThresholdViolationError

# 사영이 없고 이 노드 수를 넘으면 AUTO 는 LOBPCG 를 선택
LANCZOS_MAX_NODES = 512


@dataclass(frozen=True)
class Grid:
    """
    Periodic uniform lattice on [−L, L)^{d·m}

    Nodes sit at −L + (j + offset)·h with h = 2L/n. With offset 1/2 no node of a single
    block hits the origin, so singular potentials are never evaluated at r = 0.
    """
    dim_per_particle: int
    num_particles: int
    box_half_length: float
    points_per_axis: int
    offset: float = 0.5

    def __post_init__(self):
        if self.dim_per_particle not in (1, 2, 3):
            raise GridError(f"dim_per_particle must be 1, 2 or 3, got {self.dim_per_particle}")
        if self.num_particles < 1:
            raise GridError("grid needs at least one particle block")
        if self.dim_per_particle * self.num_particles > 6:
            raise GridError(f"d·m = {self.dim_per_particle * self.num_particles} exceeds 6 grid dimensions")
        if not self.box_half_length > 0:
            raise GridError(f"box_half_length must be positive, got {self.box_half_length}")
        if self.points_per_axis < 2 or self.points_per_axis % 2:
            raise GridError(f"points_per_axis must be even and ≥ 2, got {self.points_per_axis}")
        if not 0.0 <= self.offset < 1.0:
            raise GridError(f"offset must lie in [0, 1), got {self.offset}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.box_half_length / self.points_per_axis

    @property
    def total_dim(self) -> int:
        return self.dim_per_particle * self.num_particles

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.points_per_axis,) * self.total_dim

    @property
    def num_nodes(self) -> int:
        return self.points_per_axis ** self.total_dim

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.total_dim

    @property
    def volume(self) -> float:
        return (2.0 * self.box_half_length) ** self.total_dim

    def axis_nodes(self) -> np.ndarray:
        """1차원 노드 좌표"""
        j = np.arange(self.points_per_axis)
        return -self.box_half_length + (j + self.offset) * self.spacing

    def axis_wavenumbers(self) -> np.ndarray:
        """k ∈ (π/L)·{−n/2, …, n/2−1} (FFT 순서)"""
        return 2.0 * np.pi * np.fft.fftfreq(self.points_per_axis, d=self.spacing)

    def coordinate(self, axis: int) -> np.ndarray:
        """broadcast 가능한 축 좌표 배열"""
        shape = [1] * self.total_dim
        shape[axis] = self.points_per_axis
        return self.axis_nodes().reshape(shape)

    def block_axes(self, block: int) -> List[int]:
        """particle block 의 축 목록"""
        if not 0 <= block < self.num_particles:
            raise GridError(f"block {block} outside 0..{self.num_particles - 1}")
        d = self.dim_per_particle
        return list(range(block * d, (block + 1) * d))

    def block_coordinates(self, block: int) -> List[np.ndarray]:
        return [self.coordinate(a) for a in self.block_axes(block)]

    def k_squared(self) -> np.ndarray:
        """|k|² on the full node array (FFT ordering)"""
        k = self.axis_wavenumbers()
        total = np.zeros(self.shape)
        for axis in range(self.total_dim):
            shape = [1] * self.total_dim
            shape[axis] = self.points_per_axis
            total = total + (k ** 2).reshape(shape)
        return total

    @property
    def reflection_compatible(self) -> bool:
        return self.offset in (0.0, 0.5)

    def with_box(self, box_half_length: float) -> 'Grid':
        return replace(self, box_half_length=box_half_length)

    def with_points(self, points_per_axis: int) -> 'Grid':
        return replace(self, points_per_axis=points_per_axis)

    def single_block(self) -> 'Grid':
        return replace(self, num_particles=1)

    def describe(self) -> dict:
        return {
            "d": self.dim_per_particle,
            "m": self.num_particles,
            "L": self.box_half_length,
            "n": self.points_per_axis,
            "offset": self.offset,
            "h": self.spacing,
        }


@dataclass
class Field:
    """Node values with the weighted inner product ⟨f,g⟩ = h^{d·m} Σ conj(f)g"""
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != self.grid.shape:
            try:
                self.values = self.values.reshape(self.grid.shape)
            except ValueError:
                raise GridError(f"values of shape {self.values.shape} do not fit grid shape {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise GridError("field has non-finite node values")

    @classmethod
    def zeros(cls, grid: Grid, dtype=float) -> 'Field':
        return cls(grid, np.zeros(grid.shape, dtype=dtype))

    @classmethod
    def constant(cls, grid: Grid, value: complex = 1.0) -> 'Field':
        return cls(grid, np.full(grid.shape, value))

    @classmethod
    def random(cls, grid: Grid, rng: np.random.Generator, complex_valued: bool = True) -> 'Field':
        values = rng.standard_normal(grid.shape)
        if complex_valued:
            values = values + 1j * rng.standard_normal(grid.shape)
        return cls(grid, values)

    @classmethod
    def from_function(cls, grid: Grid, func: Callable[..., np.ndarray]) -> 'Field':
        """func 는 축 좌표 배열들을 받아 broadcast 된 값을 반환"""
        coords = [grid.coordinate(a) for a in range(grid.total_dim)]
        values = np.broadcast_to(func(*coords), grid.shape)
        return cls(grid, np.array(values))

    @classmethod
    def from_vector(cls, grid: Grid, vector: np.ndarray) -> 'Field':
        return cls(grid, np.asarray(vector).reshape(grid.shape))

    def as_vector(self) -> np.ndarray:
        return self.values.reshape(-1)

    def inner(self, other: 'Field') -> complex:
        return self.grid.cell_volume * np.vdot(self.values, other.values)

    def norm(self) -> float:
        return math.sqrt(self.grid.cell_volume * float(np.sum(np.abs(self.values) ** 2)))

    def fourier_norm(self) -> float:
        """Parseval: 같은 노름을 Fourier 계수에서 계산"""
        coeffs = np.fft.fftn(self.values)
        return math.sqrt(self.grid.cell_volume * float(np.sum(np.abs(coeffs) ** 2)) / self.grid.num_nodes)

    def normalized(self) -> 'Field':
        nrm = self.norm()
        if nrm == 0.0:
            return self.copy()
        return Field(self.grid, self.values / nrm)

    def copy(self) -> 'Field':
        return Field(self.grid, self.values.copy())

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.values)

    def real(self) -> 'Field':
        return Field(self.grid, np.real(self.values))

    def __add__(self, other: 'Field') -> 'Field':
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: 'Field') -> 'Field':
        return Field(self.grid, self.values - other.values)

    def __mul__(self, scalar) -> 'Field':
        return Field(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar) -> 'Field':
        return Field(self.grid, self.values / scalar)

    def __neg__(self) -> 'Field':
        return Field(self.grid, -self.values)


@dataclass
class LinearMap:
    """Matrix-free operator: apply + adjoint_apply on Fields"""
    apply: Callable[[Field], Field]
    adjoint_apply: Callable[[Field], Field]
    descriptor: str
    domain: Grid
    codomain: Optional[Grid] = None
    symbol: Optional[np.ndarray] = None  # Fourier 대각 연산자일 때의 multiplier
    self_adjoint: bool = False

    def __post_init__(self):
        if self.codomain is None:
            self.codomain = self.domain

    def __call__(self, f: Field) -> Field:
        return self.apply(f)

    @property
    def adjoint(self) -> 'LinearMap':
        return LinearMap(self.adjoint_apply, self.apply, f"({self.descriptor})*",
                         self.codomain, self.domain,
                         None if self.symbol is None else np.conj(self.symbol), self.self_adjoint)

    def compose(self, inner: 'LinearMap') -> 'LinearMap':
        """self ∘ inner"""
        return LinearMap(lambda f: self.apply(inner.apply(f)),
                         lambda g: inner.adjoint_apply(self.adjoint_apply(g)),
                         f"{self.descriptor}·{inner.descriptor}", inner.domain, self.codomain)

    def __sub__(self, other: 'LinearMap') -> 'LinearMap':
        return LinearMap(lambda f: self.apply(f) - other.apply(f),
                         lambda g: self.adjoint_apply(g) - other.adjoint_apply(g),
                         f"({self.descriptor} − {other.descriptor})", self.domain, self.codomain,
                         self_adjoint=self.self_adjoint and other.self_adjoint)

    def shifted(self, z: float) -> 'LinearMap':
        """self + z"""
        return LinearMap(lambda f: self.apply(f) + f * z, lambda g: self.adjoint_apply(g) + g * np.conj(z),
                         f"({self.descriptor} + {z:g})", self.domain, self.codomain,
                         None if self.symbol is None else self.symbol + z, self.self_adjoint)

    def to_scipy(self, real: bool = False) -> LinearOperator:
        """flatten 된 벡터 위의 scipy LinearOperator"""
        grid_in, grid_out = self.domain, self.codomain
        dtype = np.float64 if real else np.complex128

        def matvec(x):
            out = self.apply(Field.from_vector(grid_in, np.asarray(x).reshape(-1))).as_vector()
            return out.real if real else out.astype(np.complex128)

        def rmatvec(y):
            out = self.adjoint_apply(Field.from_vector(grid_out, np.asarray(y).reshape(-1))).as_vector()
            return out.real if real else out.astype(np.complex128)

        return LinearOperator((grid_out.num_nodes, grid_in.num_nodes), matvec=matvec, rmatvec=rmatvec,
                              dtype=dtype)


@dataclass
class NormEstimate:
    """operator_norm 결과"""
    value: float
    converged: bool
    iterations: int
    restarts: int = 3
    history: List[float] = field(default_factory=list)

    def __float__(self) -> float:
        return self.value


# ---------------------------------------------------------------------------
# Fourier-diagonal maps

def apply_fourier_multiplier(symbol: np.ndarray, f: Field) -> Field:
    out = np.fft.ifftn(symbol * np.fft.fftn(f.values))
    if f.is_real and np.isrealobj(symbol):
        out = out.real
    return Field(f.grid, out)


def build_laplacian(grid: Grid, mass_factor: float = 1.0) -> LinearMap:
    """
    Discrete −mass_factor·Δ through the Fourier multiplier mass_factor·|k|²

    Args:
        grid: lattice
        mass_factor: kinetic prefactor μ (2 for the relative two-body coordinate)

    Returns:
        self-adjoint, positive semidefinite LinearMap with the constant field in its kernel
    """
    if mass_factor <= 0:
        raise GridError(f"mass_factor must be positive, got {mass_factor}")
    symbol = mass_factor * grid.k_squared()

    def apply(f: Field) -> Field:
        return apply_fourier_multiplier(symbol, f)

    return LinearMap(apply, apply, f"-{mass_factor:g}Δ", grid, symbol=symbol, self_adjoint=True)


def apply_resolvent(lap: LinearMap, z: float, f: Field) -> Field:
    """
    (lap + z)^{-1} f by an exact diagonal solve in the Fourier basis

    Raises:
        ThresholdViolationError: z ≤ 0
        GridError: lap is not Fourier-diagonal
    """
    if not z > 0:
        raise ThresholdViolationError(f"resolvent requires z > 0, got {z}")
    if lap.symbol is None:
        raise GridError(f"{lap.descriptor} is not Fourier-diagonal")
    return apply_fourier_multiplier(1.0 / (lap.symbol + z), f)


def resolvent_map(lap: LinearMap, z: float, power: int = 1) -> LinearMap:
    """R_0(z)^power 를 LinearMap 으로"""
    if not z > 0:
        raise ThresholdViolationError(f"resolvent requires z > 0, got {z}")
    if lap.symbol is None:
        raise GridError(f"{lap.descriptor} is not Fourier-diagonal")
    symbol = (lap.symbol + z) ** (-power)

    def apply(f: Field) -> Field:
        return apply_fourier_multiplier(symbol, f)

    label = f"R0({z:g})" if power == 1 else f"R0({z:g})^{power}"
    return LinearMap(apply, apply, label, lap.domain, symbol=symbol, self_adjoint=True)


def multiplication_map(grid: Grid, weights: np.ndarray, descriptor: str = "mult") -> LinearMap:
    """pointwise multiplication by weights"""
    weights = np.broadcast_to(weights, grid.shape)
    conj_weights = np.conj(weights)
    return LinearMap(lambda f: Field(grid, weights * f.values), lambda g: Field(grid, conj_weights * g.values),
                     descriptor, grid, self_adjoint=bool(np.isrealobj(weights)))


def identity_map(grid: Grid) -> LinearMap:
    return LinearMap(lambda f: f.copy(), lambda g: g.copy(), "1", grid, symbol=np.ones(grid.shape),
                     self_adjoint=True)


# ---------------------------------------------------------------------------
# Iterative solve

def solve_shifted(operator: LinearMap, z: float, f: Field, tol: float = 1e-10, max_iters: int = 5000,
                  preconditioner: Optional[LinearMap] = None, x0: Optional[Field] = None) -> Field:
    """
    Conjugate-gradient solve of (operator + z) g = f for self-adjoint operator ≥ 0

    Args:
        operator: self-adjoint LinearMap
        z: positive shift
        f: right-hand side
        tol: relative residual target
        max_iters: CG iteration cap
        preconditioner: optional self-adjoint positive map approximating (operator + z)^{-1}
        x0: optional initial guess

    Returns:
        g with ‖(operator+z)g − f‖/‖f‖ ≤ tol

    Raises:
        ConvergenceError: cap exceeded, carrying the final residual
    """
    if not z > 0:
        raise ThresholdViolationError(f"shifted solve requires z > 0, got {z}")
    rhs_norm = f.norm()
    if rhs_norm == 0.0:
        return Field.zeros(f.grid, dtype=f.values.dtype)

    real = f.is_real
    shifted = operator.shifted(z).to_scipy(real=real)
    M = preconditioner.to_scipy(real=real) if preconditioner is not None else None
    start = None if x0 is None else x0.as_vector()

    iterations = 0

    def count(_xk):
        nonlocal iterations
        iterations += 1

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        x, info = cg(shifted, f.as_vector(), x0=start, rtol=tol, atol=0.0, maxiter=max_iters, M=M,
                     callback=count)

    g = Field.from_vector(f.grid, x)
    residual = (operator.apply(g) + g * z - f).norm() / rhs_norm
    if info != 0 or residual > tol * 10.0:
        logger.error(f"CG on {operator.descriptor}+{z:g} stopped after {iterations} iterations, "
                     f"residual={residual:.3e}")
        raise ConvergenceError(
            f"shifted solve did not converge: residual {residual:.3e} > {tol:.1e} "
            f"(z too small or the coupling is above threshold)",
            residual=residual, iterations=iterations)
    logger.debug(f"CG {operator.descriptor}+{z:g}: {iterations} iterations, residual={residual:.2e}")
    return g


# ---------------------------------------------------------------------------
# Projectors

def _reflect_axis(values: np.ndarray, axis: int, offset: float) -> np.ndarray:
    flipped = np.flip(values, axis=axis)
    if offset == 0.0:
        # j ↦ (n − j) mod n
        flipped = np.roll(flipped, 1, axis=axis)
    return flipped


def reflect(f: Field, block: int = 0) -> Field:
    """(f ∘ (r ↦ −r)) in the coordinates of one particle block"""
    grid = f.grid
    if not grid.reflection_compatible:
        raise GridError(f"offset {grid.offset} does not map nodes to nodes under r ↦ −r (use 0 or 1/2)")
    values = f.values
    for axis in grid.block_axes(block):
        values = _reflect_axis(values, axis, grid.offset)
    return Field(grid, values)


def parity_project_odd(f: Field, block: int = 0) -> Field:
    """(f(r) − f(−r))/2 in the coordinates of the given block"""
    return (f - reflect(f, block)) * 0.5


def parity_projector(grid: Grid, block: int = 0) -> LinearMap:
    if not grid.reflection_compatible:
        raise GridError(f"offset {grid.offset} does not map nodes to nodes under r ↦ −r (use 0 or 1/2)")

    def apply(f: Field) -> Field:
        return parity_project_odd(f, block)

    return LinearMap(apply, apply, "P_odd", grid, self_adjoint=True)


def permutation_sign(perm: Sequence[int]) -> int:
    """inversion count parity"""
    sign = 1
    perm = list(perm)
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                sign = -sign
    return sign


def permute_blocks(values: np.ndarray, perm: Sequence[int], d: int) -> np.ndarray:
    """(σf)(x_1, …, x_N) = f(x_σ(1), …, x_σ(N))"""
    axes = []
    for p in perm:
        axes.extend(range(p * d, (p + 1) * d))
    return np.transpose(values, axes)


def antisymmetrize(f: Field, N: int, d: int) -> Field:
    """
    (1/N!) Σ_σ sgn(σ) σf over permutations of the N particle blocks

    Raises:
        GridError: grid does not hold N blocks of dimension d
    """
    grid = f.grid
    if grid.num_particles != N or grid.dim_per_particle != d:
        raise GridError(f"grid holds {grid.num_particles} blocks of dimension {grid.dim_per_particle}, "
                        f"expected {N} of dimension {d}")
    if N == 1:
        return f.copy()
    total = np.zeros(grid.shape, dtype=f.values.dtype)
    for perm in itertools.permutations(range(N)):
        total = total + permutation_sign(perm) * permute_blocks(f.values, perm, d)
    return Field(grid, total / math.factorial(N))


def antisymmetrizer(grid: Grid) -> LinearMap:
    N, d = grid.num_particles, grid.dim_per_particle

    def apply(f: Field) -> Field:
        return antisymmetrize(f, N, d)

    return LinearMap(apply, apply, "P_as", grid, self_adjoint=True)


# ---------------------------------------------------------------------------
# Operator norm (power iteration on A*A)

def operator_norm(operator: LinearMap, tol: float = 1e-6, max_iters: int = 5000,
                  rng: Optional[np.random.Generator] = None, restarts: int = 3,
                  project: Optional[Callable[[Field], Field]] = None) -> NormEstimate:
    """
    Largest singular value by power iteration on A*A with randomized starts

    Args:
        operator: bounded LinearMap
        tol: relative increment tolerance on the singular-value estimate
        max_iters: iteration cap per restart
        rng: random generator (seeded by the caller for reproducibility)
        restarts: independent random starts; the maximum is returned
        project: optional projector applied to the start vector and after each step

    Returns:
        NormEstimate, flagged unconverged when the cap was hit
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    best = NormEstimate(0.0, True, 0, restarts)

    for attempt in range(restarts):
        x = Field.random(operator.domain, rng)
        if project is not None:
            x = project(x)
        nrm = x.norm()
        if nrm == 0.0:
            continue
        x = x / nrm

        sigma, converged, history = 0.0, False, []
        iteration = 0
        for iteration in range(1, max_iters + 1):
            y = operator.apply(x)
            sigma_new = y.norm()
            history.append(sigma_new)
            if sigma_new == 0.0:
                sigma, converged = 0.0, True
                break
            w = operator.adjoint_apply(y)
            if project is not None:
                w = project(w)
            w_norm = w.norm()
            if w_norm == 0.0:
                sigma, converged = sigma_new, True
                break
            x = w / w_norm
            if abs(sigma_new - sigma) <= tol * sigma_new:
                sigma, converged = sigma_new, True
                break
            sigma = sigma_new

        if not converged:
            logger.warning(f"power iteration on {operator.descriptor} hit the cap ({max_iters}), "
                           f"best estimate {sigma:.6e}")
        logger.debug(f"operator_norm({operator.descriptor}) restart {attempt}: {sigma:.8e} "
                     f"after {iteration} iterations")
        if sigma >= best.value:
            best = NormEstimate(sigma, converged, iteration, restarts, history)

    return best


# ---------------------------------------------------------------------------
# Self-adjoint ground states

@dataclass
class Eigenpair:
    """가장 작은 Ritz 쌍"""
    value: float
    vector: Field
    residual: float
    iterations: int
    method: SolverMethod
    converged: bool = True


def _ritz_residual(operator: LinearMap, theta: float, y: Field) -> float:
    return (operator.apply(y) - y * theta).norm() / y.norm()


def lanczos_lowest(operator: LinearMap, tol: float = 1e-8, rng: Optional[np.random.Generator] = None,
                   project: Optional[Callable[[Field], Field]] = None, krylov_dim: int = 120,
                   max_cycles: int = 200, max_restarts: int = 3, real: bool = True) -> Eigenpair:
    """
    Lanczos with full reorthogonalization and explicit Ritz-vector restarts

    Converged when the Ritz residual ‖(A − θ)y‖ ≤ tol·max(1, |θ|) or the Ritz value moves by less
    than tol between cycles with a residual below √tol. A breakdown that does not deliver a
    converged pair triggers a new random start (up to max_restarts).
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    grid = operator.domain
    dim = grid.num_nodes
    krylov_dim = max(2, min(krylov_dim, dim))
    total_iterations = 0

    def fresh_start() -> Field:
        v = Field.random(grid, rng, complex_valued=not real)
        if project is not None:
            v = project(v)
        return v.normalized()

    v = fresh_start()
    restarts = 0
    theta_prev = math.inf
    best: Optional[Eigenpair] = None

    for cycle in range(max_cycles):
        basis: List[Field] = [v]
        alphas: List[float] = []
        betas: List[float] = []
        breakdown = False
        for j in range(krylov_dim):
            w = operator.apply(basis[j])
            if project is not None:
                w = project(w)
            if real:
                w = w.real()
            alpha = float(np.real(basis[j].inner(w)))
            alphas.append(alpha)
            # full reorthogonalization, twice
            for _ in range(2):
                for q in basis:
                    w = w - q * q.inner(w)
            beta = w.norm()
            total_iterations += 1
            if j == krylov_dim - 1:
                break
            if beta <= 1e-12 * max(1.0, abs(alpha)):
                breakdown = True
                break
            betas.append(beta)
            basis.append(w / beta)

        k = len(alphas)
        if k == 1:
            theta = alphas[0]
            coeffs = np.array([1.0])
        else:
            vals, vecs = eigh_tridiagonal(np.array(alphas), np.array(betas[:k - 1]),
                                          select="i", select_range=(0, 0))
            theta, coeffs = float(vals[0]), vecs[:, 0]

        y = Field.zeros(grid, dtype=basis[0].values.dtype)
        for c, q in zip(coeffs, basis):
            y = y + q * c
        y = y.normalized()
        residual = _ritz_residual(operator, theta, y)
        best = Eigenpair(theta, y, residual, total_iterations, SolverMethod.LANCZOS)
        logger.debug(f"Lanczos cycle {cycle}: θ={theta:.12e}, residual={residual:.3e}, k={k}")

        scale = max(1.0, abs(theta))
        if residual <= tol * scale:
            return best
        if abs(theta - theta_prev) <= tol * scale and residual <= math.sqrt(tol) * scale:
            return best
        if k >= dim:
            # Krylov 공간이 전체 공간: 정확한 값
            return best

        if breakdown:
            restarts += 1
            if restarts > max_restarts:
                raise ConvergenceError(f"Lanczos breakdown on {operator.descriptor} after {max_restarts} restarts",
                                       residual=residual, iterations=total_iterations)
            logger.warning(f"Lanczos breakdown on {operator.descriptor}; restarting ({restarts}/{max_restarts})")
            v = fresh_start()
        else:
            v = y
        theta_prev = theta

    raise ConvergenceError(f"Lanczos on {operator.descriptor} did not converge in {max_cycles} cycles",
                           residual=best.residual if best else None, iterations=total_iterations)


def lobpcg_lowest(operator: LinearMap, preconditioner: Optional[LinearMap], tol: float = 1e-8,
                  rng: Optional[np.random.Generator] = None, max_iters: int = 2000) -> Eigenpair:
    """Preconditioned LOBPCG for the lowest eigenpair of a real symmetric map"""
    rng = rng if rng is not None else np.random.default_rng(0)
    grid = operator.domain
    A = operator.to_scipy(real=True)
    M = preconditioner.to_scipy(real=True) if preconditioner is not None else None
    X = rng.standard_normal((grid.num_nodes, 1))

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        vals, vecs, history = lobpcg(A, X, M=M, tol=tol, maxiter=max_iters, largest=False,
                                     retResidualNormsHistory=True)

    theta = float(vals[0])
    y = Field.from_vector(grid, vecs[:, 0]).normalized()
    residual = _ritz_residual(operator, theta, y)
    iterations = min(len(history), max_iters)
    converged = residual <= math.sqrt(tol) * max(1.0, abs(theta))
    if converged:
        logger.debug(f"LOBPCG on {operator.descriptor}: θ={theta:.12e}, residual={residual:.3e}, "
                     f"{iterations} iterations")
    else:
        logger.warning(f"LOBPCG on {operator.descriptor} stopped after {iterations} iterations with "
                       f"residual {residual:.3e}")
    return Eigenpair(theta, y, residual, iterations, SolverMethod.LOBPCG, converged)


def lowest_eigenpair(operator: LinearMap, tol: float = 1e-8, rng: Optional[np.random.Generator] = None,
                     project: Optional[Callable[[Field], Field]] = None,
                     method: SolverMethod = SolverMethod.AUTO,
                     kinetic: Optional[LinearMap] = None) -> Eigenpair:
    """
    Lowest eigenpair of a real self-adjoint map

    AUTO uses Lanczos up to LANCZOS_MAX_NODES nodes or whenever a projector is supplied, and
    LOBPCG preconditioned by (kinetic + 1)^{-1} otherwise.
    """
    if method is SolverMethod.AUTO:
        use_lobpcg = project is None and operator.domain.num_nodes > LANCZOS_MAX_NODES
        method = SolverMethod.LOBPCG if use_lobpcg else SolverMethod.LANCZOS
    if method is SolverMethod.LOBPCG and project is not None:
        logger.warning("LOBPCG does not support subspace projection here; using Lanczos")
        method = SolverMethod.LANCZOS

    if method is SolverMethod.LOBPCG:
        preconditioner = resolvent_map(kinetic, 1.0) if kinetic is not None and kinetic.symbol is not None else None
        return lobpcg_lowest(operator, preconditioner, tol=tol, rng=rng)
    return lanczos_lowest(operator, tol=tol, rng=rng, project=project)


def dense_matrix(operator: LinearMap, basis: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Dense matrix of a map in the Euclidean node basis, or compressed to the orthonormal
    columns of basis (Q^T A Q)
    """
    grid = operator.domain
    compress = basis is not None
    if basis is None:
        basis = np.eye(grid.num_nodes)
    columns = [operator.apply(Field.from_vector(grid, basis[:, i])).as_vector() for i in range(basis.shape[1])]
    image = np.stack(columns, axis=1)
    return basis.conj().T @ image if compress else image
