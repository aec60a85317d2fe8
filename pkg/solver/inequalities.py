"""
Inequality Verifiers
페르미온 Hardy, log-Hölder, 컷오프 수열, Vandermonde trace, strong convergence 검사
"""

import itertools
import math
import string
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy.integrate import quad

from core.exceptions import GridError, PotentialError
from solver.lattice import Field, Grid, antisymmetrize, build_laplacian, permutation_sign
from solver.nbody import pair_distance
from solver.potentials import CouplingSchedule, PotentialSpec, coupling_at, evaluate_scaled_radial

# 통과 판정 여유
DEFAULT_TOLERANCE = 1e-9
# 같은 위치 노드에서 0 으로 보는 상대 크기
COINCIDENT_ZERO = 1e-12


@dataclass
class InequalityReport:
    """lhs ≤ rhs 검사 한 건"""
    name: str
    lhs: float
    rhs: float
    tolerance: float = DEFAULT_TOLERANCE
    instance: dict = field(default_factory=dict)

    @property
    def ratio(self) -> float:
        if self.rhs == 0.0:
            return 0.0 if self.lhs == 0.0 else math.inf
        return self.lhs / self.rhs

    @property
    def passed(self) -> bool:
        return self.ratio <= 1.0 + self.tolerance

    def to_dict(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs, "ratio": self.ratio,
                "passed": self.passed, "instance": self.instance}


def summarize(reports: Sequence[InequalityReport]) -> dict:
    """이름별 통과 수와 최대 비율"""
    summary = {}
    for report in reports:
        entry = summary.setdefault(report.name, {"count": 0, "passed": 0, "max_ratio": 0.0})
        entry["count"] += 1
        entry["passed"] += int(report.passed)
        entry["max_ratio"] = max(entry["max_ratio"], report.ratio)
    return summary


# ---------------------------------------------------------------------------
# fermionic Hardy

def _pair_distance(grid: Grid, i: int, j: int) -> np.ndarray:
    return np.broadcast_to(pair_distance(grid, i, j), grid.shape)


def hardy_check(psi: Field, N: int, d: int) -> InequalityReport:
    """
    Σ_{i<j} ∫|ψ|²/|x_i − x_j|² ≤ (N/d²)‖∇ψ‖²

    Pair distances use the minimum image. Coincident nodes contribute nothing when ψ vanishes
    there (antisymmetric fields do); otherwise the left side is infinite.
    """
    grid = psi.grid
    if grid.num_particles != N or grid.dim_per_particle != d:
        raise GridError(f"field grid holds {grid.num_particles}×{grid.dim_per_particle}, expected {N}×{d}")
    density = np.abs(psi.values) ** 2
    scale = float(np.max(density)) if density.size else 0.0

    lhs = 0.0
    for i, j in itertools.combinations(range(N), 2):
        r = _pair_distance(grid, i, j)
        coincident = r == 0.0
        if np.any(coincident) and np.max(density[coincident]) > COINCIDENT_ZERO * scale:
            lhs = math.inf
            break
        safe = np.where(coincident, 1.0, r)
        lhs += grid.cell_volume * float(np.sum(np.where(coincident, 0.0, density / safe ** 2)))

    kinetic = build_laplacian(grid, 1.0)
    gradient_sq = float(np.real(psi.inner(kinetic.apply(psi))))
    rhs = N / d ** 2 * gradient_sq
    return InequalityReport("hardy", lhs, rhs, instance={"N": N, **grid.describe()})


def random_band_limited(grid: Grid, rng: np.random.Generator, k_max: Optional[float] = None) -> Field:
    """
    Random field with complex Gaussian Fourier coefficients, gaussian envelope of width k_max
    and the Nyquist modes removed
    """
    k_max = k_max if k_max is not None else 0.25 * math.pi / grid.spacing
    coeffs = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    coeffs = coeffs * np.exp(-grid.k_squared() / (2.0 * k_max ** 2))
    n = grid.points_per_axis
    for axis in range(grid.total_dim):
        index = [slice(None)] * grid.total_dim
        index[axis] = n // 2
        coeffs[tuple(index)] = 0.0
    return Field(grid, np.fft.ifftn(coeffs))


def slater_state(grid: Grid, width: float = 1.0) -> Field:
    """
    Antisymmetrized product of gaussian orbitals: the ground orbital and the first N−1 excited
    orbitals along the first axis
    """
    N, d = grid.num_particles, grid.dim_per_particle
    orbitals = []
    for level in range(N):
        def orbital(coords, level=level):
            r_sq = sum(c ** 2 for c in coords)
            return coords[0] ** level * np.exp(-r_sq / (2.0 * width ** 2))
        orbitals.append(orbital)

    values = np.zeros(grid.shape)
    for perm in itertools.permutations(range(N)):
        sign = permutation_sign(perm)
        product = 1.0
        for block, level in enumerate(perm):
            product = product * orbitals[level](grid.block_coordinates(block))
        values = values + sign * np.broadcast_to(product, grid.shape)
    return Field(grid, values)


def symmetric_diagonal_state(grid: Grid, width: float = 0.5) -> Field:
    """symmetric ψ concentrated near x₁ = x₂ (d = 1, N = 2): needs no antisymmetry to be built"""
    if grid.num_particles != 2 or grid.dim_per_particle != 1:
        raise GridError("symmetric diagonal state is defined for N = 2, d = 1")
    x1, x2 = grid.coordinate(0), grid.coordinate(1)
    values = np.exp(-((x1 - x2) / width) ** 2 - 0.25 * (x1 + x2) ** 2)
    return Field(grid, np.broadcast_to(values, grid.shape))


def hardy_audit(grid: Grid, count: int, rng: np.random.Generator) -> List[InequalityReport]:
    """Hardy on count random antisymmetrized band-limited fields"""
    N, d = grid.num_particles, grid.dim_per_particle
    reports = []
    for _ in range(count):
        psi = antisymmetrize(random_band_limited(grid, rng), N, d)
        if psi.norm() == 0.0:
            continue
        reports.append(hardy_check(psi, N, d))
    worst = max((r.ratio for r in reports), default=0.0)
    logger.info(f"Hardy audit N={N}, d={d}, n={grid.points_per_axis}: {len(reports)} fields, max ratio {worst:.4f}")
    return reports


# ---------------------------------------------------------------------------
# log-Hölder (d = 2)

def interpolate(u: Field, points: np.ndarray) -> np.ndarray:
    """
    Trigonometric interpolant of u at arbitrary points (rows of points), Nyquist modes zeroed

    Exact for fields without Nyquist content.
    """
    grid = u.grid
    D = grid.total_dim
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != D:
        raise GridError(f"points have {points.shape[1]} coordinates, grid has {D}")
    n = grid.points_per_axis
    coeffs = np.fft.fftn(u.values) / grid.num_nodes
    for axis in range(D):
        index = [slice(None)] * D
        index[axis] = n // 2
        coeffs[tuple(index)] = 0.0

    k = grid.axis_wavenumbers()
    x0 = grid.axis_nodes()[0]
    phases = [np.exp(1j * np.outer(points[:, axis] - x0, k)) for axis in range(D)]
    letters = string.ascii_lowercase[:D]
    subscripts = letters + "," + ",".join("z" + c for c in letters) + "->z"
    return np.einsum(subscripts, coeffs, *phases)


def sobolev_norms(u: Field) -> Tuple[float, float]:
    """(‖∇u‖², ‖Δu‖²) through Fourier multipliers"""
    kinetic = build_laplacian(u.grid, 1.0)
    lap = kinetic.apply(u)
    return float(np.real(u.inner(lap))), lap.norm() ** 2


def log_holder_rhs(y_norm: float, gradient_sq: float, laplacian_sq: float) -> float:
    """(1/(2√π))|y|(2 + |log|y||)^{1/2}(‖Δu‖² + ‖∇u‖²)^{1/2}"""
    return y_norm * math.sqrt(2.0 + abs(math.log(y_norm))) * math.sqrt(laplacian_sq + gradient_sq) \
        / (2.0 * math.sqrt(math.pi))


def log_holder_check(u: Field, x: Sequence[float], y: Sequence[float],
                     norms: Optional[Tuple[float, float]] = None) -> InequalityReport:
    """
    |u(x+y) − u(x)| ≤ (1/(2√π))|y|(2 + |log|y||)^{1/2}(‖Δu‖² + ‖∇u‖²)^{1/2} for u on a d = 2 grid

    Raises:
        GridError: u not on a single two-dimensional block
        ValueError: y = 0
    """
    grid = u.grid
    if grid.total_dim != 2:
        raise GridError("log-Hölder check runs on a two-dimensional grid")
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    y_norm = float(np.linalg.norm(y))
    if y_norm == 0.0:
        raise ValueError("log-Hölder check needs a nonzero shift y")
    gradient_sq, laplacian_sq = norms if norms is not None else sobolev_norms(u)
    values = interpolate(u, np.stack([x + y, x]))
    lhs = float(abs(values[0] - values[1]))
    rhs = log_holder_rhs(y_norm, gradient_sq, laplacian_sq)
    return InequalityReport("log_holder", lhs, rhs, instance={"x": x.tolist(), "y": y.tolist()})


def gaussian_field(grid: Grid, center: Sequence[float] = (0.0, 0.0), width: float = 1.0) -> Field:
    return Field.from_function(grid, lambda *c: np.exp(-sum((ci - x0) ** 2 for ci, x0 in zip(c, center))
                                                       / (2.0 * width ** 2)))


def plane_wave_holder(grid: Grid, mode: Tuple[int, int], x: Sequence[float], y: Sequence[float]) -> InequalityReport:
    """
    u = cos(k·x) for a lattice wave vector k, both sides in closed form

    |u(x+y) − u(x)| = |cos(k·(x+y)) − cos(k·x)|, ‖∇u‖² = |k|²V/2, ‖Δu‖² = |k|⁴V/2, V = (2L)².
    """
    k = np.asarray(mode, dtype=float) * math.pi / grid.box_half_length
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    volume = (2.0 * grid.box_half_length) ** 2
    k_sq = float(k @ k)
    lhs = abs(math.cos(k @ (x + y)) - math.cos(k @ x))
    rhs = log_holder_rhs(float(np.linalg.norm(y)), k_sq * volume / 2.0, k_sq ** 2 * volume / 2.0)
    return InequalityReport("log_holder_plane_wave", lhs, rhs, instance={"mode": list(mode)})


def log_holder_audit(u: Field, count: int, rng: np.random.Generator, y_range: Tuple[float, float] = (1e-4, 1.0),
                     x_radius: Optional[float] = None) -> List[InequalityReport]:
    """random (x, y) pairs with |y| log-uniform in y_range"""
    grid = u.grid
    x_radius = x_radius if x_radius is not None else 0.5 * grid.box_half_length
    norms = sobolev_norms(u)
    xs = rng.uniform(-x_radius, x_radius, size=(count, 2))
    lengths = np.exp(rng.uniform(math.log(y_range[0]), math.log(y_range[1]), size=count))
    angles = rng.uniform(0.0, 2.0 * math.pi, size=count)
    ys = np.stack([lengths * np.cos(angles), lengths * np.sin(angles)], axis=1)

    gradient_sq, laplacian_sq = norms
    values = interpolate(u, np.concatenate([xs + ys, xs]))
    reports = []
    for i in range(count):
        lhs = float(abs(values[i] - values[count + i]))
        rhs = log_holder_rhs(float(lengths[i]), gradient_sq, laplacian_sq)
        reports.append(InequalityReport("log_holder", lhs, rhs, instance={"x": xs[i].tolist(), "y": ys[i].tolist()}))
    worst = max(r.ratio for r in reports) if reports else 0.0
    logger.info(f"log-Hölder audit: {count} pairs, max ratio {worst:.4f}")
    return reports


# ---------------------------------------------------------------------------
# cutoff sequences

def bump(t):
    """b(t) = exp(−1/(t(1−t))) on (0, 1)"""
    t = np.asarray(t, dtype=float)
    inside = (t > 0.0) & (t < 1.0)
    safe = np.where(inside, t, 0.5)
    return np.where(inside, np.exp(-1.0 / (safe * (1.0 - safe))), 0.0)


def bump_derivative(t):
    t = np.asarray(t, dtype=float)
    inside = (t > 0.0) & (t < 1.0)
    safe = np.where(inside, t, 0.5)
    factor = (1.0 - 2.0 * safe) / (safe * (1.0 - safe)) ** 2
    return np.where(inside, bump(safe) * factor, 0.0)


@lru_cache(maxsize=None)
def bump_mass() -> float:
    return quad(lambda t: float(bump(t)), 0.0, 1.0, epsabs=0.0, epsrel=1e-13)[0]


def profile(s: float) -> float:
    """g(s) = 1 − ∫₀^s b / ∫₀¹ b: 1 for s ≤ 0, 0 for s ≥ 1"""
    if s <= 0.0:
        return 1.0
    if s >= 1.0:
        return 0.0
    return 1.0 - quad(lambda t: float(bump(t)), 0.0, s, epsabs=0.0, epsrel=1e-13)[0] / bump_mass()


def profile_derivative(s, order: int = 1):
    if order == 1:
        return -bump(s) / bump_mass()
    if order == 2:
        return -bump_derivative(s) / bump_mass()
    raise ValueError(f"profile derivative order must be 1 or 2, got {order}")


@lru_cache(maxsize=None)
def profile_integrals() -> Tuple[float, float]:
    """(∫₀¹ g′², ∫₀¹ g″²)"""
    first = quad(lambda s: float(profile_derivative(s, 1)) ** 2, 0.0, 1.0, epsabs=0.0, epsrel=1e-12, limit=200)[0]
    second = quad(lambda s: float(profile_derivative(s, 2)) ** 2, 0.0, 1.0, epsabs=0.0, epsrel=1e-12, limit=200)[0]
    return first, second


@dataclass
class CutoffSequence:
    """
    u_n ∈ C₀^∞(ℝ^d) with u_n = 1 on |x| ≤ 1/n

    d = 2: u_n(x) = g(log(n|x|)/log log n), zero for |x| ≥ (log n)/n.
    d = 3: u_n(x) = u(n x) with u(r) = g(r − 1), zero for |x| ≥ 2/n.
    """
    d: int
    n: float
    radii: np.ndarray
    values: np.ndarray

    @property
    def loglog(self) -> float:
        return math.log(math.log(self.n))

    @property
    def outer_radius(self) -> float:
        return math.log(self.n) / self.n if self.d == 2 else 2.0 / self.n

    def value(self, r: float) -> float:
        return _cutoff_value(self.d, self.n, r)


def _cutoff_value(d: int, n: float, r: float) -> float:
    if r <= 1.0 / n:
        return 1.0
    if d == 2:
        return profile(math.log(n * r) / math.log(math.log(n)))
    return profile(n * r - 1.0)


def cutoff_sequence(d: int, n: float, samples: int = 200) -> CutoffSequence:
    """
    Raises:
        PotentialError: d outside {2, 3} or n < 16
    """
    if d not in (2, 3):
        raise PotentialError("cutoff", f"cutoff sequences are built for d ∈ {{2, 3}}, got {d}")
    if n < 16:
        raise PotentialError("cutoff", f"cutoff index must be ≥ 16, got {n}")
    outer = math.log(n) / n if d == 2 else 2.0 / n
    if d == 2:
        radii = np.geomspace(0.5 / n, 2.0 * outer, samples)
    else:
        radii = np.linspace(0.0, 1.5 * outer, samples)
    values = np.array([_cutoff_value(d, n, r) for r in radii])
    return CutoffSequence(d, n, radii, values)


def _radial_derivatives(seq: CutoffSequence, r: float) -> Tuple[float, float]:
    """(u_n′(r), Δu_n(r)) for the radial profile"""
    d, n = seq.d, seq.n
    if d == 2:
        ell = seq.loglog
        s = math.log(n * r) / ell
        g1, g2 = float(profile_derivative(s, 1)), float(profile_derivative(s, 2))
        first = g1 / (r * ell)
        second = g2 / (r * ell) ** 2 - g1 / (r ** 2 * ell)
    else:
        s = n * r - 1.0
        first = n * float(profile_derivative(s, 1))
        second = n ** 2 * float(profile_derivative(s, 2))
    return first, second + (d - 1) / r * first


@dataclass
class CutoffIntegrals:
    """∫|∇u_n|², ∫|x|²|Δu_n|² 와 d = 2 예측값"""
    grad_sq: float
    weighted_lap_sq: float
    predicted_grad_sq: Optional[float] = None
    predicted_weighted_lap_sq: Optional[float] = None

    def to_dict(self) -> dict:
        return {"grad_sq": self.grad_sq, "weighted_lap_sq": self.weighted_lap_sq,
                "predicted_grad_sq": self.predicted_grad_sq,
                "predicted_weighted_lap_sq": self.predicted_weighted_lap_sq}


def cutoff_integrals(seq: CutoffSequence) -> CutoffIntegrals:
    """
    Radial quadrature on the transition shell; d = 2 integrates in log r

    d = 2 predictions: 2π∫g′²/log log n and 2π∫g″²/(log log n)³.
    """
    d, n = seq.d, seq.n
    area = 2.0 * math.pi if d == 2 else 4.0 * math.pi
    inner, outer = 1.0 / n, seq.outer_radius

    if d == 2:
        def grad(t):
            r = math.exp(t)
            return area * _radial_derivatives(seq, r)[0] ** 2 * r * r

        def lap(t):
            r = math.exp(t)
            return area * r ** 2 * _radial_derivatives(seq, r)[1] ** 2 * r * r

        lo, hi = math.log(inner), math.log(outer)
    else:
        def grad(r):
            return area * _radial_derivatives(seq, r)[0] ** 2 * r ** (d - 1)

        def lap(r):
            return area * r ** 2 * _radial_derivatives(seq, r)[1] ** 2 * r ** (d - 1)

        lo, hi = inner, outer

    grad_sq = quad(grad, lo, hi, epsabs=0.0, epsrel=1e-10, limit=400)[0]
    lap_sq = quad(lap, lo, hi, epsabs=0.0, epsrel=1e-10, limit=400)[0]
    result = CutoffIntegrals(grad_sq, lap_sq)
    if d == 2:
        first, second = profile_integrals()
        result.predicted_grad_sq = area * first / seq.loglog
        result.predicted_weighted_lap_sq = area * second / seq.loglog ** 3
    logger.debug(f"cutoff d={d}, n={n:g}: ∫|∇u|²={grad_sq:.6e}, ∫|x|²|Δu|²={lap_sq:.6e}")
    return result


# ---------------------------------------------------------------------------
# Vandermonde trace (d = 1)

def vandermonde_state(x: np.ndarray, sigma: float = 1.0) -> np.ndarray:
    """ψ(x) = exp(−|x|²/σ²)·Π_{i<j}(x_j − x_i); x has shape (..., N), complex allowed"""
    x = np.asarray(x)
    N = x.shape[-1]
    product = np.ones(x.shape[:-1], dtype=x.dtype)
    for i, j in itertools.combinations(range(N), 2):
        product = product * (x[..., j] - x[..., i])
    return np.exp(-np.sum(x ** 2, axis=-1) / sigma ** 2) * product


def vandermonde_trace(t: np.ndarray, rest: np.ndarray, sigma: float = 1.0) -> np.ndarray:
    """
    ∂ψ/∂x₁ on x₁ = x₂ = t, analytic: −exp(−|x|²/σ²)·Π over pairs other than (1,2)

    Args:
        t: shared coordinate, shape (P,)
        rest: x₃ … x_N, shape (P, N−2)
    """
    t = np.asarray(t, dtype=float)
    rest = np.asarray(rest, dtype=float).reshape(len(t), -1)
    x = np.concatenate([t[:, None], t[:, None], rest], axis=1)
    N = x.shape[1]
    product = np.ones(len(t))
    for i, j in itertools.combinations(range(N), 2):
        if (i, j) != (0, 1):
            product = product * (x[:, j] - x[:, i])
    return -np.exp(-np.sum(x ** 2, axis=1) / sigma ** 2) * product


def complex_step_derivative(t: np.ndarray, rest: np.ndarray, sigma: float = 1.0, step: float = 1e-20) -> np.ndarray:
    """∂ψ/∂x₁ at x₁ = x₂ = t by the complex-step rule Im ψ(x + i·h·e₁)/h"""
    t = np.asarray(t, dtype=float)
    rest = np.asarray(rest, dtype=float).reshape(len(t), -1)
    x = np.concatenate([t[:, None], t[:, None], rest], axis=1).astype(complex)
    x[:, 0] += 1j * step
    return np.imag(vandermonde_state(x, sigma)) / step


def _trace_norm_sq(N: int, sigma: float, nodes: int) -> float:
    """
    ∫ |∂₁ψ|²(t, t, x₃…) dt dx₃… by tensor Gauss–Hermite (exact for the polynomial×gaussian)

    t = σu/2 and x_k = σu_k/√2 turn the weight into exp(−|u|²).
    """
    u, w = np.polynomial.hermite.hermgauss(nodes)
    t_scale, x_scale = sigma / 2.0, sigma / math.sqrt(2.0)
    jacobian = t_scale * x_scale ** (N - 2)
    grids = np.meshgrid(*([u] * (N - 1)), indexing="ij")
    weights = np.ones_like(grids[0])
    for axis_weights in np.meshgrid(*([w] * (N - 1)), indexing="ij"):
        weights = weights * axis_weights
    t = t_scale * grids[0].reshape(-1)
    rest = np.stack([x_scale * g.reshape(-1) for g in grids[1:]], axis=1) if N > 2 else np.zeros((t.size, 0))
    x = np.concatenate([t[:, None], t[:, None], rest], axis=1)
    # Gauss–Hermite 가중치가 가우시안 인자를 흡수: 다항식 부분만 제곱
    polynomial = np.ones(t.size)
    for i, j in itertools.combinations(range(N), 2):
        if (i, j) != (0, 1):
            polynomial = polynomial * (x[:, j] - x[:, i])
    return jacobian * float(np.sum(weights.reshape(-1) * polynomial ** 2))


@dataclass
class VandermondeReport:
    """Vandermonde trace 검사 결과"""
    N: int
    sigma: float
    trace_norm: float
    quadrature_error: float
    pointwise_error: float
    psi_trace_max: float

    @property
    def positive(self) -> bool:
        return self.trace_norm > 10.0 * self.quadrature_error

    def to_dict(self) -> dict:
        return {"N": self.N, "sigma": self.sigma, "trace_norm": self.trace_norm,
                "quadrature_error": self.quadrature_error, "pointwise_error": self.pointwise_error,
                "psi_trace_max": self.psi_trace_max, "positive": self.positive}


def vandermonde_trace_check(N: int, sigma: float = 1.0, rng: Optional[np.random.Generator] = None,
                            points: int = 100, nodes: int = 20) -> VandermondeReport:
    """
    ‖∂ψ/∂x₁ restricted to x₁ = x₂‖ for ψ = exp(−|x|²/σ²)·Π_{i<j}(x_j − x_i), d = 1

    Also compares the analytic restriction against a complex-step derivative at random points and
    records max|ψ| on the hyperplane.
    """
    if N not in (2, 3, 4):
        raise ValueError(f"Vandermonde check covers N ∈ {{2, 3, 4}}, got {N}")
    rng = rng if rng is not None else np.random.default_rng(0)

    norm_sq = _trace_norm_sq(N, sigma, nodes)
    refined = _trace_norm_sq(N, sigma, nodes + 10)
    trace_norm = math.sqrt(refined)
    quadrature_error = abs(math.sqrt(norm_sq) - trace_norm)

    t = rng.uniform(-1.5 * sigma, 1.5 * sigma, size=points)
    rest = rng.uniform(-1.5 * sigma, 1.5 * sigma, size=(points, N - 2))
    analytic = vandermonde_trace(t, rest, sigma)
    numeric = complex_step_derivative(t, rest, sigma)
    pointwise = float(np.max(np.abs(analytic - numeric) / np.maximum(np.abs(analytic), 1e-300)))

    on_plane = np.concatenate([t[:, None], t[:, None], rest], axis=1)
    psi_max = float(np.max(np.abs(vandermonde_state(on_plane, sigma))))

    report = VandermondeReport(N, sigma, trace_norm, quadrature_error, pointwise, psi_max)
    logger.info(f"Vandermonde N={N}: trace norm {trace_norm:.10f} (quadrature error {quadrature_error:.1e}), "
                f"pointwise error {pointwise:.1e}")
    return report


# ---------------------------------------------------------------------------
# strong convergence

def collar(r, rho: float):
    """c(r) = 1 − g((r − ρ)/ρ): 0 on r ≤ ρ, 1 on r ≥ 2ρ"""
    r = np.asarray(r, dtype=float)
    flat = r.reshape(-1)
    values = np.array([1.0 - profile((value - rho) / rho) for value in flat])
    return values.reshape(r.shape)


def collared_state(grid: Grid, rho: float, base: Optional[Field] = None) -> Field:
    """
    Antisymmetric field vanishing within distance ρ of every coincidence plane x_i = x_j

    The collar depends only on pair distances, so it keeps the antisymmetry of the base field.
    """
    if not rho > 0:
        raise ValueError(f"collar width ρ must be positive, got {rho}")
    base = base if base is not None else slater_state(grid)
    values = np.array(base.values, dtype=float if base.is_real else complex)
    # 서로 다른 거리 값마다 한 번만 평가
    for i, j in itertools.combinations(range(grid.num_particles), 2):
        r = pair_distance(grid, i, j)
        unique, inverse = np.unique(r, return_inverse=True)
        values = values * collar(unique, rho)[inverse].reshape(r.shape)
    return Field(grid, values)


@dataclass
class StrongConvergenceRow:
    eps: float
    lam: float
    value: float

    def to_row(self) -> dict:
        return {"epsilon": self.eps, "lambda": self.lam, "value": self.value}


def strong_conv_check(phi: Field, spec: PotentialSpec, schedule: CouplingSchedule,
                      eps_values: Sequence[float]) -> List[StrongConvergenceRow]:
    """λ_ε·‖V_{ε,12} φ‖ along the sweep (pair of the first two particles)"""
    grid = phi.grid
    r = _pair_distance(grid, 0, 1)
    rows = []
    for eps in eps_values:
        lam = coupling_at(schedule, eps)
        potential = evaluate_scaled_radial(spec, eps, r, cap_singular=True)
        value = lam * Field(grid, potential * phi.values).norm()
        rows.append(StrongConvergenceRow(eps, lam, value))
        logger.debug(f"strong check ε={eps:g}: λ‖V_ε,12 φ‖ = {value:.6e}")
    return rows


def first_exact_zero(rows: Sequence[StrongConvergenceRow]) -> Optional[float]:
    """largest ε from which every later row is exactly zero"""
    found = None
    for row in reversed(list(rows)):
        if row.value != 0.0:
            break
        found = row.eps
    return found
