"""
Pair potentials

포텐셜 카탈로그, ε 스케일링 V_ε(r) = ε^{-2}V(r/ε), 상수/모멘트(C_V, ∫|V||r|^{2s}),
결합 상수 스케줄과 Hardy 하한 λ_max ≥ d²/(C_V·N)
"""

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Optional, Sequence

import numpy as np
from loguru import logger
from scipy.integrate import quad, IntegrationWarning
from scipy.optimize import minimize_scalar

from core.enums import PotentialKind, ScheduleKind, SignClass
from core.exceptions import (DivergenceError, IntegrabilityError, PotentialError, ScheduleError,
                             SingularEvaluationError)

# 단위 구면 넓이 |S^{d-1}|
SPHERE_AREA = {1: 2.0, 2: 2.0 * math.pi, 3: 4.0 * math.pi}

# 가우시안 꼬리를 잘라내는 반지름 (w 단위, exp(-t²) < 1e-16)
GAUSSIAN_TAIL = math.sqrt(math.log(1e16))


@dataclass(frozen=True)
class PotentialSpec:
    """
    Radial, even pair potential

    gaussian:          A·exp(−|r|²/w²)
    smooth_bump:       A·exp(1 − 1/(1 − |r|²/R²)) on |r| < R
    square_well:       A on |r| ≤ R
    coulombic_cutoff:  A·(2/|r| − 1) on |r| ≤ 1
    table:             linear interpolation of (radius, value) rows, 0 past the last radius
    """
    kind: PotentialKind = PotentialKind.GAUSSIAN
    amplitude: float = 1.0
    width: float = 1.0
    radius: float = 1.0
    table_radii: Optional[tuple] = None
    table_values: Optional[tuple] = None
    v_cap: float = 1.0e6

    def __post_init__(self):
        if self.width <= 0 or self.radius <= 0:
            raise PotentialError(self.kind.value, "width and radius must be positive")
        if self.kind is PotentialKind.TABLE:
            if not self.table_radii or not self.table_values or len(self.table_radii) != len(self.table_values):
                raise PotentialError("table", "table potential needs equally long radius/value columns")
            radii = np.asarray(self.table_radii)
            if np.any(radii < 0) or np.any(np.diff(radii) <= 0):
                raise PotentialError("table", "table radii must be nonnegative and strictly increasing")

    @classmethod
    def from_config(cls, potential_config) -> 'PotentialSpec':
        kind = PotentialKind(potential_config.kind)
        radii = values = None
        if kind is PotentialKind.TABLE:
            radii, values = load_table(potential_config.table_path, potential_config.v_cap)
        return cls(kind=kind, amplitude=potential_config.amplitude, width=potential_config.width,
                   radius=potential_config.radius, table_radii=radii, table_values=values,
                   v_cap=potential_config.v_cap)

    def scaled_by(self, factor: float) -> 'PotentialSpec':
        """V → factor·V"""
        if self.kind is PotentialKind.TABLE:
            return PotentialSpec(self.kind, self.amplitude, self.width, self.radius, self.table_radii,
                                 tuple(factor * v for v in self.table_values), self.v_cap)
        return PotentialSpec(self.kind, factor * self.amplitude, self.width, self.radius, None, None, self.v_cap)

    @property
    def support_radius(self) -> Optional[float]:
        """compact support radius, None for gaussian"""
        if self.kind is PotentialKind.GAUSSIAN:
            return None
        if self.kind is PotentialKind.COULOMBIC_CUTOFF:
            return 1.0
        if self.kind is PotentialKind.TABLE:
            return float(self.table_radii[-1])
        return self.radius

    @property
    def effective_radius(self) -> float:
        """radius beyond which |V| is negligible (exactly zero for compact kinds)"""
        support = self.support_radius
        return support if support is not None else GAUSSIAN_TAIL * self.width

    @property
    def width_scale(self) -> float:
        """length scale used by the ε-resolution policy"""
        if self.kind is PotentialKind.GAUSSIAN:
            return self.width
        return self.support_radius

    @property
    def is_zero(self) -> bool:
        if self.kind is PotentialKind.TABLE:
            return not any(self.table_values)
        return self.amplitude == 0.0

    @property
    def sign_class(self) -> SignClass:
        if self.kind is PotentialKind.TABLE:
            return SignClass.classify(self.table_values)
        return SignClass.NONPOSITIVE if self.amplitude < 0 else SignClass.NONNEGATIVE

    def describe(self) -> dict:
        return {"kind": self.kind.value, "amplitude": self.amplitude, "width": self.width,
                "radius": self.radius, "sign_class": self.sign_class.value}


def load_table(path: str, v_cap: float = 1.0e6):
    """
    Two-column text table (radius, value); '#' comments allowed

    Returns:
        (radii, values) tuples with values clipped to ±v_cap
    """
    table_path = Path(path)
    if not table_path.exists():
        raise PotentialError("table", f"table file not found: {table_path}")
    data = np.loadtxt(table_path, comments="#", ndmin=2)
    if data.shape[1] != 2:
        raise PotentialError("table", f"expected two columns, found {data.shape[1]}")
    values = np.clip(data[:, 1], -v_cap, v_cap)
    if np.any(np.abs(data[:, 1]) > v_cap):
        logger.warning(f"table {table_path}: values beyond V_cap={v_cap:g} were clipped")
    logger.debug(f"Loaded potential table {table_path} with {len(data)} rows")
    return tuple(data[:, 0].tolist()), tuple(values.tolist())


def evaluate_radial(spec: PotentialSpec, t, cap_singular: bool = False) -> np.ndarray:
    """
    V as a function of |r| (vectorized)

    Args:
        spec: potential
        t: radii ≥ 0
        cap_singular: replace the coulombic singular point r = 0 by V_cap instead of raising
    """
    t = np.abs(np.asarray(t, dtype=float))
    kind = spec.kind
    A = spec.amplitude

    if kind is PotentialKind.GAUSSIAN:
        return A * np.exp(-(t / spec.width) ** 2)

    if kind is PotentialKind.SQUARE_WELL:
        return np.where(t <= spec.radius, A, 0.0)

    if kind is PotentialKind.SMOOTH_BUMP:
        u = t / spec.radius
        inside = u < 1.0
        safe = np.where(inside, u, 0.0)
        return np.where(inside, A * np.exp(1.0 - 1.0 / (1.0 - safe ** 2)), 0.0)

    if kind is PotentialKind.COULOMBIC_CUTOFF:
        at_origin = t == 0.0
        if np.any(at_origin) and not cap_singular:
            raise SingularEvaluationError(kind.value, "coulombic_cutoff evaluated at r = 0")
        safe = np.where(at_origin, 1.0, t)
        values = np.where(t <= 1.0, A * (2.0 / safe - 1.0), 0.0)
        return np.where(at_origin, math.copysign(spec.v_cap, A), values)

    radii = np.asarray(spec.table_radii)
    values = np.asarray(spec.table_values)
    return np.where(t <= radii[-1], np.interp(t, radii, values), 0.0)


def evaluate(spec: PotentialSpec, r) -> float:
    """
    V(r) at a point r ∈ ℝ^d

    Raises:
        SingularEvaluationError: coulombic_cutoff at r = 0
    """
    radius = float(np.linalg.norm(np.atleast_1d(np.asarray(r, dtype=float))))
    return float(evaluate_radial(spec, radius))


def evaluate_scaled(spec: PotentialSpec, eps: float, r) -> float:
    """V_ε(r) = ε^{-2}·V(r/ε)"""
    if not eps > 0:
        raise PotentialError(spec.kind.value, f"ε must be positive, got {eps}")
    return evaluate(spec, np.asarray(r, dtype=float) / eps) / eps ** 2


def evaluate_scaled_radial(spec: PotentialSpec, eps: float, t, cap_singular: bool = False) -> np.ndarray:
    if not eps > 0:
        raise PotentialError(spec.kind.value, f"ε must be positive, got {eps}")
    return evaluate_radial(spec, np.asarray(t) / eps, cap_singular=cap_singular) / eps ** 2


def block_radius(grid, block: int = 0) -> np.ndarray:
    """|x| of one particle block, broadcast over the grid"""
    coords = grid.block_coordinates(block)
    return np.sqrt(sum(c ** 2 for c in coords))


def sample_scaled(spec: PotentialSpec, eps: float, grid, block: int = 0, cap_singular: bool = True) -> np.ndarray:
    """V_ε on the nodes of one block (broadcast array)"""
    return evaluate_scaled_radial(spec, eps, block_radius(grid, block), cap_singular=cap_singular)


def scaled_sqrt_weight(spec: PotentialSpec, eps: float, grid, block: int = 0) -> np.ndarray:
    """v_ε(x) = ε^{−d/2}|V(x/ε)|^{1/2} on one block"""
    d = grid.dim_per_particle
    values = evaluate_radial(spec, block_radius(grid, block) / eps, cap_singular=True)
    return eps ** (-d / 2.0) * np.sqrt(np.abs(values))


# ---------------------------------------------------------------------------
# constants and moments

def _radial_integral(spec: PotentialSpec, integrand, d: int, label: str, split_at_one: bool = False) -> float:
    """S_{d−1} ∫_0^∞ integrand(t) t^{d−1} dt with a doubled-resolution consistency check"""
    if spec.is_zero:
        return 0.0
    upper = spec.effective_radius
    breakpoints = []
    if split_at_one and upper > 1.0:
        breakpoints.append(1.0)
    if spec.kind is PotentialKind.TABLE:
        breakpoints.extend(t for t in spec.table_radii if 0 < t < upper)

    def f(t):
        return integrand(t) * t ** (d - 1)

    def integrate(limit: int) -> float:
        edges = [0.0] + sorted(set(breakpoints)) + [upper]
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            if b <= a:
                continue
            with warnings.catch_warnings():
                warnings.simplefilter("error", IntegrationWarning)
                try:
                    value, error = quad(f, a, b, limit=limit, epsabs=0.0, epsrel=1e-10)
                except IntegrationWarning as e:
                    raise IntegrabilityError(spec.kind.value, f"{label}: quadrature did not converge ({e})")
            if not np.isfinite(value):
                raise IntegrabilityError(spec.kind.value, f"{label}: non-finite quadrature value")
            total += value
        return SPHERE_AREA[d] * total

    coarse = integrate(100)
    fine = integrate(400)
    if abs(fine - coarse) > 1e-6 * max(abs(fine), 1e-300):
        raise IntegrabilityError(spec.kind.value,
                                 f"{label}: refinement changed the value from {coarse:.10e} to {fine:.10e}")
    return fine


def compute_moment(spec: PotentialSpec, s: float, d: int) -> float:
    """
    ∫|V(r)||r|^{2s} dr over ℝ^d

    Raises:
        IntegrabilityError: integrand not integrable (e.g. coulombic_cutoff in d=1 at s=0)
    """
    if s < 0:
        raise PotentialError(spec.kind.value, f"moment order must be nonnegative, got {s}")
    return _radial_integral(spec, lambda t: abs(float(evaluate_radial(spec, t))) * t ** (2.0 * s),
                            d, f"moment(s={s:g})")


def compute_log_moment(spec: PotentialSpec, d: int = 2) -> float:
    """∫|V(r)||r|²|log|r|| dr"""
    return _radial_integral(spec, lambda t: abs(float(evaluate_radial(spec, t))) * t ** 2 * abs(math.log(t)),
                            d, "log_moment", split_at_one=True)


def compute_l2_norm_sq(spec: PotentialSpec, d: int) -> float:
    return _radial_integral(spec, lambda t: float(evaluate_radial(spec, t)) ** 2, d, "l2_norm_sq")


def compute_integral(spec: PotentialSpec, d: int, eps: float = 1.0) -> float:
    """∫V_ε over ℝ^d by quadrature of the scaled function"""
    upper = eps * spec.effective_radius
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            value, _ = quad(lambda t: float(evaluate_scaled_radial(spec, eps, t)) * t ** (d - 1),
                            0.0, upper, limit=400, epsabs=0.0, epsrel=1e-10)
        except IntegrationWarning as e:
            raise IntegrabilityError(spec.kind.value, f"∫V_ε: quadrature did not converge ({e})")
    return SPHERE_AREA[d] * value


def compute_CV(spec: PotentialSpec, absolute: bool = False) -> float:
    """
    C_V = sup_r V(r)|r|² (positive part; |V| when absolute)

    Coarse scan over |r| followed by bounded Brent/golden refinement around the best scan point.

    Raises:
        DivergenceError: value still growing at a scan boundary (C_V = ∞)
    """
    def h(t):
        value = float(evaluate_radial(spec, t, cap_singular=True))
        value = abs(value) if absolute else max(value, 0.0)
        return value * t * t

    if spec.is_zero:
        return 0.0
    upper = 2.0 * spec.effective_radius if spec.support_radius is not None else 50.0 * spec.width
    scan = np.unique(np.concatenate([
        np.geomspace(1e-8, 1e-3, 200) * upper,
        np.linspace(0.0, upper, 4001)[1:],
        [spec.support_radius] if spec.support_radius is not None else [],
        np.asarray(spec.table_radii) if spec.kind is PotentialKind.TABLE else [],
    ]))
    scan = scan[scan > 0]
    values = np.array([h(t) for t in scan])
    i = int(np.argmax(values))
    if values[i] <= 0.0:
        return 0.0

    if i == 0 and values[0] > values[1]:
        raise DivergenceError(spec.kind.value, "V·|r|² still growing as r → 0: C_V = ∞")
    if i == len(scan) - 1:
        raise DivergenceError(spec.kind.value, "V·|r|² still growing at the scan boundary: C_V = ∞")

    lo, hi = scan[max(i - 1, 0)], scan[min(i + 1, len(scan) - 1)]
    refined = minimize_scalar(lambda t: -h(t), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12 * max(hi, 1.0)})
    best = max(values[i], -float(refined.fun))
    if spec.support_radius is not None:
        best = max(best, h(spec.support_radius))
    logger.debug(f"C_V({spec.kind.value}, absolute={absolute}) = {best:.10e}")
    return best


@dataclass
class PotentialMoments:
    """Constants entering the rate bounds"""
    l1_norm: float
    l2_norm_sq: float
    C_V: float
    moments: Dict[float, float] = field(default_factory=dict)
    log_moment: Optional[float] = None

    def moment(self, s: float) -> float:
        return self.moments[s]

    def to_dict(self) -> dict:
        return {
            "l1_norm": self.l1_norm,
            "l2_norm_sq": self.l2_norm_sq,
            "C_V": self.C_V,
            "moments": {str(k): v for k, v in self.moments.items()},
            "log_moment": self.log_moment,
        }


def compute_moments(spec: PotentialSpec, d: int, s_values: Sequence[float] = (0.0, 0.5, 1.0)) -> PotentialMoments:
    moments = {}
    for s in s_values:
        try:
            moments[s] = compute_moment(spec, s, d)
        except IntegrabilityError as e:
            logger.warning(f"moment s={s:g} not finite for {spec.kind.value} in d={d}: {e.message}")
            moments[s] = math.inf
    l1 = moments.get(0.0)
    if l1 is None:
        l1 = compute_moment(spec, 0.0, d)
    try:
        l2 = compute_l2_norm_sq(spec, d)
    except IntegrabilityError:
        l2 = math.inf
    return PotentialMoments(
        l1_norm=l1,
        l2_norm_sq=l2,
        C_V=compute_CV(spec),
        moments=moments,
        log_moment=compute_log_moment(spec, d) if d == 2 else None,
    )


def lambda_max_lower_bound(C_V: float, N: int, d: int) -> float:
    """Hardy bound λ_max ≥ d²/(C_V·N)"""
    if not C_V > 0:
        raise PotentialError("lambda_max", f"C_V must be positive, got {C_V}")
    if N < 2:
        raise PotentialError("lambda_max", f"need at least two particles, got N={N}")
    return d * d / (C_V * N)


# ---------------------------------------------------------------------------
# coupling schedules

@dataclass(frozen=True)
class CouplingSchedule:
    """ε ↦ λ_ε"""
    kind: ScheduleKind = ScheduleKind.LINEAR
    g: float = 1.0
    a: float = 0.0
    c: float = 1.0
    table_eps: Optional[tuple] = None
    table_lambda: Optional[tuple] = None

    @classmethod
    def from_config(cls, coupling_config) -> 'CouplingSchedule':
        kind = ScheduleKind(coupling_config.kind)
        eps = lam = None
        if kind is ScheduleKind.TABLE:
            data = np.loadtxt(coupling_config.table_path, comments="#", ndmin=2)
            order = np.argsort(data[:, 0])
            eps, lam = tuple(data[order, 0].tolist()), tuple(data[order, 1].tolist())
        return cls(kind=kind, g=coupling_config.g, a=coupling_config.a, c=coupling_config.c,
                   table_eps=eps, table_lambda=lam)

    def describe(self) -> dict:
        return {"kind": self.kind.value, "g": self.g, "a": self.a, "c": self.c}


def coupling_at(schedule: CouplingSchedule, eps: float) -> float:
    """
    λ_ε for the schedule

    Raises:
        ScheduleError: ε outside (0,1) for log_reciprocal, or a nonpositive value
    """
    if not eps > 0:
        raise ScheduleError(f"ε must be positive, got {eps}")
    kind = schedule.kind
    if kind is ScheduleKind.LINEAR:
        value = schedule.g * eps
    elif kind is ScheduleKind.CONSTANT:
        value = schedule.c
    elif kind is ScheduleKind.LOG_RECIPROCAL:
        if not eps < 1:
            raise ScheduleError(f"log_reciprocal schedule needs ε ∈ (0, 1), got {eps}")
        inverse = abs(math.log(eps)) / (4.0 * math.pi) + schedule.a
        if inverse <= 0:
            raise ScheduleError(f"log_reciprocal schedule: λ_ε^(-1) = {inverse:.4g} ≤ 0 at ε={eps:g}")
        value = 1.0 / inverse
    else:
        value = float(np.interp(math.log(eps), np.log(schedule.table_eps), schedule.table_lambda))

    if not value > 0:
        raise ScheduleError(f"coupling λ_ε = {value:.4g} is not positive at ε={eps:g}")
    return value


def hardy_condition(schedule: CouplingSchedule, eps_values: Iterable[float], C_V: float, N: int, d: int) -> bool:
    """limsup_ε λ_ε over the sweep below the Hardy lower bound of λ_max"""
    eps_values = list(eps_values)
    if not eps_values or C_V <= 0:
        return True
    limsup = max(coupling_at(schedule, eps) for eps in eps_values)
    return limsup < lambda_max_lower_bound(C_V, N, d)
