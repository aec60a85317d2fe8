"""
Odd-sector norms

‖v_ε(−Δ+z)^{-1}‖ 를 홀함수 공간에서 계산하고 ε 스윕, 격자 해상도 정책,
절단 분할(near/far) 노름을 제공
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from core.enums import SweepMethod
from core.exceptions import GridError
from solver.lattice import (Field, Grid, LinearMap, NormEstimate, build_laplacian, operator_norm,
                            parity_project_odd, resolvent_map)
from solver.potentials import PotentialSpec, block_radius, compute_moment, scaled_sqrt_weight
from solver.radial import DEFAULT_ORDER, DEFAULT_PANELS, odd_norm_radial, radial_nodes, split_norms_radial

# n → 2n 에서 허용되는 상대 변화
REFINEMENT_TOLERANCE = 0.02


@dataclass
class OddSectorOperator:
    """f ↦ v_ε · R_0(z) · P_odd f on a single d-dimensional block"""
    grid: Grid
    spec: PotentialSpec
    eps: float
    z: float = 1.0
    odd: bool = True
    weight_mask: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.grid.num_particles != 1:
            raise GridError("odd-sector operator acts on a single block")

    def weights(self) -> np.ndarray:
        v = np.broadcast_to(scaled_sqrt_weight(self.spec, self.eps, self.grid), self.grid.shape)
        return v if self.weight_mask is None else v * self.weight_mask

    def as_map(self) -> LinearMap:
        grid = self.grid
        v = self.weights()
        resolvent = resolvent_map(build_laplacian(grid, 1.0), self.z)
        odd = self.odd

        def apply(f: Field) -> Field:
            if odd:
                f = parity_project_odd(f, 0)
            return Field(grid, v * resolvent.apply(f).values)

        def adjoint_apply(g: Field) -> Field:
            out = resolvent.apply(Field(grid, v * g.values))
            return parity_project_odd(out, 0) if odd else out

        label = f"v_ε R0({self.z:g}){' P_odd' if odd else ''}"
        return LinearMap(apply, adjoint_apply, label, grid)


def odd_norm_estimate(spec: PotentialSpec, eps: float, z: float, grid: Grid, tol: float = 1e-6,
                      rng: Optional[np.random.Generator] = None, odd: bool = True,
                      max_iters: int = 5000) -> NormEstimate:
    if not z > 0:
        raise GridError(f"odd-sector norm needs z > 0, got {z}")
    if spec.is_zero:
        return NormEstimate(0.0, True, 0)
    operator = OddSectorOperator(grid, spec, eps, z, odd).as_map()
    project = (lambda f: parity_project_odd(f, 0)) if odd else None
    return operator_norm(operator, tol=tol, max_iters=max_iters, rng=rng, project=project)


def odd_norm(spec: PotentialSpec, eps: float, z: float, grid: Grid, tol: float = 1e-6,
             rng: Optional[np.random.Generator] = None, max_iters: int = 5000) -> float:
    """
    ‖v_ε(−Δ+z)^{-1}‖_odd by power iteration on the grid

    Args:
        spec: pair potential
        eps: scale ε
        z: spectral parameter (> 0)
        grid: single-block lattice with a reflection-compatible offset
        tol: relative tolerance of the power iteration
        rng: random generator
        max_iters: power-iteration cap

    Returns:
        largest singular value of v_ε R_0(z) P_odd
    """
    return odd_norm_estimate(spec, eps, z, grid, tol, rng, max_iters=max_iters).value


# ---------------------------------------------------------------------------
# grid policy

def is_resolved(spec: PotentialSpec, eps: float, grid: Grid, nodes_per_width: int = 8) -> bool:
    """ε·(potential width)/h ≥ nodes_per_width"""
    return eps * spec.width_scale / grid.spacing >= nodes_per_width


def grid_for_eps(spec: PotentialSpec, eps: float, base: Grid, nodes_per_width: int = 8,
                 max_points: int = 4096, max_nodes: Optional[int] = None) -> Tuple[Grid, bool]:
    """
    Box fixed, n doubled until the scaled potential is resolved or a cap is hit

    Returns:
        (grid, resolved)
    """
    n = base.points_per_axis
    needed = nodes_per_width * 2.0 * base.box_half_length / (eps * spec.width_scale)
    while n < needed:
        n_next = 2 * n
        if n_next > max_points or (max_nodes is not None and n_next ** base.total_dim > max_nodes):
            break
        n = n_next
    grid = base.with_points(n)
    resolved = is_resolved(spec, eps, grid, nodes_per_width)
    if not resolved:
        logger.warning(f"ε={eps:g} under-resolved on n={n}, L={base.box_half_length:g} "
                       f"(ε·w/h = {eps * spec.width_scale / grid.spacing:.2f} < {nodes_per_width})")
    return grid, resolved


# ---------------------------------------------------------------------------
# sweeps

@dataclass
class NormSweepResult:
    """ε 스윕 결과 테이블"""
    z: float
    d: int
    method: str
    eps_values: List[float] = field(default_factory=list)
    norms: List[float] = field(default_factory=list)
    resolved: List[bool] = field(default_factory=list)
    grid_n: List[Optional[int]] = field(default_factory=list)
    grid_L: Optional[float] = None
    truncation_radius: Optional[float] = None
    near: List[Optional[float]] = field(default_factory=list)
    far: List[Optional[float]] = field(default_factory=list)
    refinement_change: List[Optional[float]] = field(default_factory=list)

    def add_row(self, row: dict):
        self.eps_values.append(row["epsilon"])
        self.norms.append(row["norm"])
        self.resolved.append(row["resolved_flag"])
        self.grid_n.append(row["grid_n"])
        self.near.append(row.get("near_k"))
        self.far.append(row.get("far_k"))
        self.refinement_change.append(row.get("refinement_change"))

    def rows(self) -> List[dict]:
        return [{"epsilon": e, "z": self.z, "norm": v, "near_k": nk, "far_k": fk, "grid_n": n,
                 "resolved_flag": ok}
                for e, v, nk, fk, n, ok in zip(self.eps_values, self.norms, self.near, self.far, self.grid_n,
                                               self.resolved)]

    def resolved_data(self) -> Tuple[np.ndarray, np.ndarray]:
        mask = np.asarray(self.resolved, dtype=bool)
        return np.asarray(self.eps_values)[mask], np.asarray(self.norms)[mask]


def compute_sweep_row(spec: PotentialSpec, eps: float, z: float, d: int,
                      method: SweepMethod = SweepMethod.RADIAL, base_grid: Optional[Grid] = None,
                      nodes_per_width: int = 8, max_points: int = 4096, truncation_radius: Optional[float] = None,
                      tol: float = 1e-6, seed: Optional[int] = None, check_refinement: bool = False,
                      max_iters: int = 5000) -> dict:
    """
    One sweep row; pure given its arguments so rows can run in separate workers

    Radial rows are always resolved (the quadrature scales with ε). Grid rows follow the box-fixed
    policy of grid_for_eps, and with check_refinement the value is recomputed at 2n (2× panels
    for radial rows) and the row is flagged unstable when it moves by more than 2%.
    """
    rng = np.random.default_rng(seed)
    row = {"epsilon": eps, "z": z, "near_k": None, "far_k": None, "grid_n": None, "refinement_change": None}

    if method is SweepMethod.RADIAL:
        value = odd_norm_radial(spec, eps, z, d)
        resolved = True
        if check_refinement and not spec.is_zero:
            finer = odd_norm_radial(spec, eps, z, d,
                                    quadrature=radial_nodes(eps * spec.effective_radius, 2 * DEFAULT_PANELS,
                                                            DEFAULT_ORDER))
            row["refinement_change"] = abs(finer - value) / max(finer, 1e-300)
    else:
        if base_grid is None:
            raise GridError("grid sweep needs a base grid")
        grid, resolved = grid_for_eps(spec, eps, base_grid, nodes_per_width, max_points)
        value = odd_norm(spec, eps, z, grid, tol, rng, max_iters)
        row["grid_n"] = grid.points_per_axis
        if check_refinement and not spec.is_zero and 2 * grid.points_per_axis <= max_points:
            finer = odd_norm(spec, eps, z, grid.with_points(2 * grid.points_per_axis), tol, rng, max_iters)
            row["refinement_change"] = abs(finer - value) / max(finer, 1e-300)

    if row["refinement_change"] is not None and row["refinement_change"] > REFINEMENT_TOLERANCE:
        logger.warning(f"ε={eps:g}: value moved {100 * row['refinement_change']:.1f}% under refinement")
        resolved = False

    if truncation_radius is not None:
        row["near_k"], row["far_k"] = truncated_split_norms(spec, eps, z, truncation_radius, d, method,
                                                            base_grid if method is SweepMethod.GRID else None,
                                                            tol, rng)
    row["norm"] = value
    row["resolved_flag"] = resolved
    logger.debug(f"odd-norm row d={d} ε={eps:.4g} z={z:g}: {value:.8e} (resolved={resolved})")
    return row


def sweep_odd_norm(spec: PotentialSpec, eps_values: Sequence[float], z: float, d: int,
                   method: SweepMethod = SweepMethod.RADIAL, base_grid: Optional[Grid] = None,
                   nodes_per_width: int = 8, max_points: int = 4096,
                   truncation_radius: Optional[float] = None, tol: float = 1e-6, seed: int = 0,
                   check_refinement: bool = False) -> NormSweepResult:
    """
    odd_norm over a decreasing ε list

    Raises:
        GridError: ε list not strictly decreasing
    """
    eps_values = list(eps_values)
    if any(b >= a for a, b in zip(eps_values, eps_values[1:])):
        raise GridError("ε list must be strictly decreasing")
    result = NormSweepResult(z, d, method.value, grid_L=base_grid.box_half_length if base_grid else None,
                             truncation_radius=truncation_radius)
    seeds = np.random.SeedSequence(seed).spawn(len(eps_values))
    for eps, child in zip(eps_values, seeds):
        result.add_row(compute_sweep_row(spec, eps, z, d, method, base_grid, nodes_per_width, max_points,
                                         truncation_radius, tol, int(child.generate_state(1)[0]), check_refinement))
    logger.info(f"odd-norm sweep d={d}, z={z:g}: {sum(result.resolved)}/{len(eps_values)} rows resolved")
    return result


def truncated_split_norms(spec: PotentialSpec, eps: float, z: float, k: float, d: int,
                          method: SweepMethod = SweepMethod.RADIAL, grid: Optional[Grid] = None,
                          tol: float = 1e-6, rng: Optional[np.random.Generator] = None) -> Tuple[float, float]:
    """
    (‖(vχ_k)_ε R_0‖_odd, ‖(v − vχ_k)_ε R_0‖)

    (vχ_k)_ε is supported in |x| ≤ εk. The far part vanishes exactly once k passes the support of V.
    """
    if not k > 0:
        raise GridError(f"truncation radius must be positive, got {k}")
    if spec.support_radius is not None and k >= spec.support_radius:
        near = odd_norm_radial(spec, eps, z, d) if method is SweepMethod.RADIAL or grid is None \
            else odd_norm(spec, eps, z, grid, tol, rng)
        return near, 0.0
    if method is SweepMethod.RADIAL or grid is None:
        return split_norms_radial(spec, eps, z, d, k)

    inside = np.broadcast_to(block_radius(grid, 0), grid.shape) <= eps * k
    near_op = OddSectorOperator(grid, spec, eps, z, True, inside.astype(float)).as_map()
    far_op = OddSectorOperator(grid, spec, eps, z, False, (~inside).astype(float)).as_map()
    near = operator_norm(near_op, tol=tol, rng=rng, project=lambda f: parity_project_odd(f, 0)).value
    far = operator_norm(far_op, tol=tol, rng=rng).value
    return near, far


def empirical_holder_constants(result: NormSweepResult, spec: PotentialSpec, s_values: Sequence[float],
                               eps_max: float = 0.1) -> dict:
    """
    max over resolved ε ≤ eps_max of norm²/(ε^{2s}·∫|V||r|^{2s}) for each s

    The smallest constant for which every data point lies under the line of slope 2s.
    """
    eps, norms = result.resolved_data()
    mask = eps <= eps_max
    constants = {}
    for s in s_values:
        moment = compute_moment(spec, s, result.d)
        if not np.any(mask) or moment == 0.0:
            constants[s] = math.nan
            continue
        constants[s] = float(np.max(norms[mask] ** 2 / (eps[mask] ** (2 * s) * moment)))
    return constants
