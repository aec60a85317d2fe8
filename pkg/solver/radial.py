"""
Radial-channel Nyström kernels

For a radial potential every operator built from −Δ and multiplication by V_ε commutes with
rotations, so it splits into angular channels. In channel ℓ (ν = ℓ + (d−2)/2) acting on
u(r) = r^{(d−1)/2}ψ(r) in L²((0,∞), dr), the free resolvent (μ(−Δ)+z)^{-1} has kernel

    G(r, r') = (1/μ)·√(rr')·I_ν(k r_<)·K_ν(k r_>),    k = √(z/μ)

and at z = 0 (ν > 0) G = (1/μ)·√(rr')·(r_</r_>)^ν/(2ν). The square (μ(−Δ)+z)^{-2} is −∂_z G.
The odd sector is the sum of the odd channels (d = 1: the single odd channel ν = 1/2).

Nyström discretization on composite Gauss–Legendre nodes covering the support of v_ε keeps the
resolution independent of ε.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np
from loguru import logger
from scipy.linalg import eigh, eigvalsh
from scipy.special import ive, kve

from core.enums import SignClass
from core.exceptions import GridError, ThresholdViolationError
from solver.potentials import PotentialSpec, evaluate_radial

DEFAULT_PANELS = 48
DEFAULT_ORDER = 10


@dataclass(frozen=True)
class RadialQuadrature:
    """composite Gauss–Legendre nodes on [0, r_max], panels graded quadratically toward 0"""
    nodes: np.ndarray
    weights: np.ndarray
    r_max: float

    @property
    def size(self) -> int:
        return len(self.nodes)


@lru_cache(maxsize=8)
def _legendre(order: int) -> Tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def radial_nodes(r_max: float, panels: int = DEFAULT_PANELS, order: int = DEFAULT_ORDER,
                 r_min: float = 0.0) -> RadialQuadrature:
    if not r_max > r_min >= 0:
        raise GridError(f"radial quadrature needs 0 ≤ r_min < r_max, got [{r_min}, {r_max}]")
    x, w = _legendre(order)
    edges = r_min + (r_max - r_min) * np.linspace(0.0, 1.0, panels + 1) ** 2
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        half = 0.5 * (b - a)
        nodes.append(a + half * (x + 1.0))
        weights.append(half * w)
    return RadialQuadrature(np.concatenate(nodes), np.concatenate(weights), r_max)


def odd_channels(d: int, ell_max: int = 5) -> List[int]:
    """odd angular channels (d = 1 has only ℓ = 1)"""
    if d == 1:
        return [1]
    return list(range(1, ell_max + 1, 2))


def channel_order(d: int, ell: int) -> float:
    return ell + (d - 2) / 2.0


def channel_kernel(d: int, ell: int, z: float, r: np.ndarray, mass_factor: float = 1.0,
                   power: int = 1) -> np.ndarray:
    """
    Kernel matrix of (μ(−Δ)+z)^{-power} in channel ℓ at node pairs (r_i, r_j)

    Args:
        d: dimension
        ell: channel (d = 1: 0 even, 1 odd)
        z: spectral parameter (z = 0 allowed for power 1 and ν > 0)
        r: radial nodes
        mass_factor: μ
        power: 1 or 2
    """
    nu = channel_order(d, ell)
    r_lo = np.minimum.outer(r, r)
    r_hi = np.maximum.outer(r, r)
    root = np.sqrt(np.outer(r, r))
    mu = mass_factor

    if z == 0.0:
        if power != 1 or nu <= 0:
            raise ThresholdViolationError(f"z = 0 kernel undefined for power={power}, ν={nu:g}")
        return root * (r_lo / r_hi) ** nu / (2.0 * nu) / mu
    if z < 0:
        raise ThresholdViolationError(f"channel kernel needs z ≥ 0, got {z}")

    k = math.sqrt(z / mu)
    a, b = k * r_lo, k * r_hi
    damping = np.exp(a - b)
    i_nu, k_nu = ive(nu, a), kve(nu, b)
    if power == 1:
        return root * i_nu * k_nu * damping / mu

    # −∂_z via d/dk, dk/dz = 1/(2μk)
    di = 0.5 * (ive(nu - 1.0, a) + ive(nu + 1.0, a))
    dk = -0.5 * (kve(nu - 1.0, b) + kve(nu + 1.0, b))
    dF = (r_lo * di * k_nu + r_hi * i_nu * dk) * damping
    return -root * dF / (2.0 * mu * mu * k)


def radial_weight(spec: PotentialSpec, eps: float, d: int, r: np.ndarray) -> np.ndarray:
    """v_ε(r) = ε^{−d/2}|V(r/ε)|^{1/2}"""
    return eps ** (-d / 2.0) * np.sqrt(np.abs(evaluate_radial(spec, r / eps, cap_singular=True)))


def radial_sign(spec: PotentialSpec, eps: float, r: np.ndarray) -> np.ndarray:
    """J = sgn V_ε at the nodes (0 where V vanishes counts as +1)"""
    values = evaluate_radial(spec, r / eps, cap_singular=True)
    return np.where(values < 0, -1.0, 1.0)


def default_quadrature(spec: PotentialSpec, eps: float, panels: int = DEFAULT_PANELS,
                       order: int = DEFAULT_ORDER) -> RadialQuadrature:
    return radial_nodes(eps * spec.effective_radius, panels, order)


def sandwich(spec: PotentialSpec, eps: float, d: int, ell: int, z: float, mass_factor: float = 1.0,
             power: int = 1, quadrature: Optional[RadialQuadrature] = None) -> np.ndarray:
    """Symmetric Nyström matrix of v_ε (μ(−Δ)+z)^{-power} v_ε in channel ℓ"""
    quadrature = quadrature or default_quadrature(spec, eps)
    r, w = quadrature.nodes, quadrature.weights
    scale = np.sqrt(w) * radial_weight(spec, eps, d, r)
    kernel = channel_kernel(d, ell, z, r, mass_factor, power)
    return scale[:, None] * kernel * scale[None, :]


def _top_eigenvalue(matrix: np.ndarray) -> float:
    n = matrix.shape[0]
    return float(eigvalsh(matrix, subset_by_index=[n - 1, n - 1])[0])


def odd_norm_radial(spec: PotentialSpec, eps: float, z: float, d: int, ell_max: int = 5,
                    quadrature: Optional[RadialQuadrature] = None) -> float:
    """
    ‖v_ε(−Δ+z)^{-1}‖ on odd functions

    ‖v R_0‖² = ‖v R_0² v‖ per channel; the odd-sector norm is the max over odd channels.
    """
    if spec.is_zero:
        return 0.0
    best, best_ell = 0.0, None
    for ell in odd_channels(d, ell_max):
        value = _top_eigenvalue(sandwich(spec, eps, d, ell, z, 1.0, 2, quadrature))
        if value > best:
            best, best_ell = value, ell
    logger.debug(f"odd_norm_radial(d={d}, ε={eps:.4g}, z={z:g}) = {math.sqrt(max(best, 0.0)):.8e} "
                 f"(dominant channel ℓ={best_ell})")
    return math.sqrt(max(best, 0.0))


def bs_eigenvalue_radial(spec: PotentialSpec, d: int, z: float, mass_factor: float = 1.0, ell: int = 0,
                         eps: float = 1.0, quadrature: Optional[RadialQuadrature] = None) -> float:
    """Largest eigenvalue of v(μ(−Δ)+z)^{-1}v in channel ℓ (continuum, no box)"""
    if spec.is_zero:
        return 0.0
    return _top_eigenvalue(sandwich(spec, eps, d, ell, z, mass_factor, 1, quadrature))


def odd_bs_eigenvalue(spec: PotentialSpec, d: int, z: float = 0.0, mass_factor: float = 2.0,
                      ell_max: int = 5) -> float:
    """max over odd channels of the Birman–Schwinger eigenvalue"""
    return max(bs_eigenvalue_radial(spec, d, z, mass_factor, ell) for ell in odd_channels(d, ell_max))


@dataclass
class ChannelDifference:
    """채널별 리졸벤트 차이 노름과 S(z) 노름"""
    norm: float
    s_norm: float
    channel: int
    x_norm_sq: float = 0.0


def channel_resolvent_difference(spec: PotentialSpec, eps: float, lam: float, z: float, d: int, ell: int,
                                 mass_factor: float = 2.0,
                                 quadrature: Optional[RadialQuadrature] = None) -> ChannelDifference:
    """
    ‖(h+z)^{-1} − (h_0+z)^{-1}‖ in one channel for h = μ(−Δ) − λV_ε, V_ε = ε^{-2}V(·/ε)

    λV_ε = λε^{d−2}·v_ε², so with A = (λε^{d−2})^{1/2}·v_ε, J = sgn V, K = A R_0 A* and
    X = A R_0 (X X* = A R_0² A*):
        (h+z)^{-1} − R_0 = X* (1 − JK)^{-1} J X,   S(z) = (1 − JK)^{-1}
    so the norm equals ‖M^{1/2} T M^{1/2}‖ with M = X X*, T = (1 − JK)^{-1}J.

    Raises:
        ThresholdViolationError: 1 − JK not positive definite for V ≥ 0 (coupling above threshold)
    """
    quadrature = quadrature or default_quadrature(spec, eps)
    strength = lam * eps ** (d - 2)
    K = strength * sandwich(spec, eps, d, ell, z, mass_factor, 1, quadrature)
    M = strength * sandwich(spec, eps, d, ell, z, mass_factor, 2, quadrature)
    J = radial_sign(spec, eps, quadrature.nodes)
    identity = np.eye(len(J))

    if spec.sign_class is SignClass.NONNEGATIVE:
        lowest = float(eigvalsh(identity - K, subset_by_index=[0, 0])[0])
        if lowest <= 0.0:
            raise ThresholdViolationError(
                f"channel ℓ={ell}: 1 − K has eigenvalue {lowest:.3e} ≤ 0 (λ={lam:g} above threshold at z={z:g})",
                min_eigenvalue=lowest)

    S = np.linalg.inv(identity - J[:, None] * K)
    T = S * J[None, :]
    T = 0.5 * (T + T.T)

    evals, evecs = eigh(0.5 * (M + M.T))
    root = (evecs * np.sqrt(np.clip(evals, 0.0, None))) @ evecs.T
    D = root @ T @ root
    norm = float(np.max(np.abs(eigvalsh(0.5 * (D + D.T)))))
    s_norm = float(np.linalg.norm(S, 2))
    return ChannelDifference(norm, s_norm, ell, float(max(evals[-1], 0.0)))


def resolvent_difference_radial(spec: PotentialSpec, eps: float, lam: float, z: float, d: int,
                                mass_factor: float = 2.0, ell_max: int = 5,
                                quadrature: Optional[RadialQuadrature] = None) -> ChannelDifference:
    """max over odd channels of the channel resolvent difference"""
    if spec.is_zero or lam == 0.0:
        return ChannelDifference(0.0, 1.0, 1, 0.0)
    results = [channel_resolvent_difference(spec, eps, lam, z, d, ell, mass_factor, quadrature)
               for ell in odd_channels(d, ell_max)]
    best = max(results, key=lambda c: c.norm)
    best.s_norm = max(c.s_norm for c in results)
    best.x_norm_sq = max(c.x_norm_sq for c in results)
    logger.debug(f"resolvent_difference_radial(d={d}, ε={eps:.4g}, λ={lam:.4g}, z={z:g}) = {best.norm:.6e} "
                 f"(ℓ={best.channel})")
    return best


def all_channels(d: int, ell_max: int = 5) -> List[int]:
    if d == 1:
        return [0, 1]
    return list(range(0, ell_max + 1))


def split_norms_radial(spec: PotentialSpec, eps: float, z: float, d: int, k: float,
                       ell_max: int = 5) -> Tuple[float, float]:
    """
    (‖(vχ_k)_ε R_0‖_odd, ‖(v − vχ_k)_ε R_0‖) with χ_k the ball |x| ≤ k

    The near part is restricted to odd functions; the far part is taken over all channels.
    """
    if spec.is_zero:
        return 0.0, 0.0
    reach = spec.effective_radius
    near = 0.0
    near_quadrature = radial_nodes(eps * min(k, reach))
    for ell in odd_channels(d, ell_max):
        near = max(near, _top_eigenvalue(sandwich(spec, eps, d, ell, z, 1.0, 2, near_quadrature)))

    far = 0.0
    if k < reach:
        far_quadrature = radial_nodes(eps * reach, r_min=eps * k)
        for ell in all_channels(d, ell_max):
            far = max(far, _top_eigenvalue(sandwich(spec, eps, d, ell, z, 1.0, 2, far_quadrature)))
    return math.sqrt(max(near, 0.0)), math.sqrt(max(far, 0.0))
