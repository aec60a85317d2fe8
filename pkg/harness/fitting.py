"""
Rate Fitting
log–log 최소제곱 수렴 속도 피팅과 bootstrap 오차 막대
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from loguru import logger

from core.enums import RateModel
from core.exceptions import InsufficientDataError

# 피팅에 필요한 최소 행 수
MIN_POINTS = 4
# bootstrap 재표본 수
BOOTSTRAP_SAMPLES = 200


@dataclass
class RateFitResult:
    """
    value ≈ C·ε^p (power) or C·ε^p·|log ε| (power_log, log exponent fixed to 1)
    """
    model: RateModel
    exponent: float
    prefactor: float
    log_exponent: float
    r_squared: float
    residuals: List[float]
    half_width: float = math.nan
    points: int = 0

    @property
    def rms_residual(self) -> float:
        return float(np.sqrt(np.mean(np.square(self.residuals)))) if self.residuals else 0.0

    def predict(self, eps) -> np.ndarray:
        eps = np.asarray(eps, dtype=float)
        return self.prefactor * eps ** self.exponent * np.abs(np.log(eps)) ** self.log_exponent

    def to_dict(self) -> dict:
        return {"model": self.model.value, "exponent": self.exponent, "prefactor": self.prefactor,
                "log_exponent": self.log_exponent, "r_squared": self.r_squared, "half_width": self.half_width,
                "rms_residual": self.rms_residual, "points": self.points, "residuals": list(self.residuals)}


def _design(eps: np.ndarray) -> np.ndarray:
    return np.column_stack([np.ones_like(eps), np.log(eps)])


def _target(eps: np.ndarray, values: np.ndarray, log_exponent: float) -> np.ndarray:
    y = np.log(values)
    if log_exponent:
        y = y - log_exponent * np.log(np.abs(np.log(eps)))
    return y


def _least_squares(eps: np.ndarray, values: np.ndarray, log_exponent: float):
    X, y = _design(eps), _target(eps, values, log_exponent)
    coeffs, *_ = np.linalg.lstsq(X, y, rcond=None)
    return coeffs, y - X @ coeffs, y


def fit_rate(eps_values: Sequence[float], values: Sequence[float], model: RateModel = RateModel.POWER,
             resolved: Optional[Sequence[bool]] = None, rng: Optional[np.random.Generator] = None,
             samples: int = BOOTSTRAP_SAMPLES) -> RateFitResult:
    """
    Least squares of log v against log ε (minus log|log ε| for power_log) on resolved rows

    Args:
        eps_values: ε per row
        values: measured values per row
        model: power or power_log
        resolved: per-row flags; unresolved rows are dropped before fitting
        rng: generator for the bootstrap resamples
        samples: number of bootstrap resamples

    Returns:
        RateFitResult with a bootstrap half-width (half of the central 95% interval)

    Raises:
        InsufficientDataError: fewer than 4 usable rows, nonpositive values, or ε ≥ 1 with power_log
    """
    eps = np.asarray(eps_values, dtype=float)
    vals = np.asarray(values, dtype=float)
    if eps.shape != vals.shape:
        raise InsufficientDataError(f"ε and value columns differ in length ({eps.size} vs {vals.size})")
    if resolved is not None:
        mask = np.asarray(resolved, dtype=bool)
        eps, vals = eps[mask], vals[mask]
    if eps.size < MIN_POINTS:
        raise InsufficientDataError(f"rate fit needs at least {MIN_POINTS} resolved rows, got {eps.size}")
    if np.any(vals <= 0) or np.any(eps <= 0):
        raise InsufficientDataError("rate fit needs positive ε and positive values")
    log_exponent = 1.0 if model is RateModel.POWER_LOG else 0.0
    if log_exponent and np.any(eps >= 1.0):
        raise InsufficientDataError("power_log model needs ε < 1")

    coeffs, residuals, y = _least_squares(eps, vals, log_exponent)
    total = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 - float(np.sum(residuals ** 2)) / total if total > 0 else 1.0

    rng = rng if rng is not None else np.random.default_rng(0)
    exponents = []
    for _ in range(samples):
        index = rng.integers(0, eps.size, eps.size)
        if np.unique(eps[index]).size < 2:
            continue
        sample_coeffs, _, _ = _least_squares(eps[index], vals[index], log_exponent)
        exponents.append(sample_coeffs[1])
    half_width = math.nan
    if exponents:
        lo, hi = np.percentile(exponents, [2.5, 97.5])
        half_width = 0.5 * float(hi - lo)

    result = RateFitResult(model, float(coeffs[1]), float(math.exp(coeffs[0])), log_exponent, r_squared,
                           residuals.tolist(), half_width, int(eps.size))
    logger.info(f"rate fit ({model.value}): p = {result.exponent:.4f} ± {half_width:.4f}, "
                f"C = {result.prefactor:.4e}, R² = {r_squared:.6f}")
    return result


@dataclass
class ModelComparison:
    """power 와 power_log 잔차 비교"""
    power: RateFitResult
    power_log: RateFitResult
    preferred: RateModel = field(init=False)

    def __post_init__(self):
        self.preferred = RateModel.POWER_LOG if self.power_log.rms_residual < self.power.rms_residual \
            else RateModel.POWER

    def to_dict(self) -> dict:
        return {"power": self.power.to_dict(), "power_log": self.power_log.to_dict(),
                "preferred": self.preferred.value}


def compare_models(eps_values: Sequence[float], values: Sequence[float],
                   resolved: Optional[Sequence[bool]] = None,
                   rng: Optional[np.random.Generator] = None) -> ModelComparison:
    """
    Both fits on the same rows. The free-exponent power fit is the best pure power law, so a
    smaller power_log residual beats every pure power.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    power = fit_rate(eps_values, values, RateModel.POWER, resolved, rng)
    power_log = fit_rate(eps_values, values, RateModel.POWER_LOG, resolved, rng)
    return ModelComparison(power, power_log)


def bounded_ratio(eps_values: Sequence[float], values: Sequence[float], reference: Sequence[float]) -> dict:
    """values/reference over the sweep, e.g. norm/(λ_ε ε²|log ε|)"""
    ratio = np.asarray(values, dtype=float) / np.asarray(reference, dtype=float)
    return {"eps": [float(e) for e in eps_values], "min": float(np.min(ratio)), "max": float(np.max(ratio)),
            "first": float(ratio[0]), "last": float(ratio[-1]), "ratios": ratio.tolist()}
