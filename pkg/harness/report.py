"""
Report
피팅된 지수와 이론 예측 지수 비교 요약
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from loguru import logger

from core.enums import RateModel, ScheduleKind
from core.exceptions import InsufficientDataError, StorageError
from core.storage import ArtifactStore, parse_bool, parse_float
from harness.fitting import RateFitResult, fit_rate

# 보고서가 읽는 스윕 CSV
NORM_SWEEP_CSV = "norm_sweep.csv"
RATE_SWEEP_CSV = "rate_sweep.csv"
REPORT_TXT = "report.txt"


def odd_sector_exponent(d: int) -> Tuple[float, RateModel]:
    """
    ‖v_ε R_0(z)‖_odd ~ ε^s: s = 1 (d=1), ε|log ε|-type (d=2), s = 1/2 (d=3)
    """
    if d == 1:
        return 1.0, RateModel.POWER
    if d == 2:
        return 1.0, RateModel.POWER_LOG
    return 0.5, RateModel.POWER


def schedule_exponent(kind: ScheduleKind) -> float:
    """λ_ε ~ ε^a; log_reciprocal contributes only a logarithm"""
    return 1.0 if kind is ScheduleKind.LINEAR else 0.0


def resolvent_exponent(d: int, kind: ScheduleKind) -> Tuple[float, RateModel]:
    """
    ‖(H_ε+z)^{-1} − (H_0+z)^{-1}‖ = O(λ_ε ε^{d−2+2s}); d = 2 carries ε²|log ε| instead
    """
    if d == 2:
        return 2.0 + schedule_exponent(kind), RateModel.POWER_LOG
    s, _ = odd_sector_exponent(d)
    return d - 2 + 2 * s + schedule_exponent(kind), RateModel.POWER


def odd_sector_fit_target(d: int) -> Tuple[float, RateModel, int]:
    """
    What the odd-norm sweep is fitted against

    d = 2 fits norm² = C·ε²·|log ε| (exponent 2, power_log); other dimensions fit the norm itself.

    Returns:
        (predicted exponent, model, power applied to the norm column)
    """
    if d == 2:
        return 2.0, RateModel.POWER_LOG, 2
    s, model = odd_sector_exponent(d)
    return s, model, 1


def resolvent_fit_target(d: int, kind: ScheduleKind) -> Tuple[float, RateModel, bool]:
    """
    What the resolvent-difference sweep is fitted against

    d = 2 fits norm/λ_ε against ε²|log ε|; the schedule then drops out of the exponent.

    Returns:
        (predicted exponent, model, whether the norm column is divided by λ_ε)
    """
    if d == 2:
        return 2.0, RateModel.POWER_LOG, True
    predicted, model = resolvent_exponent(d, kind)
    return predicted, model, False


def fit_values(norms: List[float], power: int = 1, couplings: Optional[List[float]] = None) -> List[float]:
    """norm^power, divided by λ_ε when couplings are given"""
    values = [n ** power for n in norms]
    if couplings is not None:
        values = [v / lam if lam else float("nan") for v, lam in zip(values, couplings)]
    return values


@dataclass
class ReportLine:
    """보고서 한 줄"""
    label: str
    predicted: float
    fit: Optional[RateFitResult] = None
    note: str = ""
    # 참고용 피팅: 판정에 쓰지 않음
    advisory: bool = False

    @property
    def agrees(self) -> Optional[bool]:
        if self.fit is None:
            return None
        slack = max(0.1, 2.0 * self.fit.half_width) if np.isfinite(self.fit.half_width) else 0.1
        return abs(self.fit.exponent - self.predicted) <= slack

    def render(self) -> str:
        if self.fit is None:
            return f"{self.label:<34} predicted {self.predicted:6.3f}   fitted   n/a     {self.note}"
        verdict = "OK" if self.agrees else "MISMATCH"
        if self.advisory:
            verdict = f"{verdict} (advisory)"
        return (f"{self.label:<34} predicted {self.predicted:6.3f}   fitted {self.fit.exponent:6.3f} "
                f"± {self.fit.half_width:5.3f} ({self.fit.model.value}, {self.fit.points} rows)   {verdict}")


def _columns(rows: List[dict], *names: str):
    return [[parse_float(row[name]) for row in rows] for name in names]


def norm_sweep_lines(store: ArtifactStore, d: int, rng: np.random.Generator) -> List[ReportLine]:
    rows = store.read_csv(NORM_SWEEP_CSV)
    predicted, model, power = odd_sector_fit_target(d)
    quantity = "odd-sector norm²" if power == 2 else "odd-sector norm"
    lines = []
    for z in sorted({row["z"] for row in rows}):
        subset = [row for row in rows if row["z"] == z]
        eps, norms = _columns(subset, "epsilon", "norm")
        resolved = [parse_bool(row["resolved_flag"]) for row in subset]
        label = f"{quantity}, d={d}, z={float(z):g}"
        try:
            fit = fit_rate(eps, fit_values(norms, power), model, resolved, rng)
            lines.append(ReportLine(label, predicted, fit))
        except InsufficientDataError as e:
            lines.append(ReportLine(label, predicted, note=str(e)))
    return lines


def rate_sweep_lines(store: ArtifactStore, d: int, schedule: ScheduleKind,
                     rng: np.random.Generator) -> List[ReportLine]:
    """
    d = 2 lines are advisory: the bounded-ratio check of the rate-fit run decides pass or fail there
    """
    rows = store.read_csv(RATE_SWEEP_CSV)
    predicted, model, per_coupling = resolvent_fit_target(d, schedule)
    quantity = "resolvent difference / λ" if per_coupling else "resolvent difference"
    lines = []
    for z in sorted({row["z"] for row in rows}):
        subset = [row for row in rows if row["z"] == z]
        eps, norms, lam = _columns(subset, "epsilon", "norm", "lambda")
        resolved = [parse_bool(row["resolved_flag"]) for row in subset]
        label = f"{quantity}, d={d}, z={float(z):g}"
        values = fit_values(norms, couplings=lam if per_coupling else None)
        try:
            lines.append(ReportLine(label, predicted, fit_rate(eps, values, model, resolved, rng),
                                    advisory=per_coupling))
        except InsufficientDataError as e:
            lines.append(ReportLine(label, predicted, note=str(e), advisory=per_coupling))
    return lines


def build_report(store: ArtifactStore, d: int, schedule: ScheduleKind, seed: int = 0) -> Tuple[str, List[ReportLine]]:
    """
    Plain-text summary of the sweeps found in the output directory

    Raises:
        StorageError: neither sweep CSV exists
    """
    rng = np.random.default_rng(seed)
    lines: List[ReportLine] = []
    if store.exists(NORM_SWEEP_CSV):
        lines.extend(norm_sweep_lines(store, d, rng))
    if store.exists(RATE_SWEEP_CSV):
        lines.extend(rate_sweep_lines(store, d, schedule, rng))
    if not lines:
        raise StorageError(f"no sweep results in {store.out_dir} (run norm-sweep or rate-fit first)")

    header = [f"Convergence-rate report (d={d}, schedule={schedule.value})", "=" * 72]
    text = "\n".join(header + [line.render() for line in lines])
    for line in lines:
        logger.info(line.render())
    return text, lines
