"""
수치 실험 전체에서 사용되는 열거형 정의
"""
from enum import Enum


class PotentialKind(Enum):
    """쌍 포텐셜 종류"""
    GAUSSIAN = "gaussian"
    SMOOTH_BUMP = "smooth_bump"
    SQUARE_WELL = "square_well"
    COULOMBIC_CUTOFF = "coulombic_cutoff"
    TABLE = "table"

    @property
    def is_singular(self) -> bool:
        return self is PotentialKind.COULOMBIC_CUTOFF


class SignClass(Enum):
    """포텐셜 부호 분류"""
    NONNEGATIVE = "nonnegative"
    NONPOSITIVE = "nonpositive"
    MIXED = "mixed"

    @staticmethod
    def classify(values) -> 'SignClass':
        """
        샘플 값으로부터 부호 분류

        Returns:
            SignClass
        """
        has_pos = any(v > 0 for v in values)
        has_neg = any(v < 0 for v in values)
        if has_pos and has_neg:
            return SignClass.MIXED
        if has_neg:
            return SignClass.NONPOSITIVE
        return SignClass.NONNEGATIVE


class ScheduleKind(Enum):
    """결합 상수 스케줄 종류 (ε ↦ λ_ε)"""
    CONSTANT = "constant"
    LINEAR = "linear"
    LOG_RECIPROCAL = "log_reciprocal"
    TABLE = "table"


class ExperimentKind(Enum):
    """CLI 실험 종류"""
    CALIBRATE = "calibrate"
    NORM_SWEEP = "norm-sweep"
    RATE_FIT = "rate-fit"
    KK_CHECK = "kk-check"
    VERIFY = "verify"
    THOMAS_CHECK = "thomas-check"
    REPORT = "report"
    RESONANCE = "resonance"
    STRONG_CHECK = "strong-check"


class RateModel(Enum):
    """수렴 속도 모델"""
    POWER = "power"
    POWER_LOG = "power_log"


class SolverMethod(Enum):
    """바닥 상태 고유값 해법"""
    AUTO = "auto"
    LANCZOS = "lanczos"
    LOBPCG = "lobpcg"


class SweepMethod(Enum):
    """스윕 행 계산 경로"""
    GRID = "grid"
    RADIAL = "radial"
