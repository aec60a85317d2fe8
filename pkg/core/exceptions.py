"""
NRC 수치 실험 커스텀 예외 클래스
"""
from typing import Dict, Optional


class SolverException(Exception):
    """수치 실험 기본 예외"""
    def __init__(self, message: str, error_code: str = None):
        super().__init__(message)
        self.error_code = error_code
        self.message = message


class ConfigurationError(SolverException):
    """설정 관련 오류 (필드 이름과 YAML 라인 포함)"""
    def __init__(self, message: str, field: str = None, line: Optional[int] = None,
                 error_code: str = "CONFIG_ERR"):
        location = field or "<config>"
        if line is not None:
            location = f"{location} (line {line})"
        super().__init__(f"{location}: {message}", error_code)
        self.field = field
        self.line = line


class GridError(SolverException):
    """격자 정의 또는 격자 호환성 오류"""
    def __init__(self, message: str, error_code: str = "GRID_ERR"):
        super().__init__(message, error_code)


class PotentialError(SolverException):
    """포텐셜 정의 오류"""
    def __init__(self, kind: str, message: str, error_code: str = "POT_ERR"):
        super().__init__(message, error_code)
        self.kind = kind


class SingularEvaluationError(PotentialError):
    """특이점(r = 0)에서의 평가"""
    def __init__(self, kind: str, message: str, error_code: str = "POT_SING"):
        super().__init__(kind, message, error_code)


class DivergenceError(PotentialError):
    """sup V|r|² 발산 (C_V = ∞)"""
    def __init__(self, kind: str, message: str, error_code: str = "POT_DIV"):
        super().__init__(kind, message, error_code)


class IntegrabilityError(PotentialError):
    """구적법 세분화가 수렴하지 않음"""
    def __init__(self, kind: str, message: str, error_code: str = "POT_INT"):
        super().__init__(kind, message, error_code)


class ScheduleError(SolverException):
    """결합 상수 스케줄이 양수가 아님"""
    def __init__(self, message: str, error_code: str = "SCHED_ERR"):
        super().__init__(message, error_code)


class ConvergenceError(SolverException):
    """반복 해법이 반복 상한 내에서 수렴하지 않음"""
    def __init__(self, message: str, residual: float = None, iterations: int = None,
                 error_code: str = "CONV_ERR"):
        super().__init__(message, error_code)
        self.residual = residual
        self.iterations = iterations


class ThresholdViolationError(SolverException):
    """H + z 가 양의 정부호가 아님 (결합 상수가 임계값 초과)"""
    def __init__(self, message: str, min_eigenvalue: float = None, error_code: str = "THRESH_ERR"):
        super().__init__(message, error_code)
        self.min_eigenvalue = min_eigenvalue


class BracketError(SolverException):
    """보정 이분법의 구간 설정 실패"""
    def __init__(self, message: str, energies: Dict[float, float] = None, error_code: str = "BRACKET_ERR"):
        super().__init__(message, error_code)
        self.energies = energies or {}


class MemoryCapError(SolverException):
    """메모리 상한 초과 (할당 전 검사)"""
    def __init__(self, message: str, requested_mb: float = None, allowed_mb: float = None,
                 error_code: str = "MEM_ERR"):
        super().__init__(message, error_code)
        self.requested_mb = requested_mb
        self.allowed_mb = allowed_mb


class InsufficientDataError(SolverException):
    """피팅에 필요한 해상된 데이터 부족"""
    def __init__(self, message: str, error_code: str = "DATA_ERR"):
        super().__init__(message, error_code)


class StorageError(SolverException):
    """산출물 저장 관련 오류"""
    def __init__(self, message: str, error_code: str = "STORAGE_ERR"):
        super().__init__(message, error_code)
