"""
fermilab-nrc Core Module

실험 실행을 떠받치는 공통 서비스

Modules:
    - models: 검사 결과, manifest, 실험 결과 모델
    - enums: 전체에서 사용되는 열거형
    - exceptions: 커스텀 예외 클래스
    - config: 설정 관리
    - storage: 아티팩트 저장 서비스
    - system_monitor: 메모리 상한 검사
"""

from .models import CheckResult, ExperimentOutcome, Manifest
from .enums import ExperimentKind, PotentialKind, RateModel, ScheduleKind, SignClass, SolverMethod, SweepMethod
from .exceptions import (SolverException, ConfigurationError, GridError, PotentialError, ScheduleError,
                         ConvergenceError, ThresholdViolationError, BracketError, MemoryCapError,
                         InsufficientDataError, StorageError)
from .config import ConfigManager, ExperimentConfig
from .storage import ArtifactStore
from .system_monitor import MemoryGuard

__all__ = [
    'CheckResult',
    'ExperimentOutcome',
    'Manifest',
    'ExperimentKind',
    'PotentialKind',
    'RateModel',
    'ScheduleKind',
    'SignClass',
    'SolverMethod',
    'SweepMethod',
    'SolverException',
    'ConfigurationError',
    'GridError',
    'PotentialError',
    'ScheduleError',
    'ConvergenceError',
    'ThresholdViolationError',
    'BracketError',
    'MemoryCapError',
    'InsufficientDataError',
    'StorageError',
    'ConfigManager',
    'ExperimentConfig',
    'ArtifactStore',
    'MemoryGuard'
]
