"""
실험 결과 레코드 및 manifest 모델
"""
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional

from .enums import ExperimentKind


@dataclass
class CheckResult:
    """단일 검사 결과 (값과 임계값)"""
    name: str
    value: float
    threshold: Optional[float] = None
    passed: bool = True
    detail: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        """딕셔너리 변환"""
        return {
            "name": self.name,
            "value": self.value,
            "threshold": self.threshold,
            "passed": self.passed,
            "detail": self.detail
        }

    def to_row(self) -> dict:
        return {"name": self.name, "value": self.value, "threshold": self.threshold, "passed": self.passed}


@dataclass
class Manifest:
    """실행 manifest (manifest.json)"""
    config_hash: str
    version: str
    started_at: str
    rows: int = 0
    flags: Dict[str, Any] = field(default_factory=dict)
    grid: Dict[str, Any] = field(default_factory=dict)
    config: Dict[str, Any] = field(default_factory=dict)
    artifacts: List[str] = field(default_factory=list)

    @staticmethod
    def now() -> str:
        return datetime.now(timezone.utc).isoformat(timespec="seconds")

    def to_dict(self) -> dict:
        """딕셔너리 변환"""
        return {
            "config_hash": self.config_hash,
            "version": self.version,
            "started_at": self.started_at,
            "rows": self.rows,
            "flags": self.flags,
            "grid": self.grid,
            "config": self.config,
            "artifacts": self.artifacts
        }


@dataclass
class ExperimentOutcome:
    """실험 실행 결과"""
    kind: ExperimentKind
    passed: bool = True
    rows: int = 0
    artifacts: List[str] = field(default_factory=list)
    checks: List[CheckResult] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)

    @property
    def exit_status(self) -> int:
        """0: 모든 검사 통과, 2: 실패한 검사 있음"""
        return 0 if self.passed else 2

    def add_check(self, check: CheckResult):
        self.checks.append(check)
        self.passed = self.passed and check.passed

    def to_dict(self) -> dict:
        """딕셔너리 변환"""
        return {
            "kind": self.kind.value,
            "passed": self.passed,
            "rows": self.rows,
            "artifacts": self.artifacts,
            "checks": [c.to_dict() for c in self.checks],
            "summary": self.summary
        }
