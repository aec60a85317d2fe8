"""
아티팩트 저장 서비스

CSV/JSON/텍스트 결과의 원자적 쓰기(임시 파일 + rename), 디스크 공간 확인, manifest 기록
"""
import csv
import io
import json
import math
import numbers
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import psutil
from loguru import logger

from .exceptions import StorageError
from .models import Manifest

# CSV 숫자 형식 (고정 seed → 동일 바이트)
FLOAT_FORMAT = "%.12e"


def format_value(value: Any) -> str:
    """CSV 셀 문자열 변환"""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, numbers.Integral):
        return str(int(value))
    if isinstance(value, numbers.Real):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return FLOAT_FORMAT % value
    try:
        return FLOAT_FORMAT % float(value)
    except (TypeError, ValueError):
        return str(value)


def _json_default(value):
    # numpy 스칼라와 배열
    if hasattr(value, "tolist"):
        return value.tolist()
    if hasattr(value, "value"):
        return value.value
    raise TypeError(f"not JSON serializable: {type(value).__name__}")


class ArtifactStore:
    """실험 결과 저장소"""

    def __init__(self, out_dir: str = None, min_free_mb: float = 50.0):
        """
        Initialize artifact store

        Args:
            out_dir: 출력 디렉토리 (None이면 설정의 output.out_dir)
            min_free_mb: 쓰기 전에 요구하는 최소 여유 공간 (MB)
        """
        if out_dir is None:
            from core.config import ConfigManager
            out_dir = ConfigManager.get_instance().experiment.output.out_dir
            logger.debug(f"Using output directory from config: {out_dir}")

        self.out_dir = Path(out_dir)
        self.min_free_mb = min_free_mb
        self._pending: List[Tuple[Path, Path]] = []
        self._in_transaction = False
        try:
            self.out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise StorageError(f"cannot create output directory {self.out_dir}: {e}")
        logger.debug(f"ArtifactStore initialized: {self.out_dir}")

    def check_disk_space(self) -> Tuple[float, bool]:
        """
        디스크 여유 공간 확인

        Returns:
            (여유 공간 MB, 충분한지 여부)
        """
        free_mb = psutil.disk_usage(str(self.out_dir)).free / (1024 ** 2)
        return free_mb, free_mb >= self.min_free_mb

    # ------------------------------------------------------------------
    # 원자적 쓰기

    def _write(self, name: str, text: str) -> Path:
        free_mb, ok = self.check_disk_space()
        if not ok:
            logger.error(f"[STORAGE] only {free_mb:.0f}MB free in {self.out_dir}")
            raise StorageError(f"insufficient disk space for {name}: {free_mb:.0f}MB free, "
                               f"{self.min_free_mb:.0f}MB required")

        target = self.out_dir / name
        fd, temp_name = tempfile.mkstemp(prefix=f".{name}.", suffix=".tmp", dir=str(self.out_dir))
        temp = Path(temp_name)
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
                f.write(text)
                f.flush()
                os.fsync(f.fileno())
        except OSError as e:
            temp.unlink(missing_ok=True)
            raise StorageError(f"failed to write {name}: {e}")

        if self._in_transaction:
            self._pending.append((temp, target))
        else:
            self._commit_one(temp, target)
        return target

    @staticmethod
    def _commit_one(temp: Path, target: Path):
        try:
            os.replace(temp, target)
        except OSError as e:
            temp.unlink(missing_ok=True)
            raise StorageError(f"failed to move {temp.name} to {target}: {e}")
        logger.debug(f"wrote {target}")

    @contextmanager
    def transaction(self):
        """
        블록 안의 쓰기를 모아 성공 시 한 번에 rename, 실패 시 임시 파일 삭제
        """
        self._in_transaction = True
        self._pending = []
        try:
            yield self
        except BaseException:
            for temp, _ in self._pending:
                temp.unlink(missing_ok=True)
            logger.warning(f"[STORAGE] discarded {len(self._pending)} staged artifact(s)")
            self._pending = []
            raise
        finally:
            self._in_transaction = False
        for temp, target in self._pending:
            self._commit_one(temp, target)
        logger.info(f"[STORAGE] committed {len(self._pending)} artifact(s) to {self.out_dir}")
        self._pending = []

    # ------------------------------------------------------------------
    # 형식별 쓰기

    def write_csv(self, name: str, rows: Sequence[Dict[str, Any]], columns: Optional[Sequence[str]] = None) -> Path:
        """
        CSV 쓰기 (숫자는 %.12e)

        Args:
            name: 파일 이름
            rows: 행 dict 목록
            columns: 열 순서 (None이면 첫 행의 키 순서)
        """
        columns = list(columns) if columns is not None else (list(rows[0].keys()) if rows else [])
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(row.get(column)) for column in columns])
        return self._write(name, buffer.getvalue())

    def write_json(self, name: str, payload: Any) -> Path:
        text = json.dumps(payload, indent=2, sort_keys=True, default=_json_default, allow_nan=True)
        return self._write(name, text + "\n")

    def write_text(self, name: str, text: str) -> Path:
        return self._write(name, text if text.endswith("\n") else text + "\n")

    def write_manifest(self, manifest: Manifest) -> Path:
        return self.write_json("manifest.json", manifest.to_dict())

    # ------------------------------------------------------------------
    # 읽기

    def read_csv(self, name: str) -> List[Dict[str, str]]:
        """
        CSV 읽기

        Raises:
            StorageError: 파일 없음
        """
        path = self.out_dir / name
        if not path.exists():
            raise StorageError(f"artifact not found: {path}")
        with open(path, "r", encoding="utf-8", newline="") as f:
            return list(csv.DictReader(f))

    def read_json(self, name: str) -> Any:
        path = self.out_dir / name
        if not path.exists():
            raise StorageError(f"artifact not found: {path}")
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)

    def exists(self, name: str) -> bool:
        return (self.out_dir / name).exists()


def parse_float(cell: str) -> Optional[float]:
    """CSV 셀 → float (빈 셀은 None)"""
    if cell is None or cell == "":
        return None
    return float(cell)


def parse_bool(cell: str) -> bool:
    return cell.strip().lower() == "true"
