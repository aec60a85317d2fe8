"""
Memory Guard
격자 연산자 할당 전에 예상 메모리를 상한(performance.memory_cap_mb)과 가용 메모리에 비교
"""

from typing import Optional

import psutil
from loguru import logger

from core.exceptions import MemoryCapError

# 복소 필드 한 개의 바이트 수
COMPLEX_BYTES = 16


class MemoryGuard:
    """격자 크기 기반 메모리 상한 검사"""

    def __init__(self, cap_mb: Optional[float] = None):
        """
        초기화

        Args:
            cap_mb: 메모리 상한 (MB). None 이면 ConfigManager 의 performance 설정 사용
        """
        if cap_mb is None:
            cap_mb = self._load_performance_config()
        self.cap_mb = float(cap_mb)
        # 경고 임계값은 상한의 80%
        self.warning_mb = self.cap_mb * 0.8
        logger.trace(f"MemoryGuard initialized: cap={self.cap_mb:.0f}MB")

    @staticmethod
    def _load_performance_config() -> float:
        """performance 설정 로드"""
        try:
            from core.config import ConfigManager
            return ConfigManager.get_instance().experiment.memory_cap_mb
        except Exception as e:
            logger.debug(f"performance config unavailable ({e}); using 2048MB")
            return 2048.0

    @staticmethod
    def estimate_mb(num_nodes: int, copies: int = 8, bytes_per_value: int = COMPLEX_BYTES) -> float:
        """num_nodes 노드 필드 copies 개의 예상 메모리 (MB)"""
        return num_nodes * copies * bytes_per_value / (1024 ** 2)

    @staticmethod
    def available_mb() -> float:
        return psutil.virtual_memory().available / (1024 ** 2)

    def check(self, num_nodes: int, copies: int = 8, label: str = "grid") -> float:
        """
        할당 전 메모리 검사

        Args:
            num_nodes: 필드 하나의 노드 수
            copies: 동시에 유지되는 필드 수
            label: 로그용 이름

        Returns:
            예상 메모리 (MB)

        Raises:
            MemoryCapError: 상한 또는 가용 메모리 초과
        """
        requested = self.estimate_mb(num_nodes, copies)
        allowed = min(self.cap_mb, self.available_mb())
        if requested > allowed:
            logger.error(f"{label}: {requested:.0f}MB requested exceeds {allowed:.0f}MB "
                         f"(cap {self.cap_mb:.0f}MB)")
            raise MemoryCapError(f"{label} needs about {requested:.0f}MB, allowed {allowed:.0f}MB",
                                 requested_mb=requested, allowed_mb=allowed)
        if requested >= self.warning_mb:
            logger.warning(f"{label}: {requested:.0f}MB is close to the {self.cap_mb:.0f}MB cap")
        else:
            logger.debug(f"{label}: estimated {requested:.1f}MB of {allowed:.0f}MB")
        return requested
