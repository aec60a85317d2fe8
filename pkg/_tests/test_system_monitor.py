#!/usr/bin/env python3
"""
메모리 상한 검사 테스트
"""

import pytest

from core.exceptions import MemoryCapError
from core.system_monitor import MemoryGuard


def test_estimate():
    assert MemoryGuard.estimate_mb(1024 ** 2, copies=1) == pytest.approx(16.0)


def test_small_request_passes():
    assert MemoryGuard(1024).check(4096) < 1.0


def test_request_above_cap_raises():
    with pytest.raises(MemoryCapError) as info:
        MemoryGuard(1.0).check(1024 ** 2, copies=8)
    assert info.value.requested_mb == pytest.approx(128.0)


def test_default_cap_comes_from_config():
    assert MemoryGuard().cap_mb > 0
