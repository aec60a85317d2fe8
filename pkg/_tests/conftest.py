"""
pytest 공통 설정
저장소 루트를 import 경로에 추가하고 공용 fixture 를 제공
"""

import sys
from pathlib import Path

# Add parent directory to path
current_dir = Path(__file__).parent.parent
sys.path.insert(0, str(current_dir))

import numpy as np
import pytest
from loguru import logger

from core.config import ConfigManager


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running numerical checks")


@pytest.fixture(scope="session", autouse=True)
def quiet_logging():
    """테스트 중에는 WARNING 이상만 출력"""
    logger.remove()
    handler_id = logger.add(sys.stderr, level="WARNING")
    yield
    try:
        logger.remove(handler_id)
    except ValueError:
        # main.setup_logging() may already have removed every handler
        pass


@pytest.fixture(autouse=True)
def fresh_config_manager():
    ConfigManager.reset_instance()
    yield
    ConfigManager.reset_instance()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def repo_root():
    return current_dir
