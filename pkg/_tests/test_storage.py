#!/usr/bin/env python3
"""
아티팩트 저장 테스트: CSV 형식, 원자적 쓰기, 트랜잭션 롤백
"""

import math

import numpy as np
import pytest

from core.exceptions import StorageError
from core.models import Manifest
from core.storage import ArtifactStore, format_value, parse_float, parse_bool


@pytest.mark.parametrize("value,expected", [
    (None, ""),
    (True, "true"),
    (np.bool_(False), "false"),
    (7, "7"),
    (np.int64(3), "3"),
    (0.5, "5.000000000000e-01"),
    (math.nan, "nan"),
    (-math.inf, "-inf"),
    ("radial", "radial"),
])
def test_format_value(value, expected):
    assert format_value(value) == expected


def test_csv_round_trip(tmp_path):
    store = ArtifactStore(str(tmp_path))
    store.write_csv("rows.csv", [{"epsilon": 0.25, "norm": 1.5e-3, "resolved_flag": True, "grid_n": None}],
                    columns=["epsilon", "norm", "resolved_flag", "grid_n"])
    text = (tmp_path / "rows.csv").read_text()
    assert text.splitlines()[0] == "epsilon,norm,resolved_flag,grid_n"
    assert text.splitlines()[1] == "2.500000000000e-01,1.500000000000e-03,true,"
    row = store.read_csv("rows.csv")[0]
    assert parse_float(row["epsilon"]) == 0.25
    assert parse_float(row["grid_n"]) is None
    assert parse_bool(row["resolved_flag"])


def test_no_temp_files_left(tmp_path):
    store = ArtifactStore(str(tmp_path))
    store.write_text("report.txt", "done")
    assert sorted(p.name for p in tmp_path.iterdir()) == ["report.txt"]


def test_transaction_commits_together(tmp_path):
    store = ArtifactStore(str(tmp_path))
    with store.transaction():
        store.write_json("a.json", {"x": 1})
        assert not (tmp_path / "a.json").exists()
        store.write_manifest(Manifest("abc", "1.0.0", Manifest.now(), rows=1))
    assert store.read_json("a.json") == {"x": 1}
    assert store.read_json("manifest.json")["config_hash"] == "abc"


def test_transaction_rollback(tmp_path):
    store = ArtifactStore(str(tmp_path))
    with pytest.raises(RuntimeError):
        with store.transaction():
            store.write_csv("rows.csv", [{"a": 1.0}])
            raise RuntimeError("row failed")
    assert list(tmp_path.iterdir()) == []


def test_missing_artifact(tmp_path):
    store = ArtifactStore(str(tmp_path))
    with pytest.raises(StorageError):
        store.read_csv("norm_sweep.csv")
    with pytest.raises(StorageError):
        store.read_json("manifest.json")


def test_json_handles_numpy(tmp_path):
    store = ArtifactStore(str(tmp_path))
    store.write_json("values.json", {"array": np.arange(3), "scalar": np.float64(0.5)})
    assert store.read_json("values.json") == {"array": [0, 1, 2], "scalar": 0.5}
