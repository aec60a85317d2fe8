#!/usr/bin/env python3
"""
YAML 설정 로드 및 검증 테스트
"""

import textwrap

import pytest

from core.config import ConfigManager, ExperimentConfig, DEFAULT_CONFIG_PATH
from core.enums import ExperimentKind
from core.exceptions import ConfigurationError


def write_config(tmp_path, text: str):
    path = tmp_path / "config.yaml"
    path.write_text(textwrap.dedent(text))
    return str(path)


def test_default_config_loads():
    manager = ConfigManager.get_instance(str(DEFAULT_CONFIG_PATH))
    assert manager.experiment.kind is ExperimentKind.KK_CHECK
    assert manager.app_config.app_name == "fermilab-nrc"
    assert manager.get_logging_config()["console"]["level"] == "INFO"


def test_singleton():
    first = ConfigManager.get_instance(str(DEFAULT_CONFIG_PATH))
    assert ConfigManager() is first


def test_unknown_key_names_field(tmp_path):
    path = write_config(tmp_path, """
        sweep:
          eps_start: 0.5
          eps_stride: 2
    """)
    with pytest.raises(ConfigurationError) as info:
        ConfigManager.get_instance(path)
    assert info.value.field == "sweep.eps_stride"


def test_unknown_kind(tmp_path):
    path = write_config(tmp_path, """
        experiment:
          kind: sweep-everything
    """)
    with pytest.raises(ConfigurationError) as info:
        ConfigManager.get_instance(path)
    assert info.value.field == "experiment.kind"


def test_yaml_syntax_error_reports_line(tmp_path):
    path = write_config(tmp_path, """
        experiment:
          kind: kk-check
        sweep: [unclosed
    """)
    with pytest.raises(ConfigurationError) as info:
        ConfigManager.get_instance(path)
    assert info.value.line is not None


def test_missing_file(tmp_path):
    with pytest.raises(ConfigurationError):
        ConfigManager.get_instance(str(tmp_path / "absent.yaml"))


@pytest.mark.parametrize("sections,field", [
    ({"sweep": {"eps_factor": 1.5}}, "sweep.eps_factor"),
    ({"sweep": {"z_list": [1.0, -1.0]}}, "sweep.z_list"),
    ({"grid": {"points_per_axis": 31}}, "grid.points_per_axis"),
    ({"experiment": {"dim": 4}}, "experiment.dim"),
    ({"experiment": {"seed": "abc"}}, "experiment.seed"),
    ({"potential": {"kind": "table"}}, "potential.table_path"),
])
def test_validation_errors(sections, field):
    with pytest.raises(ConfigurationError) as info:
        ExperimentConfig.from_sections(sections)
    assert info.value.field == field


def test_eps_list_is_geometric():
    config = ExperimentConfig.from_sections({"sweep": {"eps_start": 0.5, "eps_factor": 0.5, "eps_count": 3}})
    assert config.eps_list == [0.5, 0.25, 0.125]


def test_overrides(tmp_path):
    manager = ConfigManager.get_instance(str(DEFAULT_CONFIG_PATH))
    manager.apply_overrides(workers=4, seed=7, out_dir=str(tmp_path), kind="norm-sweep", n_particles=3, dim=2)
    experiment = manager.experiment
    assert experiment.kind is ExperimentKind.NORM_SWEEP
    assert (experiment.workers, experiment.seed, experiment.n_particles, experiment.dim) == (4, 7, 3, 2)
    with pytest.raises(ConfigurationError):
        manager.apply_overrides(workers=0)


def test_hash_ignores_workers():
    one = ExperimentConfig.from_sections({"experiment": {"workers": 1}})
    many = ExperimentConfig.from_sections({"experiment": {"workers": 8}})
    other_seed = ExperimentConfig.from_sections({"experiment": {"seed": 1}})
    assert one.config_hash() == many.config_hash()
    assert one.config_hash() != other_seed.config_hash()
