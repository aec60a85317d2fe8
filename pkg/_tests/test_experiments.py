"""
실험 실행기 통합 테스트
작은 격자에서 실험 종류별 아티팩트, manifest, 재현성 확인
"""

import textwrap

import pytest

from core.config import ExperimentConfig
from core.enums import RateModel, ScheduleKind
from core.exceptions import StorageError
from core.storage import ArtifactStore
from harness.experiments import ExperimentRunner, row_seeds, run_experiment, run_rows
import harness.experiments as experiments
from harness.report import odd_sector_exponent, odd_sector_fit_target, resolvent_exponent, resolvent_fit_target
from main import build_parser, main


def make_config(out_dir, kind, **sections):
    base = {
        "experiment": {"kind": kind, "n_particles": 2, "dim": 1, "seed": 7, "workers": 1},
        "grid": {"box_half_length": 8.0, "points_per_axis": 16},
        "output": {"out_dir": str(out_dir)},
    }
    for name, values in sections.items():
        base.setdefault(name, {}).update(values)
    return ExperimentConfig.from_sections(base)


def _square(x):
    return x * x


# ---------------------------------------------------------------------------
# helpers

def test_row_seeds_deterministic():
    assert row_seeds(3, 4) == row_seeds(3, 4)
    assert row_seeds(3, 4) != row_seeds(4, 4)
    assert len(set(row_seeds(3, 8))) == 8


def test_run_rows_serial_keeps_order():
    tasks = [{"x": x} for x in (3, 1, 2)]
    assert run_rows(_square, tasks, workers=1) == [9, 1, 4]


def test_predicted_exponents():
    assert odd_sector_exponent(1) == (1.0, RateModel.POWER)
    assert odd_sector_exponent(2) == (1.0, RateModel.POWER_LOG)
    assert odd_sector_exponent(3)[0] == pytest.approx(0.5)
    assert resolvent_exponent(1, ScheduleKind.LINEAR)[0] == pytest.approx(2.0)
    assert resolvent_exponent(3, ScheduleKind.LINEAR)[0] == pytest.approx(3.0)
    assert resolvent_exponent(3, ScheduleKind.CONSTANT)[0] == pytest.approx(2.0)
    assert resolvent_exponent(2, ScheduleKind.LINEAR)[1] is RateModel.POWER_LOG


def test_fit_targets():
    # d = 2 odd norms are fitted squared, d = 2 rate fits use norm/λ_ε
    assert odd_sector_fit_target(2) == (2.0, RateModel.POWER_LOG, 2)
    assert odd_sector_fit_target(1) == (1.0, RateModel.POWER, 1)
    assert odd_sector_fit_target(3) == (0.5, RateModel.POWER, 1)
    assert resolvent_fit_target(2, ScheduleKind.LOG_RECIPROCAL) == (2.0, RateModel.POWER_LOG, True)
    assert resolvent_fit_target(2, ScheduleKind.LINEAR) == (2.0, RateModel.POWER_LOG, True)
    assert resolvent_fit_target(1, ScheduleKind.LINEAR) == (2.0, RateModel.POWER, False)


# ---------------------------------------------------------------------------
# kk-check

def test_kk_check_writes_json_and_manifest(tmp_path):
    config = make_config(tmp_path, "kk-check", coupling={"kind": "constant", "c": 0.5})
    outcome = run_experiment(config, flags={"command": "kk-check"})

    assert outcome.passed
    assert outcome.exit_status == 0
    assert {"kk_check.json", "manifest.json"} <= set(outcome.artifacts)

    store = ArtifactStore(str(tmp_path))
    payload = store.read_json("kk_check.json")
    assert payload["N"] == 2
    assert payload["residual"] <= 1e-8
    assert "lambda_max" in payload

    suite = payload["s_norm_suite"]
    assert len(suite) == 10
    assert sorted({entry["sign_class"] for entry in suite}) == ["nonnegative", "nonpositive"]
    assert all(entry["within_bound"] for entry in suite)
    names = [check.name for check in outcome.checks if check.name.startswith("s_norm_bound_")]
    assert len(names) == 10
    assert "s_norm_bound_nonpositive_4" in names

    manifest = store.read_json("manifest.json")
    for key in ("config_hash", "version", "started_at", "rows", "flags", "grid", "config", "artifacts"):
        assert key in manifest
    assert manifest["config_hash"] == config.config_hash()
    assert manifest["flags"] == {"command": "kk-check"}
    assert manifest["grid"]["n"] == 16
    assert manifest["rows"] == 1


# ---------------------------------------------------------------------------
# strong-check

def test_strong_check_compact_support_exact_zero(tmp_path):
    config = make_config(tmp_path, "strong-check",
                         potential={"kind": "square_well", "radius": 1.0},
                         sweep={"eps_start": 0.5, "eps_factor": 0.5, "eps_count": 3},
                         grid={"points_per_axis": 32})
    outcome = run_experiment(config)

    assert outcome.passed
    rows = ArtifactStore(str(tmp_path)).read_csv("strong_check.csv")
    assert [row.keys() for row in rows][0] == {"epsilon", "lambda", "value"}
    assert len(rows) == 3
    assert all(float(row["value"]) == 0.0 for row in rows)


def test_strong_check_same_seed_same_bytes(tmp_path):
    contents = []
    for name in ("a", "b"):
        out = tmp_path / name
        config = make_config(out, "strong-check", sweep={"eps_start": 0.5, "eps_factor": 0.5, "eps_count": 3})
        run_experiment(config)
        contents.append((out / "strong_check.csv").read_bytes())
    assert contents[0] == contents[1]


# ---------------------------------------------------------------------------
# norm-sweep + report

@pytest.fixture
def radial_sweep_dir(tmp_path):
    config = make_config(tmp_path, "norm-sweep",
                         sweep={"method": "radial", "eps_start": 0.1, "eps_factor": 0.5, "eps_count": 4,
                                "z_list": [1.0]})
    outcome = run_experiment(config)
    assert "norm_sweep.csv" in outcome.artifacts
    return tmp_path


def test_norm_sweep_rows(radial_sweep_dir):
    rows = ArtifactStore(str(radial_sweep_dir)).read_csv("norm_sweep.csv")
    assert len(rows) == 4
    assert list(rows[0].keys()) == ExperimentRunner.CSV_COLUMNS["norm_sweep.csv"]
    norms = [float(row["norm"]) for row in rows]
    assert all(b < a for a, b in zip(norms, norms[1:]))
    fits = ArtifactStore(str(radial_sweep_dir)).read_json("norm_fit.json")
    assert fits["1"]["holder_constants"]["1"] > 0.0


def test_report_after_sweep(radial_sweep_dir):
    config = make_config(radial_sweep_dir, "report")
    outcome = run_experiment(config)

    text = (radial_sweep_dir / "report.txt").read_text(encoding="utf-8")
    assert text.startswith("Convergence-rate report (d=1")
    assert "odd-sector norm, d=1, z=1" in text
    assert "report.txt" in outcome.artifacts


def test_norm_sweep_passes_tolerances_to_rows(tmp_path, monkeypatch):
    calls = []

    def fake_row(**kwargs):
        calls.append(kwargs)
        eps = kwargs["eps"]
        return {"epsilon": eps, "z": kwargs["z"], "norm": 0.5 * eps, "near_k": None, "far_k": None,
                "grid_n": None, "refinement_change": None, "resolved_flag": True}

    monkeypatch.setattr(experiments, "compute_sweep_row", fake_row)
    config = make_config(tmp_path, "norm-sweep", sweep={"method": "radial", "eps_count": 5},
                         tolerances={"norm": 1e-5, "max_iters": 321})
    outcome = run_experiment(config)

    assert outcome.passed
    assert len(calls) == 5
    assert all(call["max_iters"] == 321 and call["tol"] == 1e-5 for call in calls)


def test_rate_fit_passes_tolerances_to_rows(tmp_path, monkeypatch):
    calls = []

    def fake_row(**kwargs):
        calls.append(kwargs)
        eps, lam = kwargs["eps"], kwargs["lam"]
        return {"epsilon": eps, "lambda": lam, "z": kwargs["z"], "norm": lam * eps, "delta_used": None,
                "s_norm": None, "bound": None, "chain_bound": None, "grid_n": None, "resolved_flag": True}

    monkeypatch.setattr(experiments, "_rate_row_dict", fake_row)
    config = make_config(tmp_path, "rate-fit", sweep={"method": "radial", "eps_count": 5},
                         coupling={"kind": "linear", "g": 1.0},
                         tolerances={"solve": 1e-9, "max_iters": 777})
    outcome = run_experiment(config)

    assert outcome.passed
    assert len(calls) == 5
    assert all(call["solve_tol"] == 1e-9 and call["max_iters"] == 777 for call in calls)


def test_report_without_sweeps_leaves_nothing(tmp_path):
    config = make_config(tmp_path, "report")
    with pytest.raises(StorageError):
        run_experiment(config)
    assert not (tmp_path / "report.txt").exists()
    assert not (tmp_path / "manifest.json").exists()


# ---------------------------------------------------------------------------
# d = 2 sweeps through the runner fits

D2_SWEEP = {"method": "radial", "eps_start": 0.1, "eps_factor": 0.5, "eps_count": 6, "z_list": [1.0]}


@pytest.mark.slow
def test_d2_norm_sweep_fits_squared_norm(tmp_path):
    config = make_config(tmp_path, "norm-sweep", experiment={"dim": 2}, sweep=D2_SWEEP)
    outcome = run_experiment(config)

    checks = {check.name: check for check in outcome.checks}
    assert checks["odd_norm_model_z1"].passed
    assert checks["odd_norm_exponent_z1"].passed
    assert checks["odd_norm_exponent_z1"].value == pytest.approx(2.0, abs=0.1)
    assert outcome.passed

    fits = ArtifactStore(str(tmp_path)).read_json("norm_fit.json")["1"]
    assert fits["norm_power"] == 2
    assert fits["preferred"] == "power_log"


@pytest.mark.slow
def test_d2_rate_fit_accepts_on_bounded_ratio(tmp_path):
    config = make_config(tmp_path, "rate-fit", experiment={"dim": 2}, sweep=D2_SWEEP,
                         coupling={"kind": "log_reciprocal", "a": 0.0})
    outcome = run_experiment(config)

    names = {check.name for check in outcome.checks}
    assert "rate_ratio_bounded_z1" in names
    assert "rate_exponent_z1" not in names
    assert outcome.passed

    fits = ArtifactStore(str(tmp_path)).read_json("rate_fit.json")["1"]
    assert fits["advisory"] is True
    assert fits["per_coupling"] is True
    assert fits["ratio"]["max"] / fits["ratio"]["first"] <= 10.0

    report = run_experiment(make_config(tmp_path, "report", experiment={"dim": 2},
                                        coupling={"kind": "log_reciprocal", "a": 0.0}))
    assert report.passed
    text = (tmp_path / "report.txt").read_text(encoding="utf-8")
    assert "resolvent difference / λ, d=2, z=1" in text
    assert "(advisory)" in text


# ---------------------------------------------------------------------------
# CLI

def test_parser_subcommand_flags():
    args = build_parser().parse_args(["--seed", "3", "--workers", "2", "kk-check", "--particles", "3", "--dim", "1"])
    assert args.command == "kk-check"
    assert args.seed == 3
    assert args.workers == 2
    assert args.particles == 3
    assert args.dim == 1


def test_parser_rejects_bad_dim():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["kk-check", "--dim", "4"])


def test_main_exit_status(tmp_path):
    config_path = tmp_path / "nrc.yaml"
    config_path.write_text(textwrap.dedent("""
        logging:
          enabled: false
        coupling:
          kind: constant
          c: 0.5
        grid:
          points_per_axis: 16
    """), encoding="utf-8")
    out = tmp_path / "out"

    with pytest.raises(SystemExit) as info:
        main(["--config", str(config_path), "--out", str(out), "kk-check"])
    assert info.value.code == 0
    assert (out / "manifest.json").exists()


def test_main_invalid_config_exits_1(tmp_path):
    config_path = tmp_path / "bad.yaml"
    config_path.write_text("experiment:\n  kind: nonsense\n", encoding="utf-8")
    with pytest.raises(SystemExit) as info:
        main(["--config", str(config_path), "kk-check"])
    assert info.value.code == 1
