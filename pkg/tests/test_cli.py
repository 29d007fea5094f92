import json

import numpy as np
import pytest
import yaml

from lohesync.cli import main
from lohesync.config import ConfigError, load_config, parse_config
from lohesync.experiments import build_ensemble, diagnostics_columns, pair_run, run_experiment
from lohesync.linalg import random_unitary
from lohesync.suites import SuiteOptions, run_theorem_suite

BASE = {
    "model": "dlm-b",
    "d": 2,
    "N": 4,
    "kappa": 5.0,
    "h": 0.02,
    "steps": 50,
    "seed": 7,
    "init": {"kind": "near-consensus", "radius": 0.05},
    "hamiltonians": {"kind": "random-zero-sum", "scale": 0.05},
    "outputs": ["diagnostics-csv", "final-state-json", "framework-report-json"],
}


def write_config(tmp_path, name="exp.yaml", **overrides):
    raw = {**BASE, **overrides}
    raw = {k: v for k, v in raw.items() if v is not None}
    path = tmp_path / name
    path.write_text(yaml.safe_dump(raw), encoding="utf-8")
    return path


class TestConfig:
    def test_loads_and_resolves_paths(self, tmp_path):
        cfg = load_config(write_config(tmp_path))
        assert cfg.model == "dlm-b" and cfg.scheme == "B"
        assert cfg.output_dir == tmp_path / "out"
        assert cfg.init.radius == 0.05

    @pytest.mark.parametrize(
        "overrides,field",
        [
            ({"model": "dlm-d"}, "model"),
            ({"d": 0}, "d"),
            ({"N": 2.5}, "N"),
            ({"kappa": -1.0}, "kappa"),
            ({"h": 0.0}, "h"),
            ({"steps": 0}, "steps"),
            ({"seed": -1}, "seed"),
            ({"seed": 2**64}, "seed"),
            ({"init": "sideways"}, "init.kind"),
            ({"init": {"kind": "near-consensus"}}, "init.radius"),
            ({"hamiltonians": {"kind": "random-zero-sum", "scale": 1, "extra": 2}}, "hamiltonians.extra"),
            ({"outputs": ["plot"]}, "outputs"),
            ({"colour": "red"}, "colour"),
            ({"substeps_per_h": 10}, "substeps_per_h"),
            ({"model": "kuramoto"}, "d"),
            ({"model": "sphere", "d": 1}, "d"),
        ],
    )
    def test_rejects_with_field_name(self, overrides, field):
        with pytest.raises(ConfigError) as err:
            parse_config({**BASE, **overrides})
        assert err.value.field == field

    def test_missing_key(self):
        raw = dict(BASE)
        del raw["kappa"]
        with pytest.raises(ConfigError) as err:
            parse_config(raw)
        assert err.value.field == "kappa"

    def test_multi_document_rejected(self, tmp_path):
        path = tmp_path / "two.yaml"
        path.write_text("model: sphere\n---\nmodel: sphere\n")
        with pytest.raises(ConfigError):
            load_config(path)


class TestRuns:
    def test_deterministic_csv(self, tmp_path):
        cfg = load_config(write_config(tmp_path))
        first = run_experiment(cfg).artifacts["diagnostics-csv"].read_bytes()
        second = run_experiment(cfg).artifacts["diagnostics-csv"].read_bytes()
        assert first == second
        lines = first.decode().split("\n")
        assert lines[0] == ",".join(diagnostics_columns(cfg))
        assert len(lines) == cfg.steps + 3  # header, steps + 1 rows, trailing newline
        assert b"\r" not in first

    def test_seventeen_significant_digits(self, tmp_path):
        cfg = load_config(write_config(tmp_path))
        text = run_experiment(cfg).artifacts["diagnostics-csv"].read_text()
        value = text.split("\n")[5].split(",")[1]
        assert float(value) == float(format(float(value), ".17g"))
        assert len(value.replace(".", "").lstrip("0").split("e")[0]) <= 17

    @pytest.mark.parametrize("model,d", [("sphere", 3), ("dlm-a", 2), ("dlm-c", 2), ("kuramoto", 1), ("continuous-sphere", 3), ("continuous-matrix", 2)])
    def test_consensus_has_zero_diameter(self, tmp_path, model, d):
        extra = {"substeps_per_h": 5} if model.startswith("continuous") else {}
        cfg = load_config(
            write_config(tmp_path, model=model, d=d, steps=5, init="consensus", hamiltonians="zero", **extra)
        )
        result = run_experiment(cfg)
        assert result.status == 0
        assert all(row[1] == 0.0 for row in result.rows)

    def test_sphere_aggregation_run(self, tmp_path):
        cfg = load_config(
            write_config(
                tmp_path, model="sphere", d=3, N=10, kappa=1.0, h=1.0, steps=2000,
                init={"kind": "near-consensus", "radius": 0.7}, hamiltonians="zero",
            )
        )
        result = run_experiment(cfg)
        assert result.report.theorem_id == "T3.1" and result.report.satisfied
        assert result.rows[-1][1] < 1e-6
        mins = [row[3] for row in result.rows]
        assert all(b >= a - 1e-13 for a, b in zip(mins, mins[1:]))

    def test_final_state_json(self, tmp_path):
        cfg = load_config(write_config(tmp_path))
        result = run_experiment(cfg)
        payload = json.loads(result.artifacts["final-state-json"].read_text())
        mats = np.array(payload["matrices"])
        assert mats.shape == (4, 2, 2, 2)
        restored = mats[..., 0] + 1j * mats[..., 1]
        assert np.array_equal(restored, result.final.matrices)
        report = json.loads(result.artifacts["framework-report-json"].read_text())
        assert report["theorem_id"] == "T6.2"

    def test_explicit_init_roundtrip(self, tmp_path):
        u = np.array([random_unitary(2, s) for s in range(4)])
        pairs = np.stack([u.real, u.imag], axis=-1).tolist()
        (tmp_path / "init.json").write_text(json.dumps({"matrices": pairs}))
        cfg = load_config(write_config(tmp_path, init={"kind": "explicit", "file": "init.json"}))
        ens = build_ensemble(cfg)
        assert np.array_equal(ens.matrices, u)

    def test_explicit_init_wrong_shape(self, tmp_path):
        (tmp_path / "init.json").write_text(json.dumps({"matrices": [[[[1, 0]]]]}))
        cfg = load_config(write_config(tmp_path, init={"kind": "explicit", "file": "init.json"}))
        with pytest.raises(ConfigError) as err:
            build_ensemble(cfg)
        assert err.value.field == "init.file"

    def test_timing_column(self, tmp_path):
        cfg = load_config(write_config(tmp_path, timing=True, steps=3))
        result = run_experiment(cfg, write=False)
        assert all(row[-1] > 0 for row in result.rows[1:])


class TestPairRun:
    def test_identical_data(self, tmp_path):
        cfg = load_config(write_config(tmp_path))
        result = pair_run(cfg, cfg)
        assert all(row[4] == 0.0 for row in result.rows)
        assert result.artifacts["diagnostics-csv"].name == "pair_diagnostics.csv"

    def test_different_seed_contracts(self, tmp_path):
        a = load_config(write_config(tmp_path, steps=500))
        b = load_config(write_config(tmp_path, "b.yaml", steps=500, seed=8))
        result = pair_run(a, b, write=False)
        assert result.report.theorem_id == "T6.1" and result.report.satisfied
        assert result.rows[-1][4] < 1e-3 * result.rows[0][4]

    def test_right_translated_partner(self, tmp_path):
        a = load_config(write_config(tmp_path))
        ens = build_ensemble(a)
        shifted = ens.matrices @ random_unitary(2, 99)
        pairs = np.stack([shifted.real, shifted.imag], axis=-1).tolist()
        (tmp_path / "shift.json").write_text(json.dumps({"matrices": pairs}))
        b = load_config(write_config(tmp_path, "b.yaml", init={"kind": "explicit", "file": "shift.json"}))
        result = pair_run(a, b, write=False)
        assert max(row[4] for row in result.rows) < 1e-12

    def test_shape_mismatch(self, tmp_path):
        a = load_config(write_config(tmp_path))
        b = load_config(write_config(tmp_path, "b.yaml", N=5))
        with pytest.raises(ConfigError) as err:
            pair_run(a, b)
        assert err.value.field == "N"


class TestSuites:
    def test_gated_suite_is_exploratory(self):
        result = run_theorem_suite("T3.1", SuiteOptions(kappa=1.5))
        assert result.status == "unsatisfied"
        assert all(c.passed is None for c in result.criteria)
        assert result.exit_code == 0

    def test_unknown_suite(self):
        with pytest.raises(ValueError):
            run_theorem_suite("T9.9")

    def test_t51_suite(self):
        result = run_theorem_suite("T5.1")
        assert result.status == "pass", result.to_dict()


class TestCommandLine:
    def test_run_exit_zero(self, tmp_path, capsys):
        assert main(["run", "--config", str(write_config(tmp_path))]) == 0
        assert "framework T6.2" in capsys.readouterr().out

    def test_config_error_exit_two(self, tmp_path, capsys):
        assert main(["run", "--config", str(write_config(tmp_path, kappa="big"))]) == 2
        assert "kappa" in capsys.readouterr().err

    def test_missing_file_exit_two(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "nope.yaml")]) == 2

    def test_numerical_failure_exit_three(self, tmp_path):
        path = write_config(
            tmp_path, model="sphere", d=2, N=2, kappa=1e308, h=10.0, steps=3,
            init="random", hamiltonians="zero",
        )
        assert main(["run", "--config", str(path)]) == 3
        text = (tmp_path / "out" / "diagnostics.csv").read_text()
        assert text.splitlines()[-1].startswith("# FAILED step 1")

    def test_pair_command(self, tmp_path):
        a = write_config(tmp_path)
        b = write_config(tmp_path, "b.yaml", seed=3)
        assert main(["pair", "--config-a", str(a), "--config-b", str(b)]) == 0
        assert (tmp_path / "out" / "pair_diagnostics.csv").exists()

    def test_thresholds_command(self, capsys):
        assert main(["thresholds", "--rows", "2"]) == 0
        out = capsys.readouterr().out
        assert "beta0 = 0.43786357" in out and "beta1 = 0.19630199" in out

    def test_suite_command_json(self, tmp_path, capsys):
        out = tmp_path / "s.json"
        assert main(["suite", "T3.1", "--kappa", "1.5", "--json", str(out)]) == 0
        summary = json.loads(out.read_text())
        assert summary["status"] == "unsatisfied"
        assert summary["framework"]["satisfied"] is False

    def test_suite_failure_exit_four(self, monkeypatch):
        from lohesync import suites

        def failing(opts):
            return suites.SuiteResult("lemmas", None, [suites.Criterion("forced", False)])

        monkeypatch.setitem(suites.SUITES, "lemmas", failing)
        assert main(["suite", "lemmas"]) == 4

    def test_bad_subcommand_exit_two(self):
        with pytest.raises(SystemExit) as err:
            main(["frobnicate"])
        assert err.value.code == 2


def test_example_configs_parse():
    from pathlib import Path

    root = Path(__file__).resolve().parents[1] / "configs"
    for path in sorted(root.glob("*.yaml")):
        load_config(path)
