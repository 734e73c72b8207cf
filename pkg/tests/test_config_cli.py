"""Configuration schema, defaults, CLI surface, and CSV emission."""

from __future__ import annotations

import copy
import json
import math
import os
import subprocess
import sys

import pytest

from cyberprov.cli import main
from cyberprov.config import (
    build_contract,
    build_menu,
    build_severity,
    emit_experiment_defaults,
    load_config,
    save_config,
    validate_config,
)
from cyberprov.errors import ConfigError
from cyberprov.severity import SeverityParams, quantile_truncated
from cyberprov.sweep import CSV_COLUMNS, premium_grid, run_sweep


@pytest.fixture()
def defaults():
    return emit_experiment_defaults()


@pytest.fixture()
def small_config(defaults, tmp_path):
    doc = defaults.to_dict()
    doc["sweep"] = {"premium_min": 4.4, "premium_max": 4.5, "premium_step": 0.05}
    path = tmp_path / "small.json"
    with open(path, "w") as fh:
        json.dump(doc, fh)
    return path


# ---------------------------------------------------------------------------
# Defaults
# ---------------------------------------------------------------------------
class TestDefaults:
    def test_round_trip(self, defaults, tmp_path):
        path = tmp_path / "config.json"
        save_config(defaults, path)
        again = load_config(path)
        assert again.to_dict() == defaults.to_dict()

    def test_reference_values(self, defaults):
        assert defaults.horizon == 20
        assert defaults.discount_factor == 0.95
        assert defaults.frequency["rate"] == 0.8
        contract = defaults.contract
        assert contract["fee_out"][19] == pytest.approx(8.0)
        assert contract["fee_in"][15] == 0.0
        assert contract["fee_in"][16] == pytest.approx(0.75)
        assert contract["deductible"][:3] == [0.5, 0.5, 0.5]
        assert contract["deductible"][19] == 5.0
        assert contract["max_compensation"] == 1000.0

    def test_tilt_parameter(self, defaults):
        # 20 / 2^20; the tilt decays by e^-20 across the grid.
        assert defaults.discretization["theta"] == pytest.approx(
            1.9073486328125e-05, abs=1e-12
        )

    def test_mitigation_resolves_quantile(self, defaults):
        severity = build_severity(defaults)
        menu = build_menu(defaults, severity)
        assert menu.betas == (0.0, 0.5)
        assert menu.gammas[1] == pytest.approx(
            quantile_truncated(SeverityParams(0.0, 1.0, 1.8, 0.15), 0.7), abs=1e-12
        )

    def test_flat_variant_collapses_levels(self, defaults):
        severity = build_severity(defaults)
        menu = build_menu(defaults, severity)
        flat = build_contract(defaults, menu, 2.0, "flat")
        assert flat.rule.levels == (0,)
        assert flat.schedules.premium[0, 0] == 2.0
        bm = build_contract(defaults, menu, 2.0, "bm")
        assert bm.schedules.premium[:, 0].tolist() == [1.2, 1.6, 2.0, 3.0]


# ---------------------------------------------------------------------------
# Validation diagnostics
# ---------------------------------------------------------------------------
class TestValidation:
    def _broken(self, defaults, mutate):
        doc = copy.deepcopy(defaults.to_dict())
        mutate(doc)
        return doc

    @pytest.mark.parametrize(
        "mutate, fragment",
        [
            (lambda d: d.update(schema_version=99), "schema_version"),
            (lambda d: d["sweep"].update(premium_step=0.0), "sweep.premium_step"),
            (lambda d: d["sweep"].update(premium_min=9.0), "sweep.premium_min"),
            (lambda d: d["severity"].update(h=1.5), "severity.h"),
            (lambda d: d["severity"].pop("g"), "severity.g"),
            (lambda d: d["frequency"].update(kind="binomial"), "frequency.kind"),
            (lambda d: d["mitigation"][0].update(beta=0.3), "mitigation[0]"),
            (
                lambda d: d["contract"]["claim_transition"].pop("0"),
                "claim_transition.0",
            ),
            (
                lambda d: d["contract"].update(deductible=[0.5] * 3),
                "contract.deductible",
            ),
            (lambda d: d.update(discount_factor=1.5), "discount_factor"),
            (
                lambda d: d["contract"]["claim_transition"]["0"].update(
                    pieces=[[1.0, 1]]
                ),
                "pieces",
            ),
        ],
    )
    def test_field_level_errors(self, defaults, mutate, fragment):
        doc = self._broken(defaults, mutate)
        with pytest.raises(ConfigError) as err:
            validate_config(doc)
        assert fragment in str(err.value)

    def test_invalid_json_reported(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            load_config(path)


# ---------------------------------------------------------------------------
# Sweep output
# ---------------------------------------------------------------------------
class TestSweep:
    def test_degenerate_single_point(self, defaults):
        doc = defaults.to_dict()
        doc["sweep"] = {"premium_min": 4.7, "premium_max": 4.7, "premium_step": 0.005}
        config = validate_config(doc)
        assert premium_grid(config).tolist() == [4.7]
        result = run_sweep(config, variants=("bm",))
        assert len(result["bm"].rows) == 1

    def test_csv_contract(self, defaults, tmp_path):
        doc = defaults.to_dict()
        doc["sweep"] = {"premium_min": 4.4, "premium_max": 4.5, "premium_step": 0.05}
        config = validate_config(doc)
        run_sweep(config, out_dir=tmp_path)
        for variant in ("bm", "flat"):
            lines = (tmp_path / f"sweep_{variant}.csv").read_text().splitlines()
            assert lines[0] == ",".join(CSV_COLUMNS)
            assert len(lines) == 4
            for line in lines[1:]:
                fields = line.split(",")
                assert len(fields) == len(CSV_COLUMNS)
                for field in fields:
                    value = float(field)
                    assert math.isfinite(value)
                    assert "e" not in field and "E" not in field
        flat_lines = (tmp_path / "sweep_flat.csv").read_text().splitlines()
        idx = {name: k for k, name in enumerate(CSV_COLUMNS)}
        for line in flat_lines[1:]:
            fields = line.split(",")
            assert float(fields[idx["years_bm_m2"]]) == 0.0
            assert float(fields[idx["years_bm_1"]]) == 0.0

    def test_reruns_identical(self, defaults, tmp_path):
        doc = defaults.to_dict()
        doc["sweep"] = {"premium_min": 4.4, "premium_max": 4.45, "premium_step": 0.05}
        config = validate_config(doc)
        run_sweep(config, variants=("bm",), out_dir=tmp_path / "a")
        run_sweep(config, variants=("bm",), out_dir=tmp_path / "b")
        assert (tmp_path / "a" / "sweep_bm.csv").read_bytes() == (
            tmp_path / "b" / "sweep_bm.csv"
        ).read_bytes()

    def test_parallel_matches_sequential(self, defaults, tmp_path):
        doc = defaults.to_dict()
        doc["sweep"] = {"premium_min": 4.4, "premium_max": 4.5, "premium_step": 0.025}
        config = validate_config(doc)
        run_sweep(config, variants=("flat",), out_dir=tmp_path / "seq", jobs=1)
        run_sweep(config, variants=("flat",), out_dir=tmp_path / "par", jobs=2)
        assert (tmp_path / "seq" / "sweep_flat.csv").read_bytes() == (
            tmp_path / "par" / "sweep_flat.csv"
        ).read_bytes()


# ---------------------------------------------------------------------------
# CLI surface
# ---------------------------------------------------------------------------
class TestCli:
    def test_defaults_validate_cycle(self, tmp_path, capsys):
        out = tmp_path / "config.json"
        assert main(["defaults", "--out", str(out)]) == 0
        assert main(["validate", "--config", str(out)]) == 0

    def test_validate_rejects_bad_config(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"schema_version": 1}))
        assert main(["validate", "--config", str(bad)]) == 2

    def test_solve_writes_outputs(self, small_config, tmp_path):
        out = tmp_path / "results"
        code = main(
            ["solve", "--config", str(small_config), "--variant", "flat", "--out", str(out)]
        )
        assert code == 0
        assert (out / "sweep_flat.csv").exists()
        assert (out / "thresholds_flat.json").exists()
        changes = json.loads((out / "thresholds_flat.json").read_text())
        assert changes and changes[0]["after"]["retention"] == "none"

    def test_env_var_overrides_output_dir(self, small_config, tmp_path, monkeypatch):
        out = tmp_path / "from_env"
        monkeypatch.setenv("CYBERPROV_OUT", str(out))
        assert main(["solve", "--config", str(small_config), "--variant", "flat"]) == 0
        assert (out / "sweep_flat.csv").exists()

    def test_numerical_failure_exit_code(self, defaults, tmp_path):
        # A grid far too short for the severity tail loses visible mass,
        # which the transform reports as a numerical failure (exit 3).
        doc = defaults.to_dict()
        doc["discretization"] = {"l_bar": 200.0, "k_gr": 10}
        doc["sweep"] = {"premium_min": 4.5, "premium_max": 4.5, "premium_step": 0.01}
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(doc))
        code = main(["solve", "--config", str(path), "--out", str(tmp_path / "o")])
        assert code == 3

    def test_mc_check_runs(self, small_config, capsys):
        code = main(
            ["mc-check", "--config", str(small_config), "--paths", "20000", "--seed", "3"]
        )
        assert code == 0
        captured = capsys.readouterr().out
        assert "mc-check passed" in captured

    def test_console_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-m", "cyberprov.cli", "--help"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert "solve" in proc.stdout and "mc-check" in proc.stdout
