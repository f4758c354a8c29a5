import json

import pytest

import coupler_swap.cli as cli
import coupler_swap.sweep as sweep_mod
from coupler_swap.config import PRESETS, config_to_dict
from coupler_swap.dynamics import IntegrationError
from coupler_swap.sweep import CSV_HEADER, read_csv


def write_config(tmp_path, **overrides):
    d = config_to_dict(PRESETS["table1-transfer"])
    d.update(overrides)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(d))
    return str(path)


def test_presets_list_and_show(capsys):
    assert cli.main(["presets", "list"]) == 0
    out = capsys.readouterr().out
    assert "table1-transfer" in out and "table1-exchange" in out
    assert cli.main(["presets", "show", "table1-exchange"]) == 0
    out = capsys.readouterr().out
    assert "3.2e4" in out and "9.3" in out
    assert cli.main(["presets", "show", "table1-transfer", "--json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["name"] == "table1-transfer"


def test_presets_show_unknown(capsys):
    assert cli.main(["presets", "show", "nope"]) == 1
    assert "unknown preset" in capsys.readouterr().err


def test_simulate_effective(capsys):
    assert cli.main(["simulate", "--config", "table1-transfer", "--method", "effective", "--alpha", "6"]) == 0
    out = capsys.readouterr().out
    lines = [line for line in out.splitlines() if "|vac" in line]
    assert len(lines) == 4
    for line in lines:
        fields = line.split()
        assert float(fields[1]) == pytest.approx(1.0, abs=1e-6)
        assert float(fields[3]) == pytest.approx(15.0)


def test_simulate_effective_with_crosstalk_is_config_error(capsys):
    code = cli.main(["simulate", "--config", "table1-transfer", "--method", "effective", "--crosstalk", "0.01"])
    assert code == 1
    assert "crosstalk" in capsys.readouterr().err


def test_simulate_missing_file(tmp_path, capsys):
    assert cli.main(["simulate", "--config", str(tmp_path / "none.json")]) == 1
    assert "cannot read config" in capsys.readouterr().err


def test_simulate_invalid_config(tmp_path, capsys):
    path = write_config(tmp_path, alpha_grid={"min": 0.5, "max": 10, "steps": 61})
    assert cli.main(["simulate", "--config", path]) == 1
    assert "alpha min" in capsys.readouterr().err


def test_simulate_numerical_failure(monkeypatch, capsys):
    def boom(*args, **kwargs):
        raise IntegrationError("non-finite state", time=1e-9, norm=float("nan"))

    monkeypatch.setattr(cli, "run_protocol", boom)
    assert cli.main(["simulate", "--config", "table1-transfer"]) == 2
    assert "numerical error" in capsys.readouterr().err


def test_sweep_writes_csv(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("SIM_THREADS", "1")
    out = tmp_path / "sweep.csv"
    path = write_config(tmp_path, method="effective", alpha_grid={"min": 5, "max": 6, "steps": 3})
    assert cli.main(["sweep", "--config", path, "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 12
    assert out.read_text().splitlines()[0] == ",".join(CSV_HEADER)
    assert "wrote 12 rows" in capsys.readouterr().out


def test_sweep_needs_output(tmp_path, capsys):
    path = write_config(tmp_path, method="effective")
    assert cli.main(["sweep", "--config", path]) == 1
    assert "no output path" in capsys.readouterr().err


def test_sweep_with_failed_point_exits_2(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("SIM_THREADS", "1")
    real = sweep_mod.run_protocol

    def flaky(params, *args, **kwargs):
        if abs(abs(params.delta_a[0]) / params.g[0] - 5.5) < 1e-9:
            raise IntegrationError("step size underflow", time=2e-9)
        return real(params, *args, **kwargs)

    monkeypatch.setattr(sweep_mod, "run_protocol", flaky)
    out = tmp_path / "s.csv"
    path = write_config(tmp_path, method="effective", alpha_grid={"min": 5, "max": 6, "steps": 3}, state_pairs=[["psi+", "vac"]])
    assert cli.main(["sweep", "--config", path, "--out", str(out)]) == 2
    lines = out.read_text().splitlines()
    assert lines[2].endswith("nan,nan,nan")
    assert "step size underflow" in capsys.readouterr().err


def test_sweep_unwritable_output(tmp_path, capsys):
    path = write_config(tmp_path, method="effective", alpha_grid={"min": 5, "max": 6, "steps": 2})
    assert cli.main(["sweep", "--config", path, "--out", str(tmp_path / "no" / "x.csv")]) == 1
    assert "cannot write CSV" in capsys.readouterr().err


def test_check_conditions(capsys):
    assert cli.main(["check-conditions", "--config", "table1-exchange"]) == 0
    out = capsys.readouterr().out
    assert "result: PASS" in out and "margin factor 1" in out
    assert cli.main(["check-conditions", "--config", "table1-exchange", "--margin", "10"]) == 0
    assert "result: FAIL" in capsys.readouterr().out
    assert cli.main(["check-conditions", "--config", "table1-transfer", "--alpha", "1"]) == 0
    out = capsys.readouterr().out
    assert "at alpha = 1" in out and "result: FAIL" in out


def test_bad_thread_setting(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("SIM_THREADS", "zero")
    path = write_config(tmp_path, method="effective", alpha_grid={"min": 5, "max": 6, "steps": 2})
    assert cli.main(["sweep", "--config", path, "--out", str(tmp_path / "x.csv")]) == 1
    assert "SIM_THREADS" in capsys.readouterr().err


def test_argparse_rejects_unknown_method():
    with pytest.raises(SystemExit):
        cli.main(["simulate", "--config", "table1-transfer", "--method", "best"])
