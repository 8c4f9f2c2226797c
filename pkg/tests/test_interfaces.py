import json
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relgalerkin.cli import main
from relgalerkin.experiments import (DEFAULTS, KINDS, ConfigError, ExperimentConfig, merge,
                                     run_experiment)
from relgalerkin.report import (Report, Table, dumps, emit_plot_data, format_value, read_csv,
                                table, write_csv, write_outputs)


def test_shortest_round_trip_floats(tmp_path):
    vals = [0.1, 1 / 3, 1e-300, 2.0 ** 0.5, -0.0, 12345678.9]
    tab = Table("t", ("x",), [(v,) for v in vals])
    head, rows = read_csv(write_csv(tmp_path / "t.csv", tab))
    assert head == ["x"]
    for v, (txt,) in zip(vals, rows):
        assert float(txt) == v and txt == repr(v)


@settings(max_examples=50, deadline=None)
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_format_value_round_trip(x):
    assert float(format_value(x)) == x
    assert format_value(np.float64(x)) == format_value(x)


def test_bool_and_int_formatting():
    assert format_value(True) == "true" and format_value(np.bool_(False)) == "false"
    assert format_value(np.int64(7)) == "7"


def test_empty_report_header_only(tmp_path):
    rep = Report("rate-study", tables=[table("rate_study"), table("mp_level")])
    paths = emit_plot_data(rep, tmp_path)
    assert [p.read_text() for p in paths] == ["m,error,contraction_factor\n",
                                              "lambda_scale,level,threshold,flag\n"]


def test_table_arity_checked():
    with pytest.raises(ValueError):
        table("rate_study").add(1.0, 2.0)


def test_dumps_deterministic_and_nan_safe():
    a = dumps({"b": np.float64(1.5), "a": [np.int64(1), np.bool_(True)], "c": float("nan")})
    assert a == dumps({"c": float("nan"), "a": [1, True], "b": 1.5})
    assert json.loads(a)["c"] == "nan"


def test_outputs_and_manifest(tmp_path):
    rep = Report("x", summary={"v": 1.0}, tables=[table("solve_trace")])
    rep.tables[0].add(0, 1.25)
    rep.check("ok", True)
    write_outputs(rep, {"kind": "solve"}, tmp_path)
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert set(man) >= {"config", "version", "timestamp", "outputs"}
    summ = json.loads((tmp_path / "summary.json").read_text())
    assert "timestamp" not in json.dumps(summ) and summ["passed"] is True
    assert (tmp_path / "solve_trace.csv").read_text() == "iteration,energy\n0,1.25\n"


@pytest.mark.parametrize("kind", KINDS)
def test_config_round_trip(kind):
    cfg = merge(kind, None, {})
    assert ExperimentConfig.loads(cfg.dumps()) == cfg
    assert ExperimentConfig.loads(cfg.dumps()).dumps() == cfg.dumps()


def test_precedence_flags_over_file_over_defaults():
    cfg = merge("solve", {"kind": "solve", "m": 2.0, "N": 9}, {"N": 7, "p": None})
    assert (cfg.m, cfg.N, cfg.p) == (2.0, 7, DEFAULTS["solve"]["p"])


@pytest.mark.parametrize("data,path", [
    ({"N": "a"}, "N"),
    ({"m_list": [1.0, -2.0]}, "m_list/1"),
    ({"tol": 0}, "tol"),
    ({"bogus": 1}, "<root>"),
    ({"side_lengths": [1.0, 2.0]}, "side_lengths"),
])
def test_schema_errors_name_the_field(data, path):
    with pytest.raises(ConfigError) as exc:
        merge("solve", {"kind": "solve", **data}, {})
    assert exc.value.path == path


def test_semantic_refusals():
    with pytest.raises(ConfigError, match="variational path"):
        merge("solve", None, {"p": 6.5})
    with pytest.raises(ConfigError, match="ascending"):
        merge("rate-study", None, {"m_list": [32.0, 16.0]})
    with pytest.raises(ConfigError):
        merge("rate-study", None, {"p": 5.0})
    with pytest.raises(ConfigError):
        merge("solve", {"kind": "mp-level"}, {})


def test_bubble_check_experiment():
    rep = run_experiment(merge("bubble-check", None, {"n": 3}))
    assert rep.passed and rep.summary["rel_error"] <= 1e-6


def test_cli_exit_codes_and_artifacts(tmp_path, capsys):
    out = tmp_path / "mp"
    assert main(["mp-level", "--N", "8", "--out", str(out)]) == 0
    head, rows = read_csv(out / "mp_level.csv")
    assert head == ["lambda_scale", "level", "threshold", "flag"] and rows
    assert (out / "mp_level.png").stat().st_size > 0
    assert main(["solve", "--p", "7", "--out", str(tmp_path / "bad")]) == 2
    assert main(["solve", "--N", "6", "--max-iter", "2", "--out", str(tmp_path / "nc")]) == 1
    assert main(["rate-study", "--N", "6", "--m-list", "1,64", "--out", str(tmp_path / "rs"),
                 "--no-figures"]) == 1
    cfg = tmp_path / "c.json"
    cfg.write_text("{not json")
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "x")]) == 2


def test_cli_numerical_failure_exit_code(tmp_path, monkeypatch):
    from relgalerkin import experiments
    from relgalerkin.errors import NumericalBlowupError

    def boom(cfg):
        raise NumericalBlowupError("nan in nonlinearity")

    monkeypatch.setitem(experiments.DRIVERS, "solve", boom)
    assert main(["solve", "--out", str(tmp_path)]) == 3
    rec = json.loads((tmp_path / "error.json").read_text())
    assert rec["error"] == "NumericalBlowupError"


def test_cli_determinism(tmp_path):
    for d in ("a", "b"):
        assert main(["symbol-check", "--out", str(tmp_path / d), "--no-figures", "--threads", "1"]) == 0
    assert (tmp_path / "a/summary.json").read_bytes() == (tmp_path / "b/summary.json").read_bytes()
    assert (tmp_path / "a/symbol_bounds.csv").read_bytes() == (tmp_path / "b/symbol_bounds.csv").read_bytes()


def test_manifest_reconstructs_run(tmp_path):
    assert main(["bubble-check", "--n", "2", "--seed", "5", "--out", str(tmp_path / "a")]) == 0
    man = json.loads((tmp_path / "a/manifest.json").read_text())
    cfg = ExperimentConfig.from_dict({**man["config"], "out": str(tmp_path / "b")})
    rep = run_experiment(cfg)
    first = json.loads((tmp_path / "a/summary.json").read_text())
    assert json.loads(dumps(rep.to_json())) == first


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "relgalerkin", "bubble-check", "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "PASS" in r.stdout
