"""Scenario runner, file formats and exit codes."""

import json
import math

import numpy as np
import pytest

from cqedfeedback import SystemParams
from cqedfeedback.cli import (
    EXIT_CONFIG,
    EXIT_NUMERIC,
    EXIT_OK,
    SCENARIOS,
    ConfigError,
    PlotSeries,
    ScenarioConfig,
    main,
    read_series,
    run,
    write_series,
)

# fast configurations so the whole scenario list stays cheap
FAST = {
    "fig2": {"grid": {"k_min": -8.0, "k_max": 8.0, "samples": 161}},
    "fig3": {"grid": {"k_min": -8.0, "k_max": 8.0, "samples": 161}},
    "fig4": {"rounds": 12},
    "fig5": {"kappa_in_grid": [0.001, 0.01, 0.1, 1.0, 10.0]},
    "sweep": {"lambda_L_values": [0.5, 2.5], "rounds": 5},
    "modes": {"grid": {"k_min": 0.0, "k_max": 3.2, "samples": 801}},
}


def _cfg(scenario, **extra):
    return ScenarioConfig.from_dict(scenario, {**FAST[scenario], **extra}).resolve()


def _by_name(series):
    return {s.name: s for s in series}


def test_fig2_rows():
    s = _by_name(run(_cfg("fig2")))["fig2_transfer"]
    cols = {k: np.array(v) for k, v in s.columns.items()}
    mid = int(np.argmin(np.abs(cols["delta_k"])))
    assert cols["delta_k"][mid] == 0.0
    assert cols["abs_C_L_sq"][mid] < 1e-28
    assert cols["abs_C_R_sq"][mid] == pytest.approx(1.0, abs=1e-14)
    assert np.all(np.abs(cols["abs_C_L_sq"] + cols["abs_C_R_sq"] - 1) < 1e-12)
    for name in ("abs_C_L_sq", "abs_C_R_sq"):
        assert np.all((cols[name] >= 0) & (cols[name] <= 1 + 1e-12))


def test_fig3_rows():
    series = run(_cfg("fig3", grid={"k_min": -8.0, "k_max": 8.0, "samples": 2001}))
    s = _by_name(series)["fig3_spectra"]
    cols = {k: np.array(v) for k, v in s.columns.items()}
    mid = int(np.argmin(np.abs(cols["delta_k"])))
    assert cols["abs_f_c_sq"][mid] == pytest.approx(2 / math.pi, rel=1e-14)
    assert cols["abs_f_10_sq"][mid] / cols["abs_f_1_sq"][mid] < 1
    for name, v in cols.items():
        if name != "delta_k":
            assert np.all(v >= 0)
    for entry in s.metadata["normalization_check"].values():
        assert abs(entry["total"] - 1) < 0.01


def test_fig4_columns():
    s = _by_name(run(_cfg("fig4")))["fig4_cumulative"]
    n = np.array(s.columns["N"])
    base = np.array(s.columns["baseline[p=0.5]"])
    assert base[n == 10][0] == pytest.approx(0.9990234375, abs=1e-15)
    for name in ("P_R[lambda_L=2.5]", "P_R[lambda_L=25]"):
        col = np.array(s.columns[name])
        assert np.all(np.diff(col) >= 0)
        assert np.all(col[n >= 2] < base[n >= 2])


def test_fig4_needs_ten_rounds():
    with pytest.raises(ConfigError):
        _cfg("fig4", rounds=5)


def test_fig5_columns():
    s = _by_name(run(_cfg("fig5")))["fig5_single_trial"]
    for name, v in s.columns.items():
        if name.startswith("P_R_1"):
            assert v[0] > 0.99
            assert all(0 <= x <= 1 for x in v)
    assert all(s.metadata["nonincreasing"].values())


def test_modes_report():
    series = _by_name(run(_cfg("modes")))
    rep = {k: v[0] for k, v in series["modes_report"].columns.items()}
    assert rep["fit_residual"] < 0.02
    assert rep["peak_spacing"] == pytest.approx(rep["peak_spacing_expected"], rel=1e-9)
    assert rep["abs_I_max"] == pytest.approx(rep["abs_I_max_expected"], rel=1e-12)
    assert "abs_R" in series["modes_amplitudes"].columns


def test_sweep():
    s = _by_name(run(_cfg("sweep")))["sweep"]
    assert s.columns["value"] == [0.5, 2.5]
    assert s.columns["p1_R"][1] == pytest.approx(25 / 51, abs=1e-10)


def test_metadata_echoes_resolved_config():
    cfg = _cfg("fig2")
    s = run(cfg)[0]
    assert s.metadata["config"]["params"] == SystemParams.optimal(2.5).as_dict()
    assert s.metadata["config"]["tolerance"] == 1e-10
    assert s.metadata["config"]["grid"]["samples"] == 161


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_round_trip(tmp_path, fmt):
    for scenario in ("fig2", "modes"):
        for s in run(_cfg(scenario)):
            path = write_series(s, tmp_path, fmt)[0]
            back = read_series(path)
            assert back.name == s.name
            assert back.columns == {k: [float(x) for x in v] for k, v in s.columns.items()}
            assert back.metadata == json.loads(json.dumps(s.metadata))


def test_plot_series_invariants():
    with pytest.raises(ValueError):
        PlotSeries("x", {"a": [1.0, 2.0], "b": [1.0]}, {})
    with pytest.raises(ValueError):
        PlotSeries("x", {"a": [1.0, float("nan")]}, {})


@pytest.mark.parametrize(
    "data",
    [
        {"bogus": 1},
        {"params": {"kappa": 1.0, "lambda": 2.0}},
        {"grid": {"k_min": 1.0, "k_max": 0.0, "samples": 10}},
        {"grid": {"k_min": 0.0, "k_max": 1.0, "samples": 1}},
        {"rounds": 0},
        {"tolerance": -1.0},
        {"output": {"format": "xml"}},
        {"kappa_in_grid": [0.1, -1.0]},
    ],
)
def test_config_rejected(data):
    with pytest.raises((ConfigError, ValueError)):
        ScenarioConfig.from_dict("fig5", data).resolve()


def _write_config(tmp_path, scenario, extra=None):
    path = tmp_path / f"{scenario}.json"
    path.write_text(json.dumps({**FAST[scenario], **(extra or {})}))
    return path


@pytest.mark.parametrize("scenario", SCENARIOS)
def test_main_is_deterministic(tmp_path, scenario):
    cfg = _write_config(tmp_path, scenario)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main([scenario, "--config", str(cfg), "--out", str(a)]) == EXIT_OK
    assert main([scenario, "--config", str(cfg), "--out", str(b)]) == EXIT_OK
    files = sorted(p.name for p in a.iterdir())
    assert files and files == sorted(p.name for p in b.iterdir())
    for name in files:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_main_json_output(tmp_path):
    cfg = _write_config(tmp_path, "fig2")
    assert main(["fig2", "--config", str(cfg), "--out", str(tmp_path), "--format", "json"]) == EXIT_OK
    doc = json.loads((tmp_path / "fig2_transfer.json").read_text())
    assert set(doc) == {"name", "metadata", "columns"}


def test_main_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"unknown_key": 3}))
    assert main(["fig2", "--config", str(bad), "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "unknown" in capsys.readouterr().err
    assert main(["fig2", "--config", str(tmp_path / "missing.json")]) == EXIT_CONFIG
    bad.write_text("[1, 2]")
    assert main(["fig2", "--config", str(bad)]) == EXIT_CONFIG


def test_main_numeric_error(tmp_path):
    # an absurd tolerance with a tiny panel budget cannot converge
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"rounds": 12, "tolerance": 1e-300}))
    assert main(["fig4", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_NUMERIC


def test_workers_do_not_change_output(tmp_path):
    cfg = _write_config(tmp_path, "fig5")
    main(["fig5", "--config", str(cfg), "--out", str(tmp_path / "one")])
    main(["fig5", "--config", str(cfg), "--out", str(tmp_path / "four"), "--workers", "4"])
    for p in (tmp_path / "one").iterdir():
        assert p.read_bytes() == (tmp_path / "four" / p.name).read_bytes()
