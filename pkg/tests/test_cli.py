"""Command-line plumbing: exit codes, manifests, determinism, figures."""

import json
from pathlib import Path

import numpy as np
import pytest

from capwave.cli import emit_plot_data, main, write_csv


def test_unknown_flag_exits_2():
    assert main(["symbol-order", "--bogus"]) == 2


def test_unknown_subcommand_exits_2():
    assert main(["frobnicate"]) == 2


def test_config_error_exits_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"no_such_key": 1}')
    assert main(["simulate", "--config", str(bad), "--output-dir", str(tmp_path / "o")]) == 2


def test_missing_config_file_exits_2(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "nope.json"),
                 "--output-dir", str(tmp_path / "o")]) == 2


def test_numerical_failure_exits_3(tmp_path):
    cfg = {"grid": {"n": 16, "L": 6.283185307179586},
           "init": {"kind": "gaussian", "h_amplitude": 0.2, "psi_amplitude": 8.0,
                    "width_fraction": 0.2, "k1": 5, "k2": 0},
           "dt": 0.5, "t_end": 40.0, "dno_order": 2, "sample_every": 10}
    p = tmp_path / "blow.json"
    p.write_text(json.dumps(cfg))
    assert main(["simulate", "--config", str(p), "--output-dir", str(tmp_path / "o")]) == 3


def test_symbol_order_run_and_manifest(tmp_path):
    out = tmp_path / "so"
    rc = main(["symbol-order", "--symbol", "m2", "--regime", "xi_small",
               "--output-dir", str(out)])
    assert rc == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["schema_version"] == 1
    assert manifest["subcommand"] == "symbol-order"
    table = (out / "symbol_order.csv").read_text()
    assert "# column slope:" in table


def test_resonance_scan_determinism(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        assert main(["resonance-scan", "--signs", "pm", "--seed", "3",
                     "--output-dir", str(out)]) == 0
    assert (out1 / "resonant_sets.csv").read_bytes() == (out2 / "resonant_sets.csv").read_bytes()


def test_simulate_writes_timeseries(tmp_path):
    cfg = {"grid": {"n": 16, "L": 6.283185307179586}, "dt": 0.02, "t_end": 0.1,
           "dno_order": 1, "sample_every": 2, "gamma_level": 0,
           "init": {"kind": "mode", "m1": 1, "m2": 0, "amplitude": 1e-6}}
    p = tmp_path / "sim.json"
    p.write_text(json.dumps(cfg))
    out = tmp_path / "sim"
    assert main(["simulate", "--config", str(p), "--output-dir", str(out)]) == 0
    lines = [l for l in (out / "timeseries.csv").read_text().splitlines()
             if l and not l.startswith("#")]
    header = lines[0].split(",")
    assert {"t", "energy", "energy_drift", "horizon_flag"} <= set(header)
    assert len(lines) > 2


def test_emit_plot_data_kinds(tmp_path):
    rows = [{"t": float(t), "sup_norm": 1.0 / t, "energy_drift": 1e-9 * t,
             "epsilon": 0.1 / t, "series_vs_oracle_rel_err": 1e-3 / t**2, "order": 1}
            for t in (1, 2, 4, 8)]
    for kind in ("decay_loglog", "energy_drift", "order_fit"):
        paths = emit_plot_data(rows, kind, tmp_path, f"x_{kind}")
        assert all(p.exists() for p in paths)
    with pytest.raises(ValueError):
        emit_plot_data([], "decay_loglog", tmp_path, "empty")
    with pytest.raises(ValueError):
        emit_plot_data(rows, "nope", tmp_path, "bad")


def test_report_renders_figures(tmp_path):
    run_dir = tmp_path / "run"
    run_dir.mkdir()
    rows = [{"t": float(t), "sup_norm": 2.0 / t, "rhs_norm": 3.0, "ratio": 0.1}
            for t in (1, 2, 4, 8, 16)]
    write_csv(run_dir / "decay_beta_0.csv", rows, [
        ("t", "time"), ("sup_norm", "sup"), ("rhs_norm", "rhs"), ("ratio", "ratio")])
    assert main(["report", "--run-dir", str(run_dir)]) == 0
    assert (run_dir / "decay_beta_0.png").exists()
    assert (run_dir / "decay_beta_0.dat").exists()
    assert (run_dir / "decay_beta_0.gp").exists()


def test_report_empty_dir_exits_2(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["report", "--run-dir", str(empty)]) == 2
