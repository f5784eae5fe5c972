"""Command-line front end: configuration, runs, CSV/manifest output, figures.

Subcommands
-----------
simulate        time integration with conservation and norm diagnostics
dno-verify      amplitude-scaling certification of the operator series
resonance-scan  location of the resonant sets of the interaction phases
symbol-order    vanishing-order fits of the bilinear symbols
cm-probe        dyadic uniformity probe of the bilinear operator bounds
decay-fit       sup-norm decay of the free group against weighted norms
report          render figures and plot data from a finished run directory

Every run writes a manifest (config echo, seed, package version) next to its
delimited outputs; identical config and seed reproduce the data files byte
for byte.  Exit codes: 0 success, 2 configuration error, 3 numerical failure
(partial outputs are kept).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import dispersive, dno, evolution, pseudo_product, resonance, spectral  # noqa: F401

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# small io helpers
# ---------------------------------------------------------------------------


def _atomic_write(path: Path, text: str):
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path: Path, rows: list[dict], columns: list[tuple[str, str]]):
    """Delimited output; each column carries a description comment line."""
    lines = [f"# column {name}: {desc}" for name, desc in columns]
    lines.append(",".join(name for name, _ in columns))
    for row in rows:
        lines.append(",".join(_fmt(row.get(name, "")) for name, _ in columns))
    _atomic_write(path, "\n".join(lines) + "\n")


def write_manifest(outdir: Path, subcommand: str, config: dict, seed: int | None):
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "subcommand": subcommand,
        "artifact_version": __version__,
        "seed": seed,
        "config": config,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    _atomic_write(outdir / "manifest.json", json.dumps(manifest, indent=1, sort_keys=True))


def _load_config(args, defaults: dict) -> dict:
    cfg = dict(defaults)
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            loaded = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
        unknown = set(loaded) - set(defaults) - {"schema_version"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    return cfg


def _outdir(args, subcommand: str) -> Path:
    out = Path(getattr(args, "output_dir", None) or f"capwave_out/{subcommand}")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _require(cond: bool, message: str):
    if not cond:
        raise ConfigError(message)


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------


def _cmd_simulate(args) -> int:
    defaults = {
        "grid": {"n": 64, "L": 2.0 * np.pi},
        "init": {"kind": "gaussian", "h_amplitude": 1e-3, "psi_amplitude": 1e-3,
                 "width_fraction": 0.1, "k1": 2, "k2": 0},
        "dt": None,
        "t_end": 1.0,
        "dno_order": 3,
        "c_surface_tension": 2.0,
        "K": 2,
        "delta": 0.01,
        "iota": 0.05,
        "alpha": 0.05,
        "sample_every": 50,
        "gamma_level": 1,
        "snapshot_every": 0,
        "hard_horizon": False,
    }
    cfg = _load_config(args, defaults)
    gspec = cfg["grid"]
    _require(isinstance(gspec.get("n"), int) and gspec["n"] >= 8, "grid.n must be an integer >= 8")
    grid = spectral.GridSpec(int(gspec["n"]), float(gspec.get("L", 2 * np.pi)))
    state = _initial_state(grid, cfg["init"])
    dt = float(cfg["dt"]) if cfg["dt"] else evolution.default_dt(grid)
    ecfg = evolution.EvolutionConfig(
        dt=dt, t_end=float(cfg["t_end"]), dno_order=int(cfg["dno_order"]),
        c_surface_tension=float(cfg["c_surface_tension"]),
        sample_every=int(cfg["sample_every"]), K=int(cfg["K"]),
        delta=float(cfg["delta"]), iota=float(cfg["iota"]), alpha=float(cfg["alpha"]),
        gamma_level=int(cfg["gamma_level"]), hard_horizon=bool(cfg["hard_horizon"]),
    )
    outdir = _outdir(args, "simulate")
    write_manifest(outdir, "simulate", cfg, None)
    rows = evolution.run(state, ecfg)
    e0 = rows[0].energy
    table = []
    for r in rows:
        entry = {
            "t": r.t,
            "energy": r.energy,
            "energy_drift": abs(r.energy - e0) / max(abs(e0), 1e-300),
            "sobolev": r.sobolev,
            "hermitian_defect": r.hermitian_defect,
            "horizon_flag": r.horizon_flag,
        }
        entry.update(r.weighted)
        entry.update(r.sup)
        table.append(entry)
    columns = [
        ("t", "sample time"),
        ("energy", "conserved surface energy: kinetic/2 + area excess"),
        ("energy_drift", "relative deviation from the initial energy"),
        ("sobolev", f"Sobolev norm of Lambda^(1/2) u at index {ecfg.sobolev_s}"),
        ("hermitian_defect", "reality defect of the complex state (logged, not repaired)"),
        ("horizon_flag", "1 once the fastest resolved wave could have crossed half the box"),
    ]
    extra = sorted({k for row in table for k in row} - {c[0] for c in columns})
    for name in extra:
        if name.startswith("gamma_"):
            columns.append((name, "weighted-derivative L2 norm, word " + name[6:]))
        elif name.endswith("_scaled"):
            columns.append((name, "sup norm scaled by (1+t)^(1-2 beta/3)"))
        else:
            columns.append((name, "weighted sup norm of u"))
    write_csv(outdir / "timeseries.csv", table, columns)
    if int(cfg["snapshot_every"]):
        spectral.save_field(state.h, outdir / "h_final", name="h", time=rows[-1].t)
        spectral.save_field(state.psi, outdir / "psi_final", name="psi", time=rows[-1].t)
    print(f"simulate: {len(table)} samples -> {outdir}/timeseries.csv")
    return 0


def _initial_state(grid: spectral.GridSpec, init: dict) -> dno.SurfaceState:
    kind = init.get("kind", "gaussian")
    X1, X2 = grid.coords
    if kind == "gaussian":
        w = float(init.get("width_fraction", 0.1)) * grid.box_length
        k1, k2 = float(init.get("k1", 2)), float(init.get("k2", 0))
        envelope = np.exp(-(X1**2 + X2**2) / (2.0 * w**2))
        h = float(init.get("h_amplitude", 1e-3)) * envelope * np.cos(k1 * X1 + k2 * X2)
        psi = float(init.get("psi_amplitude", 1e-3)) * envelope * np.sin(k1 * X2 - k2 * X1)
        return dno.SurfaceState(spectral.forward_transform(h, grid),
                                spectral.forward_transform(psi, grid))
    if kind == "mode":
        m1, m2 = int(init.get("m1", 1)), int(init.get("m2", 0))
        amp = float(init.get("amplitude", 1e-6))
        scale = 2.0 * np.pi / grid.box_length
        h = amp * np.cos(scale * (m1 * X1 + m2 * X2))
        return dno.SurfaceState(spectral.forward_transform(h, grid),
                                spectral.SpectralField.zero(grid))
    if kind == "file":
        h, _ = spectral.load_field(init["h_path"])
        psi, _ = spectral.load_field(init["psi_path"])
        return dno.SurfaceState(h, psi)
    raise ConfigError(f"unknown init kind {kind!r}")


def _cmd_dno_verify(args) -> int:
    defaults = {
        "n": 64, "L": 2.0 * np.pi, "orders": [1, 2],
        "epsilons": [0.1, 0.05, 0.025], "layers": 256, "depth": None,
        "h_width_fraction": 1.0 / 9.0, "f_width_fraction": 1.0 / 8.0, "f_k": 2.0,
    }
    cfg = _load_config(args, defaults)
    if args.epsilons:
        cfg["epsilons"] = [float(x) for x in args.epsilons.split(",")]
    if args.orders:
        cfg["orders"] = [int(x) for x in args.orders.split(",")]
    if args.layers:
        cfg["layers"] = int(args.layers)
    grid = spectral.GridSpec(int(cfg["n"]), float(cfg["L"]))
    X1, X2 = grid.coords
    L = grid.box_length
    wh = float(cfg["h_width_fraction"]) * L
    wf = float(cfg["f_width_fraction"]) * L
    h_shape = spectral.forward_transform(np.exp(-(X1**2 + X2**2) / (2 * wh**2)), grid)
    f = spectral.forward_transform(
        np.exp(-((X1 - 0.3) ** 2 + (X2 + 0.25) ** 2) / (2 * wf**2))
        * np.cos(float(cfg["f_k"]) * X1 + X2), grid)
    dcfg = dno.DnoConfig(oracle_depth=cfg["depth"] or 2.0 * np.pi,
                         oracle_layers=int(cfg["layers"]))
    outdir = _outdir(args, "dno-verify")
    write_manifest(outdir, "dno-verify", cfg, None)
    result = dno.series_oracle_convergence(h_shape, f, tuple(cfg["orders"]),
                                           tuple(cfg["epsilons"]), dcfg)
    write_csv(outdir / "dno_verify.csv", result["rows"], [
        ("epsilon", "surface slope max |grad h|"),
        ("order", "series truncation order N"),
        ("series_vs_oracle_rel_err", "relative L2 gap to the bias-corrected elliptic solve"),
        ("slope_fit", "log-log slope over the amplitude sweep (expect N+1)"),
    ])
    for n_ord, slope in result["slopes"].items():
        print(f"dno-verify: order {n_ord} slope {slope:.3f} (expect {n_ord + 1})")
    return 0


def _cmd_resonance_scan(args) -> int:
    signs_list = ["pp", "pm", "mm"] if args.signs == "all" else [args.signs]
    _require(all(s in ("pp", "pm", "mm") for s in signs_list),
             "signs must be pp, pm, mm or all")
    rng = np.random.default_rng(args.seed)
    rows = []
    for signs in signs_list:
        res = resonance.resonant_sets(signs, rng)
        for set_name in ("time", "space", "joint"):
            r = res[set_name]
            rows.append({
                "signs": signs, "set": set_name, "residual": r["min"],
                "argmin_xi1": r["argmin_xi"][0], "argmin_xi2": r["argmin_xi"][1],
                "argmin_eta1": r["eta"][0], "argmin_eta2": r["eta"][1],
            })
    outdir = _outdir(args, "resonance-scan")
    write_manifest(outdir, "resonance-scan", {"signs": args.signs}, args.seed)
    write_csv(outdir / "resonant_sets.csv", rows, [
        ("signs", "interaction channel sign pair"),
        ("set", "time = {phi=0}, space = {grad_eta phi=0}, joint = intersection"),
        ("residual", "minimum of the set's defining quantity over the normalized scan"),
        ("argmin_xi1", "output frequency at the minimizer, component 1"),
        ("argmin_xi2", "output frequency at the minimizer, component 2"),
        ("argmin_eta1", "input frequency (normalized), component 1"),
        ("argmin_eta2", "input frequency (normalized), component 2"),
    ])
    for row in rows:
        print(f"resonance-scan: {row['signs']} {row['set']}: residual {row['residual']:.3e}")
    return 0


_REGIMES = ("xi_small", "eta_small", "diff_small")


def _cmd_symbol_order(args) -> int:
    names = [args.symbol] if args.symbol != "all" else \
        ["m1", "m2", "m1_swapped", "m_pp", "m_mm", "m_pm", "nf_pp", "ibp_pm"]
    regimes = [args.regime] if args.regime != "all" else list(_REGIMES)
    _require(all(r in _REGIMES for r in regimes), f"regime must be one of {_REGIMES} or all")
    rows = []
    for name in names:
        sym = resonance.named_symbol(name)
        fn = sym if name != "ibp_pm" else resonance.ibp_symbols("pm")["eta_ibp_norm"]
        for regime in regimes:
            fit = resonance.vanishing_order_fit(fn, regime, decades=int(args.decades))
            declared = sym.declared_class[1 + _REGIMES.index(regime)]
            rows.append({"symbol": name, "regime": regime, "slope": fit["slope"],
                         "r_squared": fit["r_squared"], "n_samples": fit["n_samples"],
                         "declared": declared})
    outdir = _outdir(args, "symbol-order")
    write_manifest(outdir, "symbol-order",
                   {"symbol": args.symbol, "regime": args.regime, "decades": args.decades}, None)
    write_csv(outdir / "symbol_order.csv", rows, [
        ("symbol", "bilinear symbol name"),
        ("regime", "which frequency is sent to zero"),
        ("slope", "fitted vanishing order (log-log envelope slope)"),
        ("r_squared", "fit quality"),
        ("n_samples", "number of scales in the fit"),
        ("declared", "declared vanishing order of the symbol class"),
    ])
    bad = [r for r in rows if r["slope"] < r["declared"] - 0.1]
    for row in rows:
        print(f"symbol-order: {row['symbol']:12s} {row['regime']:10s}"
              f" slope {row['slope']:.3f} (declared {row['declared']})")
    if bad:
        print(f"symbol-order: {len(bad)} fits below the declared class", file=sys.stderr)
        return 3
    return 0


def _cmd_cm_probe(args) -> int:
    defaults = {
        # the 4 pi box doubles the ring density of the lowest dyadic window,
        # which a 2 pi box undersamples
        "symbol": "m2", "n": 64, "L": 4.0 * np.pi, "j_range": [0, 1, 2, 3],
        "pqr": [[2, 2, "inf"], [2, "inf", 2]], "trials": 4,
    }
    cfg = _load_config(args, defaults)
    grid = spectral.GridSpec(int(cfg["n"]), float(cfg["L"]), dealias_fraction=1.0)
    sym = resonance.named_symbol(cfg["symbol"])
    rng = np.random.default_rng(args.seed)
    pqr = [tuple(np.inf if x == "inf" else float(x) for x in triple)
           for triple in cfg["pqr"]]
    result = pseudo_product.cm_bound_probe(sym, sym.declared_class, cfg["j_range"],
                                           pqr, int(cfg["trials"]), grid, rng)
    outdir = _outdir(args, "cm-probe")
    write_manifest(outdir, "cm-probe", cfg, args.seed)
    write_csv(outdir / "cm_probe.csv", result["rows"], [
        ("j", "dyadic level of the symbol window"),
        ("p", "output Lebesgue exponent"),
        ("q", "first input exponent"),
        ("r", "second input exponent"),
        ("max_ratio", "max over trials of ||T(f,g)||_p / (2^(beta j) ||f||_q ||g||_r)"),
        ("trend_slope", "log2 slope of the max ratio across dyadic levels"),
    ])
    for pqr_key, slope in result["trend_slopes"].items():
        print(f"cm-probe: {cfg['symbol']} {pqr_key}: trend slope {slope:+.3f}")
    return 0


def _cmd_decay_fit(args) -> int:
    defaults = {
        "profile": {"kind": "power_bump", "width": 0.5},
        "t_grid": {"lo": 1.0, "hi": 100.0, "n": 13},
        "r_scan": {"n": 60},
        "beta_list": [0.0, 0.25, 0.5],
        "iota": 0.05,
        "m_max": 0,
    }
    cfg = _load_config(args, defaults)
    times = np.geomspace(float(cfg["t_grid"]["lo"]), float(cfg["t_grid"]["hi"]),
                         int(cfg["t_grid"]["n"]))
    outdir = _outdir(args, "decay-fit")
    write_manifest(outdir, "decay-fit", cfg, None)
    summary = {}
    for beta in cfg["beta_list"]:
        beta = float(beta)
        prof_cfg = cfg["profile"]
        if prof_cfg.get("kind", "power_bump") == "power_bump":
            prof = dispersive.power_bump_profile(
                prof_cfg.get("power", -0.5 - beta), width=float(prof_cfg.get("width", 0.5)))
        elif prof_cfg["kind"] == "gaussian":
            prof = dispersive.gaussian_profile(float(prof_cfg.get("width", 1.0)))
        elif prof_cfg["kind"] == "field":
            fld, _ = spectral.load_field(prof_cfg["path"])
            horizon = evolution.box_horizon(fld.grid)
            if times[-1] > horizon:
                raise ConfigError(
                    f"grid-based data is only comparable to the free flow up to "
                    f"the box-exit horizon {horizon:.3g}; requested t up to {times[-1]:.3g}")
            dec = dispersive.circular_harmonics(fld, int(cfg["m_max"]) or 8,
                                                np.geomspace(1e-3, fld.grid.k_abs.max(), 300))
            prof = None
        else:
            raise ConfigError(f"unknown profile kind {prof_cfg.get('kind')!r}")
        if prof is not None:
            dec = dispersive.HarmonicDecomposition({0: prof})
        report = dispersive.sup_norm_decay(dec, times, beta=beta,
                                           n_r=int(cfg["r_scan"]["n"]),
                                           iota=float(cfg["iota"]))
        rows = [{"t": t, "sup_norm": s, "rhs_norm": report.rhs_norm, "ratio": r}
                for t, s, r in zip(report.times, report.sup_norms, report.ratios)]
        tag = f"beta_{beta:g}".replace(".", "p")
        write_csv(outdir / f"decay_{tag}.csv", rows, [
            ("t", "evaluation time"),
            ("sup_norm", "grid-of-scan sup of |exp(i t Lambda^(3/2)) f|"),
            ("rhs_norm", "weighted norm sum ||Y Lam^(beta-1/2) S^j O^k f||_2"),
            ("ratio", "sup * t^(1 - 2 beta / 3) / rhs_norm"),
        ])
        summary[f"beta_{beta:g}"] = {
            "fitted_exponent": report.fitted_exponent,
            "expected_exponent": -1.0 + 2.0 * beta / 3.0,
            "ratio_max": report.ratio_max,
            "rhs_norm": report.rhs_norm,
        }
        print(f"decay-fit: beta={beta:g} exponent {report.fitted_exponent:.3f} "
              f"(expect {-1 + 2 * beta / 3:.3f}), ratio_max {report.ratio_max:.3g}")
    _atomic_write(outdir / "summary.json", json.dumps(summary, indent=1, sort_keys=True))
    return 0


# ---------------------------------------------------------------------------
# plot data and figures
# ---------------------------------------------------------------------------


def emit_plot_data(rows: list[dict], kind: str, outdir: Path, stem: str) -> list[Path]:
    """Whitespace table plus a command-script stub for the figure kind."""
    if not rows:
        raise ValueError("empty report")
    outdir.mkdir(parents=True, exist_ok=True)
    dat = outdir / f"{stem}.dat"
    gp = outdir / f"{stem}.gp"
    if kind == "decay_loglog":
        header = "# t sup_norm fit_line"
        ts = np.array([r["t"] for r in rows])
        sups = np.array([r["sup_norm"] for r in rows])
        slope, intercept = np.polyfit(np.log(ts), np.log(sups), 1)
        fit = np.exp(intercept) * ts**slope
        lines = [f"{_fmt(t)} {_fmt(s)} {_fmt(fl)}" for t, s, fl in zip(ts, sups, fit)]
        plot = (f"set logscale xy\nset xlabel 't'\nset ylabel 'sup norm'\n"
                f"plot '{dat.name}' u 1:2 w p t 'measured', '' u 1:3 w l t 'slope {slope:.3f}'\n")
    elif kind == "energy_drift":
        header = "# t drift"
        lines = [f"{_fmt(r['t'])} {_fmt(r['energy_drift'])}" for r in rows]
        plot = (f"set xlabel 't'\nset ylabel 'relative energy drift'\nset logscale y\n"
                f"plot '{dat.name}' u 1:2 w lp t 'drift'\n")
    elif kind == "order_fit":
        header = "# log_epsilon log_err order"
        lines = [f"{_fmt(np.log(r['epsilon']))} "
                 f"{_fmt(np.log(r['series_vs_oracle_rel_err']))} {_fmt(r['order'])}"
                 for r in rows]
        plot = (f"set xlabel 'log eps'\nset ylabel 'log err'\n"
                f"plot '{dat.name}' u 1:2 w p t 'gap'\n")
    else:
        raise ValueError(f"unknown plot kind {kind!r}")
    _atomic_write(dat, header + "\n" + "\n".join(lines) + "\n")
    _atomic_write(gp, plot)
    return [dat, gp]


def _read_csv(path: Path) -> list[dict]:
    rows = []
    names = None
    for line in path.read_text().splitlines():
        if line.startswith("#") or not line.strip():
            continue
        if names is None:
            names = line.split(",")
            continue
        vals = line.split(",")
        row = {}
        for k, v in zip(names, vals):
            try:
                row[k] = float(v)
            except ValueError:
                row[k] = v
        rows.append(row)
    return rows


def _render_figure(kind: str, rows: list[dict], png: Path):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5.0, 3.4), constrained_layout=True)
    if kind == "decay_loglog":
        ts = [r["t"] for r in rows]
        sups = [r["sup_norm"] for r in rows]
        slope = np.polyfit(np.log(ts), np.log(sups), 1)[0]
        ax.loglog(ts, sups, "o", ms=4, label="measured sup")
        ax.loglog(ts, np.exp(np.polyval(np.polyfit(np.log(ts), np.log(sups), 1), np.log(ts))),
                  "-", lw=1, label=f"slope {slope:.3f}")
        ax.set_xlabel("t")
        ax.set_ylabel("sup norm")
    elif kind == "energy_drift":
        ts = [r["t"] for r in rows]
        ax.semilogy(ts, [max(r["energy_drift"], 1e-18) for r in rows], "-", lw=1)
        ax.set_xlabel("t")
        ax.set_ylabel("relative energy drift")
    elif kind == "order_fit":
        for order in sorted({r["order"] for r in rows}):
            sel = [r for r in rows if r["order"] == order]
            eps = [r["epsilon"] for r in sel]
            err = [r["series_vs_oracle_rel_err"] for r in sel]
            ax.loglog(eps, err, "o-", ms=4, label=f"order {int(order)}")
        ax.set_xlabel("slope amplitude")
        ax.set_ylabel("series vs oracle gap")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.savefig(png, dpi=150)
    plt.close(fig)


def _cmd_report(args) -> int:
    run_dir = Path(args.run_dir)
    _require(run_dir.exists(), f"run directory not found: {run_dir}")
    made = []
    for csv_path in sorted(run_dir.glob("*.csv")):
        rows = _read_csv(csv_path)
        if not rows:
            continue
        stem = csv_path.stem
        if stem.startswith("decay"):
            kind = "decay_loglog"
        elif stem == "timeseries":
            kind = "energy_drift"
        elif stem == "dno_verify":
            kind = "order_fit"
        else:
            continue
        made += emit_plot_data(rows, kind, run_dir, stem)
        png = run_dir / f"{stem}.png"
        _render_figure(kind, rows, png)
        made.append(png)
    _require(bool(made), f"no renderable delimited outputs in {run_dir}")
    for p in made:
        print(f"report: wrote {p}")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="capwave",
        description="Pseudo-spectral laboratory for capillary surface waves.")
    parser.add_argument("--version", action="version", version=f"capwave {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--output-dir", help="directory for outputs (created if needed)")
        p.add_argument("--seed", type=int, default=0, help="seed for randomized probes")
        p.add_argument("--config", help="JSON configuration file")

    common(sub.add_parser("simulate", help="integrate the surface system"))
    p = sub.add_parser("dno-verify", help="series vs elliptic-solve scaling")
    common(p)
    p.add_argument("--epsilons", help="comma-separated slope amplitudes")
    p.add_argument("--orders", help="comma-separated truncation orders")
    p.add_argument("--layers", type=int, help="depth layers of the elliptic solve")
    p = sub.add_parser("resonance-scan", help="resonant-set location")
    common(p)
    p.add_argument("--signs", default="all", help="pp, pm, mm or all")
    p = sub.add_parser("symbol-order", help="vanishing-order fits")
    common(p)
    p.add_argument("--symbol", default="all")
    p.add_argument("--regime", default="all")
    p.add_argument("--decades", type=int, default=3)
    common(sub.add_parser("cm-probe", help="dyadic bilinear bound probe"))
    common(sub.add_parser("decay-fit", help="dispersive decay measurement"))
    p = sub.add_parser("report", help="render figures from a run directory")
    p.add_argument("--run-dir", required=True)
    return parser


_HANDLERS = {
    "simulate": _cmd_simulate,
    "dno-verify": _cmd_dno_verify,
    "resonance-scan": _cmd_resonance_scan,
    "symbol-order": _cmd_symbol_order,
    "cm-probe": _cmd_cm_probe,
    "decay-fit": _cmd_decay_fit,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    workers = os.environ.get("CAPWAVE_THREADS")
    try:
        if workers:
            import scipy.fft
            with scipy.fft.set_workers(max(1, int(workers))):
                return _HANDLERS[args.subcommand](args)
        return _HANDLERS[args.subcommand](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (FloatingPointError, dno.OracleConvergenceError, dno.SlopeGuardError,
            np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
