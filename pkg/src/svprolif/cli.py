"""Command-line front end.

Usage::

    svprolif SUBCOMMAND [--config FILE] [--out DIR] [--seed N] [--workers N]
                        [--trials N] [--tol-kkt X] [--tol-sv X] [--set key=value ...]
                        [--no-plots] [-v]

Values from ``--config`` are overridden by ``--set`` pairs, which are in turn
overridden by the dedicated flags.  Every run writes its results plus
``manifest.json`` and ``config.json`` (the merged input, enough to re-run the
command) into the output directory.

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 inconsistent verdicts.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import logging
import math
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import buhot_fraction, thm1_bound, thm2_bound, thm3_bound, thm4_bound
from .config import SCHEMAS, SUBCOMMANDS, load_config, parse_override
from .ensembles import Dataset, load_dataset, save_dataset
from .equivalence import check_equivalence
from .errors import ConfigError, InconsistentVerdicts, NumericalFailure, PreconditionViolated
from .experiments import (
    CSV_COLUMNS,
    Cell,
    SweepConfig,
    _label_model,
    buhot_compare,
    concentration_probe,
    converse_probe,
    figure1_repro,
    make_dataset,
    proliferation_sweep,
)
from .kernel import gram
from .spectra import effective_dims, spectrum_from_json
from .svm import SolverOptions, solve_dual

log = logging.getLogger("svprolif")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_INCONSISTENT = 0, 1, 2, 3
OUT_ENV = "SVPROLIF_OUT"
DEFAULT_OUT_ROOT = "svprolif_runs"
MANIFEST_SCHEMA = 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="svprolif",
                                 description="Support vector proliferation experiments.")
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", help="JSON config file")
    ap.add_argument("--out", help=f"output directory (default ${OUT_ENV}/<subcommand> "
                                  f"or ./{DEFAULT_OUT_ROOT}/<subcommand>)")
    ap.add_argument("--seed", type=int, help="master seed (default 2021)")
    ap.add_argument("--workers", type=int, help="worker threads for Monte-Carlo trials")
    ap.add_argument("--trials", type=int, help="trials per cell")
    ap.add_argument("--tol-kkt", type=float, dest="tol_kkt", help="solver KKT tolerance")
    ap.add_argument("--tol-sv", type=float, dest="tol_sv", help="support-vector threshold")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override a config entry (dotted keys, JSON values)")
    ap.add_argument("--no-plots", action="store_true", help="skip PNG rendering")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def _overrides(args) -> list:
    pairs = [parse_override(s) for s in args.set]
    flag_pairs = [("seed", args.seed), ("workers", args.workers), ("trials", args.trials),
                  ("solver.tol_kkt", args.tol_kkt), ("solver.tol_sv", args.tol_sv)]
    pairs += [(k, v) for k, v in flag_pairs if v is not None]
    if args.no_plots and "render" in SCHEMAS[args.subcommand]:
        pairs.append(("render", False))
    return pairs


def _out_dir(args, cfg) -> Path:
    if args.out:
        out = Path(args.out)
    elif cfg.out:
        out = Path(cfg.out)
    else:
        out = Path(os.environ.get(OUT_ENV) or DEFAULT_OUT_ROOT) / cfg.subcommand
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from None
    if not os.access(out, os.W_OK):
        raise ConfigError(f"output directory {out} is not writable")
    return out


def _solver_opts(params) -> SolverOptions:
    s = params.get("solver", {})
    return SolverOptions(tol_kkt=s.get("tol_kkt"), max_sweeps=s.get("max_sweeps", 100_000),
                         tol_sv=s.get("tol_sv", 1e-6))


def _cell(c: dict) -> Cell:
    return Cell(c["n"], c["spectrum"], c["ensemble"], c["law"], c["labels"])


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "" if math.isnan(x) else repr(float(x))
    return str(x)


def write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    return path


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_json(path: Path, obj) -> Path:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, default=_json_default, allow_nan=True)
        fh.write("\n")
    return path


# ---------------------------------------------------------------- single instance


def _dataset(cfg) -> Dataset:
    p = cfg.params
    if "data" in p:
        data = p["data"]
        spectrum = spectrum_from_json(data["spectrum"], n=len(data["Z"]))
        return Dataset(np.asarray(data["Z"], dtype=np.float64), spectrum,
                       np.asarray(data["y"], dtype=np.float64), {"source": "inline"}, "inline", "")
    if "dataset" in p:
        try:
            return load_dataset(p["dataset"])
        except (OSError, KeyError, ValueError) as exc:
            raise ConfigError(f"/dataset: cannot load {p['dataset']}: {exc}") from None
    return make_dataset(_cell(p["cell"]), cfg.seed, 0, p["trial"])


def cmd_gen(cfg, out, render):
    p = cfg.params
    ds = _dataset(cfg)
    lm = None
    if "cell" in p:
        cell = _cell(p["cell"])
        lm = _label_model(cell, cell.build_spectrum(), cfg.seed, 0)
    save_dataset(ds, out, lm, stem="dataset")
    print(f"wrote n={ds.n} d={ds.d} dataset to {out / 'dataset.json'}")
    return EXIT_OK, ["dataset.json", "dataset_features.csv", "dataset_labels.csv"]


def cmd_solve(cfg, out, render):
    ds = _dataset(cfg)
    sol = solve_dual(ds, gram(ds), _solver_opts(cfg.params))
    write_json(out / "solution.json", sol.to_json())
    d = sol.diagnostics
    print(f"support vectors: {sol.sv_set.size}/{ds.n}  margin={sol.gamma_star:.6g}  "
          f"sweeps={d['iterations']}  kkt={d['max_kkt_violation']:.3g}  "
          f"converged={d['converged']}")
    return EXIT_OK, ["solution.json"]


def _check_table(rows) -> str:
    header = ("i", "y", "beta", "y*beta", "h", "s", "SV")
    cells = [header] + [tuple(_cell_str(v) for v in r) for r in rows]
    widths = [max(len(c[j]) for c in cells) for j in range(len(header))]
    return "\n".join("  ".join(c[j].rjust(widths[j]) for j in range(len(header))) for c in cells)


def _cell_str(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, (bool, np.bool_)):
        return "yes" if v else "no"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.6g}"


def cmd_check(cfg, out, render):
    p = cfg.params
    ds = _dataset(cfg)
    gf = gram(ds)
    opts = _solver_opts(p)
    if gf.singular_flag:
        # conditions 2 and 3 need an invertible Gram matrix; only the solver verdict remains
        sol = solve_dual(ds, gf, opts)
        all_sv = bool(sol.sv_set.size == ds.n)
        sv = np.isin(np.arange(ds.n), sol.sv_set)
        rows = [(i, int(ds.y[i]), sol.beta_star[i], None, None, None, sv[i]) for i in range(ds.n)]
        report = {"n": ds.n, "gram_singular": True,
                  "verdicts": {"cond1_all_sv": all_sv, "cond2_all_positive": None,
                               "cond3_all_below_one": None},
                  "n_sv": int(sol.sv_set.size), "solution": sol.to_json()}
        note = " (Gram matrix singular: solver verdict only)"
    else:
        rep = check_equivalence(ds, gf, run_solver=p["run_solver"], opts=opts,
                                tol_amb=p["tol_amb"], strict=True)
        all_sv = rep.all_support_vectors
        if rep.cond1_all_sv is not None:
            all_sv = rep.cond1_all_sv
        sv = (np.isin(np.arange(ds.n), rep.solution.sv_set) if rep.solution is not None
              else [None] * ds.n)
        rows = [(i, int(ds.y[i]), rep.beta[i], rep.signed_margins[i], rep.loo_stats[i],
                 rep.schur[i], sv[i]) for i in range(ds.n)]
        report = dict(rep.to_json(), gram_singular=False, ambiguous_instance=rep.is_ambiguous,
                      condition_estimate=gf.condition_estimate)
        if rep.solution is not None:
            report["solution"] = rep.solution.to_json()
        note = " (ambiguous: within tolerance of the boundary)" if rep.is_ambiguous else ""
    report["all_support_vectors"] = all_sv
    write_json(out / "check.json", report)
    print(f"all support vectors: {'true' if all_sv else 'false'}{note}")
    print(_check_table(rows))
    return EXIT_OK, ["check.json"]


# ---------------------------------------------------------------- experiments


def cmd_sweep(cfg, out, render):
    p = cfg.params
    cells = tuple(_cell(c) for c in p["cells"])
    sc = SweepConfig(cells, p["trials"], cfg.seed, p["mode"], _solver_opts(p), p["tol_amb"],
                     p["audit"])
    results = proliferation_sweep(sc, cfg.workers)
    write_csv(out / "sweep.csv", CSV_COLUMNS, [r.csv_row() for r in results])
    write_json(out / "sweep.json", {"mode": p["mode"], "trials": p["trials"], "seed": cfg.seed,
                                    "cells": [dict(c, result=r.to_json())
                                              for c, r in zip(p["cells"], results)]})
    files = ["sweep.csv", "sweep.json"]
    if render:
        from .plotting import plot_sweep
        plot_sweep(results, out / "sweep.png")
        files.append("sweep.png")
    for c, r in zip(p["cells"], results):
        print(f"n={r.n:<5d} d={r.d:<7d} {r.ensemble}/{r.law:<14s} p_hat={_cell_str(r.p_hat):>9s} "
              f"+-{_cell_str(r.ci_halfwidth):<9s} singular={r.singular} ambiguous={r.ambiguous}")
    bad = sum(r.inconsistent for r in results)
    if bad:
        log.error("%d trial(s) with disagreeing verdicts", bad)
        return EXIT_INCONSISTENT, files
    return EXIT_OK, files


def cmd_converse(cfg, out, render):
    p = cfg.params
    table = converse_probe(p["n_list"], p["d_over_n_list"], p["trials"], cfg.seed, p["labels"],
                           cfg.workers)
    cols = ["n", "d", "trials", "valid", "singular", "ambiguous", "q_hat", "ci_halfwidth",
            "thm3_bound", "consistent"]
    write_csv(out / "converse.csv", cols, [[r[c] for c in cols] for r in table])
    write_json(out / "converse.json", table)
    files = ["converse.csv", "converse.json"]
    if render:
        from .plotting import plot_converse
        plot_converse(table, out / "converse.png")
        files.append("converse.png")
    for r in table:
        print(f"n={r['n']:<5d} d={r['d']:<6d} q_hat={r['q_hat']:.4f} +-{r['ci_halfwidth']:.4f} "
              f"bound={r['thm3_bound']:.4f} consistent={r['consistent']}")
    return EXIT_OK, files


def cmd_buhot(cfg, out, render):
    p = cfg.params
    table = buhot_compare(p["delta_list"], p["n"], p["trials"], cfg.seed, _solver_opts(p),
                          workers=cfg.workers)
    cols = ["delta", "n", "d", "trials", "sv_fraction_mean", "sv_fraction_std", "buhot_value",
            "abs_gap", "resamples"]
    write_csv(out / "buhot.csv", cols, [[r[c] for c in cols] for r in table])
    write_json(out / "buhot.json", table)
    files = ["buhot.csv", "buhot.json"]
    if render:
        from .plotting import plot_buhot
        plot_buhot(table, out / "buhot.png")
        files.append("buhot.png")
    for r in table:
        print(f"delta={r['delta']:<6g} d={r['d']:<6d} mean={r['sv_fraction_mean']:.4f} "
              f"formula={r['buhot_value']:.4f} gap={r['abs_gap']:.4f}")
    return EXIT_OK, files


def cmd_concentration(cfg, out, render):
    p = cfg.params
    spectrum = spectrum_from_json(p["spectrum"], n=p["n"])
    res = concentration_probe(p["n"], spectrum, p["law"], p["trials"], cfg.seed, cfg.workers)
    write_json(out / "concentration.json", res)
    print(json.dumps(res, indent=2, default=_json_default))
    return EXIT_OK, ["concentration.json"]


def cmd_figure1(cfg, out, render):
    p = cfg.params
    res = figure1_repro(p["n"], p["k"], p["decays"], p["seeds"], cfg.seed, p["labels"],
                        _solver_opts(p), workers=cfg.workers)
    runs = res["runs"]
    cols = list(runs[0].keys())
    write_csv(out / "figure1_runs.csv", cols, [[r[c] for c in cols] for r in runs])
    write_json(out / "figure1_summary.json",
               {"n": res["n"], "k": res["k"], "summary": list(res["summary"].values())})
    files = ["figure1_runs.csv", "figure1_summary.json"]
    curve_files, train_files = {}, {}
    for decay, c in sorted(res["curves"].items()):
        tag = f"{decay:g}".replace(".", "p")
        cf, tf = f"figure1_curve_decay{tag}.csv", f"figure1_train_decay{tag}.csv"
        write_csv(out / cf, ["t", "svm", "interp"], zip(c["t"], c["svm"], c["interp"]))
        write_csv(out / tf, ["t", "y", "sv"],
                  zip(c["t_train"], c["y_train"].astype(int), c["sv_mask"].astype(int)))
        curve_files[decay], train_files[decay] = cf, tf
        files += [cf, tf]
    from .plotting import write_gnuplot_figure1
    write_gnuplot_figure1(curve_files, train_files, out / "figure1.gp")
    files.append("figure1.gp")
    if render:
        from .plotting import plot_figure1
        plot_figure1(res["curves"], out / "figure1.png")
        files.append("figure1.png")
    for s in res["summary"].values():
        print(f"decay={s['decay']:g}: all-SV and SVM==interpolation in "
              f"{100 * s['frac_all_sv_and_equal']:.0f}% of {s['seeds']} seeds; "
              f"median #SV={s['median_n_sv']:g}; d_inf={s['lambda_d_inf']:.4f} "
              f"d2={s['lambda_d2']:.3f}")
    return EXIT_OK, files


def cmd_bounds(cfg, out, render):
    p = cfg.params
    results = []
    for q in p.get("thm1", []):
        if "spectrum" in q:
            ed = effective_dims(spectrum_from_json(q["spectrum"], n=q["n"]))
            d2, dinf = ed.d2, ed.d_inf
        else:
            d2, dinf = q["d2"], q["d_inf"]
        results.append(thm1_bound(q["n"], d2, dinf, q["v"], q["C"], q["c"]).to_json())
    for q in p.get("thm2", []):
        if "spectrum" in q:
            s = spectrum_from_json(q["spectrum"], n=q["n"])
            d, dinf = s.d, effective_dims(s).d_inf
        else:
            d, dinf = q["d"], q["d_inf"]
        results.append(thm2_bound(q["n"], d, dinf, q["C"], q["c"]).to_json())
    for q in p.get("thm3", []):
        results.append(thm3_bound(q["n"], q["d"]).to_json())
    for q in p.get("thm4", []):
        s = spectrum_from_json(q["spectrum"], n=q["n"])
        results.append(thm4_bound(q["n"], s, q["c"], q["c_prime"]).to_json())
    for q in p.get("buhot", []):
        results.append(dict(buhot_fraction(q["delta"]), name="buhot"))
    write_json(out / "bounds.json", results)
    print(json.dumps(results, indent=2, default=_json_default))
    return EXIT_OK, ["bounds.json"]


COMMANDS = {"gen": cmd_gen, "solve": cmd_solve, "check": cmd_check, "sweep": cmd_sweep,
            "converse": cmd_converse, "buhot": cmd_buhot, "concentration": cmd_concentration,
            "figure1": cmd_figure1, "bounds": cmd_bounds}


def _manifest(cfg, argv, started, wall, code, files, error=None) -> dict:
    return {
        "schema": MANIFEST_SCHEMA,
        "tool": "svprolif",
        "version": __version__,
        "subcommand": cfg.subcommand,
        "argv": list(argv),
        "seed": cfg.seed,
        "workers": cfg.workers,
        "config_file": cfg.config_path,
        "overrides": cfg.overrides,
        "config": cfg.rerun_config(),
        "resolved": cfg.params,
        "rerun": f"svprolif {cfg.subcommand} --config config.json",
        "started_utc": started,
        "wall_time_s": wall,
        "exit_code": code,
        "error": error,
        "outputs": files,
        "environment": {"python": platform.python_version(), "numpy": np.__version__,
                        "platform": platform.platform()},
    }


def run(argv=None) -> int:
    """Parse ``argv``, run one subcommand and return its exit code."""
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config, args.subcommand, _overrides(args))
        out = _out_dir(args, cfg)
    except ConfigError as exc:
        print(f"svprolif: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    render = bool(cfg.params.get("render", True)) and not args.no_plots
    started = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    t0 = time.perf_counter()
    files, error = [], None
    try:
        code, files = COMMANDS[cfg.subcommand](cfg, out, render)
    except ConfigError as exc:
        code, error = EXIT_CONFIG, f"configuration error: {exc}"
    except InconsistentVerdicts as exc:
        code, error = EXIT_INCONSISTENT, f"inconsistent verdicts: {exc}"
    except (NumericalFailure, PreconditionViolated) as exc:
        code, error = EXIT_NUMERICAL, f"numerical failure ({type(exc).__name__}): {exc}"
    if error:
        print(f"svprolif: {error}", file=sys.stderr)
    write_json(out / "config.json", cfg.rerun_config())
    write_json(out / "manifest.json",
               _manifest(cfg, argv, started, time.perf_counter() - t0, code, files, error))
    log.info("wrote %s", out / "manifest.json")
    return code


def main(argv=None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
