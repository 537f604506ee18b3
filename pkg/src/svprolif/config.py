"""Run configuration: JSON files plus command-line overrides.

Validation is strict.  Unknown keys are rejected (with the closest known key
as a hint), every numeric range is checked before any computation, and each
error names its location as a JSON pointer such as ``/cells/2/n``.
"""

from __future__ import annotations

import copy
import difflib
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

SUBCOMMANDS = ("gen", "solve", "check", "sweep", "converse", "buhot", "concentration",
               "figure1", "bounds")
DEFAULT_SEED = 2021
ENSEMBLES = ("independent", "haar", "trig")
LAWS = ("gaussian", "rademacher", "uniform_sqrt3")
LABEL_KINDS = ("fixed", "logistic", "probit", "one_bit", "multi_index", "random_signs")


@dataclass
class RunConfig:
    subcommand: str
    params: dict
    config_path: str | None = None
    out: str | None = None
    seed: int = DEFAULT_SEED
    workers: int = 1
    overrides: list = field(default_factory=list)
    raw: dict = field(default_factory=dict)

    def rerun_config(self) -> dict:
        """The merged input config (file plus overrides) that reproduces this run."""
        cfg = {k: v for k, v in self.raw.items() if k != "out"}
        return dict(cfg, subcommand=self.subcommand, seed=self.seed, workers=self.workers)

    def to_json(self) -> dict:
        return {"subcommand": self.subcommand, "config_path": self.config_path, "out": self.out,
                "seed": self.seed, "workers": self.workers, "overrides": self.overrides,
                "params": self.params}


def _err(path, msg):
    return ConfigError(f"{path or '/'}: {msg}")


def _check_keys(obj, allowed, path):
    if not isinstance(obj, dict):
        raise _err(path, f"expected an object, got {type(obj).__name__}")
    for key in obj:
        if key not in allowed:
            hint = difflib.get_close_matches(key, list(allowed), n=1)
            extra = f"; did you mean {hint[0]!r}?" if hint else ""
            raise _err(f"{path}/{key}", f"unknown key {key!r}{extra}")


def _int(v, path, lo=None, hi=None):
    if isinstance(v, bool) or not isinstance(v, int):
        if isinstance(v, float) and v.is_integer():
            v = int(v)
        else:
            raise _err(path, f"expected an integer, got {v!r}")
    if lo is not None and v < lo:
        raise _err(path, f"must be >= {lo}, got {v}")
    if hi is not None and v > hi:
        raise _err(path, f"must be <= {hi}, got {v}")
    return v


def _num(v, path, lo=None, hi=None, strict_lo=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise _err(path, f"expected a finite number, got {v!r}")
    v = float(v)
    if lo is not None and (v <= lo if strict_lo else v < lo):
        raise _err(path, f"must be {'>' if strict_lo else '>='} {lo}, got {v}")
    if hi is not None and v > hi:
        raise _err(path, f"must be <= {hi}, got {v}")
    return v


def _choice(v, options, path):
    if v not in options:
        raise _err(path, f"must be one of {list(options)}, got {v!r}")
    return v


def _bool(v, path):
    if not isinstance(v, bool):
        raise _err(path, f"expected true/false, got {v!r}")
    return v


def _num_list(v, path, **kw):
    if not isinstance(v, list) or not v:
        raise _err(path, "expected a non-empty list")
    return [_num(x, f"{path}/{i}", **kw) for i, x in enumerate(v)]


def _int_list(v, path, **kw):
    if not isinstance(v, list) or not v:
        raise _err(path, "expected a non-empty list")
    return [_int(x, f"{path}/{i}", **kw) for i, x in enumerate(v)]


def validate_spectrum(obj, path, n=None) -> dict:
    """Check a spectrum object and return it together with its dimension ``d``."""
    if isinstance(obj, dict) and "lambda" in obj:
        _check_keys(obj, {"d", "lambda"}, path)
        lam = _num_list(obj["lambda"], f"{path}/lambda", lo=0, strict_lo=True)
        if "d" in obj and _int(obj["d"], f"{path}/d") != len(lam):
            raise _err(f"{path}/d", f"d={obj['d']} does not match {len(lam)} lambda entries")
        return {"d": len(lam), "lambda": lam}
    if not isinstance(obj, dict) or "kind" not in obj:
        raise _err(path, "spectrum needs either 'lambda' or 'kind'")
    kind = _choice(obj["kind"], ("isotropic", "spiked", "bilevel", "trig"), f"{path}/kind")
    if kind == "isotropic":
        _check_keys(obj, {"kind", "d"}, path)
        return {"kind": kind, "d": _int(obj.get("d"), f"{path}/d", lo=1)}
    if kind == "spiked":
        _check_keys(obj, {"kind", "d", "k", "a"}, path)
        d = _int(obj.get("d"), f"{path}/d", lo=2)
        k = _int(obj.get("k"), f"{path}/k", lo=1, hi=d - 1)
        a = _num(obj.get("a"), f"{path}/a", lo=0, hi=1, strict_lo=True)
        if a >= 1:
            raise _err(f"{path}/a", "must be < 1")
        return {"kind": kind, "d": d, "k": k, "a": a}
    if kind == "bilevel":
        _check_keys(obj, {"kind", "p", "q", "r", "n"}, path)
        p = _num(obj.get("p"), f"{path}/p", lo=1, strict_lo=True)
        q = _num(obj.get("q"), f"{path}/q", lo=0, strict_lo=True)
        r = _num(obj.get("r"), f"{path}/r", lo=0, strict_lo=True)
        if r >= 1:
            raise _err(f"{path}/r", "must be < 1")
        nn = _int(obj["n"], f"{path}/n", lo=2) if "n" in obj else n
        if nn is None:
            raise _err(f"{path}/n", "bilevel spectrum needs n")
        d = math.floor(nn**p)
        if math.floor(nn**r) >= d:
            raise _err(path, "spike count must be below d")
        out = {"kind": kind, "p": p, "q": q, "r": r}
        if "n" in obj:
            out["n"] = nn
        out["d"] = d
        return out
    _check_keys(obj, {"kind", "k", "decay"}, path)
    k = _int(obj.get("k"), f"{path}/k", lo=1)
    decay = _num(obj.get("decay", 1.0), f"{path}/decay", lo=0)
    return {"kind": kind, "k": k, "decay": decay, "d": 2 * k + 1}


def validate_labels(obj, path, n=None, d=None) -> dict:
    if isinstance(obj, str):
        obj = {"kind": obj}
    _check_keys(obj, {"kind", "values", "w", "W", "h", "k"}, path)
    kind = _choice(obj.get("kind"), LABEL_KINDS, f"{path}/kind")
    out = {"kind": kind}
    if kind == "fixed" and "values" in obj:
        v = obj["values"]
        if isinstance(v, str):
            out["values"] = _choice(v, ("ones", "alternating"), f"{path}/values")
        else:
            vals = _int_list(v, f"{path}/values")
            if any(x not in (-1, 1) for x in vals):
                raise _err(f"{path}/values", "labels must be -1 or +1")
            if n is not None and len(vals) != n:
                raise _err(f"{path}/values", f"expected {n} labels, got {len(vals)}")
            out["values"] = vals
    if "w" in obj:
        w = _num_list(obj["w"], f"{path}/w")
        if d is not None and len(w) != d:
            raise _err(f"{path}/w", f"expected length d={d}, got {len(w)}")
        out["w"] = w
    if "W" in obj:
        out["W"] = [_num_list(row, f"{path}/W/{i}") for i, row in enumerate(obj["W"])]
    if "h" in obj:
        out["h"] = _choice(obj["h"], ("intersection", "xor", "mean_logistic"), f"{path}/h")
    if "k" in obj:
        out["k"] = _int(obj["k"], f"{path}/k", lo=1)
    return out


SOLVER_KEYS = {"tol_kkt", "max_sweeps", "tol_sv"}


def validate_solver(obj, path) -> dict:
    obj = obj or {}
    _check_keys(obj, SOLVER_KEYS, path)
    out = {}
    if obj.get("tol_kkt") is not None:
        out["tol_kkt"] = _num(obj["tol_kkt"], f"{path}/tol_kkt", lo=0, strict_lo=True)
    out["max_sweeps"] = _int(obj.get("max_sweeps", 100_000), f"{path}/max_sweeps", lo=1)
    out["tol_sv"] = _num(obj.get("tol_sv", 1e-6), f"{path}/tol_sv", lo=0, hi=1, strict_lo=True)
    return out


def validate_cell(obj, path) -> dict:
    _check_keys(obj, {"n", "d", "spectrum", "ensemble", "law", "labels"}, path)
    n = _int(obj.get("n"), f"{path}/n", lo=1)
    if "spectrum" in obj and "d" in obj:
        raise _err(path, "give either 'd' or 'spectrum', not both")
    if "spectrum" in obj:
        spec = validate_spectrum(obj["spectrum"], f"{path}/spectrum", n=n)
    elif "d" in obj:
        spec = {"kind": "isotropic", "d": _int(obj["d"], f"{path}/d", lo=1)}
    else:
        raise _err(path, "cell needs 'd' or 'spectrum'")
    d = spec["d"]
    if d < n:
        raise _err(path, f"d={d} < n={n}; every cell must satisfy d >= n")
    ens = _choice(obj.get("ensemble", "independent"), ENSEMBLES, f"{path}/ensemble")
    if ens == "trig" and spec.get("kind") != "trig":
        raise _err(f"{path}/spectrum", "trig ensemble needs a trig spectrum")
    law = _choice(obj.get("law", "gaussian"), LAWS, f"{path}/law") if ens == "independent" else ens
    labels = validate_labels(obj.get("labels", {"kind": "fixed"}), f"{path}/labels", n=n, d=d)
    return {"n": n, "spectrum": {k: v for k, v in spec.items() if not (k == "d" and "kind" in spec
                                                                       and spec["kind"] in ("bilevel", "trig"))},
            "ensemble": ens, "law": law, "labels": labels, "d": d}


def _expand_grid(grid, path):
    _check_keys(grid, {"n", "d", "d_over_n", "ensemble", "law", "labels"}, path)
    ns = _int_list(grid.get("n"), f"{path}/n", lo=1)
    if ("d" in grid) == ("d_over_n" in grid):
        raise _err(path, "grid needs exactly one of 'd' or 'd_over_n'")
    ens = grid.get("ensemble", ["independent"])
    laws = grid.get("law", ["gaussian"])
    labels = grid.get("labels", [{"kind": "fixed"}])
    for key, v in (("ensemble", ens), ("law", laws), ("labels", labels)):
        if not isinstance(v, list) or not v:
            raise _err(f"{path}/{key}", "expected a non-empty list")
    cells = []
    for n in ns:
        if "d" in grid:
            ds = _int_list(grid["d"], f"{path}/d", lo=1)
        else:
            ds = [int(math.ceil(r * n)) for r in _num_list(grid["d_over_n"], f"{path}/d_over_n", lo=1)]
        for d in ds:
            for e in ens:
                for law in (laws if e == "independent" else [e]):
                    for lab in labels:
                        cells.append({"n": n, "d": d, "ensemble": e, "law": law, "labels": lab}
                                     if e == "independent" else
                                     {"n": n, "d": d, "ensemble": e, "labels": lab})
    return cells


def _dataset_params(cfg, path, out):
    """Shared keys for single-instance commands: inline data, a saved dataset, or a generator."""
    sources = [k for k in ("data", "dataset") if k in cfg]
    if len(sources) > 1:
        raise _err(path, "give at most one of 'data' and 'dataset'")
    if "data" in cfg:
        data = cfg["data"]
        _check_keys(data, {"Z", "y", "spectrum"}, f"{path}/data")
        Z = data.get("Z")
        if not isinstance(Z, list) or not Z or not all(isinstance(r, list) for r in Z):
            raise _err(f"{path}/data/Z", "expected a non-empty list of rows")
        d = len(Z[0])
        for i, row in enumerate(Z):
            if len(row) != d:
                raise _err(f"{path}/data/Z/{i}", f"row has {len(row)} entries, expected {d}")
            _num_list(row, f"{path}/data/Z/{i}")
        y = _int_list(data.get("y"), f"{path}/data/y")
        if len(y) != len(Z) or any(v not in (-1, 1) for v in y):
            raise _err(f"{path}/data/y", "need one label in {-1, +1} per row of Z")
        spec = (validate_spectrum(data["spectrum"], f"{path}/data/spectrum", n=len(Z))
                if "spectrum" in data else {"kind": "isotropic", "d": d})
        if spec["d"] != d:
            raise _err(f"{path}/data/spectrum", f"spectrum has d={spec['d']}, rows have {d}")
        out["data"] = {"Z": Z, "y": y, "spectrum": spec}
    elif "dataset" in cfg:
        if not isinstance(cfg["dataset"], str):
            raise _err(f"{path}/dataset", "expected a path to a dataset sidecar JSON")
        out["dataset"] = cfg["dataset"]
    else:
        cell = {k: cfg[k] for k in ("n", "d", "spectrum", "ensemble", "law", "labels") if k in cfg}
        cell.setdefault("n", 10)
        if "d" not in cell and "spectrum" not in cell:
            cell["d"] = 40
        if cell.get("ensemble") == "trig" and "labels" not in cell:
            cell["labels"] = {"kind": "random_signs"}
        out["cell"] = validate_cell(cell, path)
        out["trial"] = _int(cfg.get("trial", 0), f"{path}/trial", lo=0)
    return out


COMMON = {"seed", "workers", "out"}
DATA_KEYS = {"data", "dataset", "n", "d", "spectrum", "ensemble", "law", "labels", "trial"}
SCHEMAS = {
    "gen": DATA_KEYS,
    "solve": DATA_KEYS | {"solver"},
    "check": DATA_KEYS | {"solver", "run_solver", "tol_amb"},
    "sweep": {"cells", "grid", "trials", "mode", "solver", "audit", "tol_amb", "render"},
    "converse": {"n_list", "d_over_n_list", "trials", "labels", "render"},
    "buhot": {"delta_list", "n", "trials", "solver", "render"},
    "concentration": {"n", "spectrum", "law", "trials"},
    "figure1": {"n", "k", "decays", "seeds", "labels", "solver", "render"},
    "bounds": {"thm1", "thm2", "thm3", "thm4", "buhot"},
}


def _as_list(v, path):
    if isinstance(v, dict):
        return [v]
    if isinstance(v, list) and v:
        return v
    raise _err(path, "expected an object or a non-empty list of objects")


def _validate_bounds(cfg, out):
    for i, q in enumerate(_as_list(cfg.get("thm1", []) or [], "/thm1") if "thm1" in cfg else []):
        p = f"/thm1/{i}"
        _check_keys(q, {"n", "d2", "d_inf", "spectrum", "v", "C", "c"}, p)
        row = {"n": _int(q.get("n"), f"{p}/n", lo=1)}
        if "spectrum" in q:
            row["spectrum"] = validate_spectrum(q["spectrum"], f"{p}/spectrum", n=row["n"])
        else:
            row["d2"] = _num(q.get("d2"), f"{p}/d2", lo=0, strict_lo=True)
            row["d_inf"] = _num(q.get("d_inf"), f"{p}/d_inf", lo=0, strict_lo=True)
        for key in ("v", "C", "c"):
            row[key] = _num(q.get(key, 1.0), f"{p}/{key}", lo=0, strict_lo=True)
        out.setdefault("thm1", []).append(row)
    for i, q in enumerate(_as_list(cfg["thm2"], "/thm2") if "thm2" in cfg else []):
        p = f"/thm2/{i}"
        _check_keys(q, {"n", "d", "d_inf", "spectrum", "C", "c"}, p)
        row = {"n": _int(q.get("n"), f"{p}/n", lo=1)}
        if "spectrum" in q:
            row["spectrum"] = validate_spectrum(q["spectrum"], f"{p}/spectrum", n=row["n"])
            d = row["spectrum"]["d"]
        else:
            d = row["d"] = _int(q.get("d"), f"{p}/d", lo=1)
            row["d_inf"] = _num(q.get("d_inf"), f"{p}/d_inf", lo=0, strict_lo=True)
        if d < row["n"]:
            raise _err(p, f"d={d} < n={row['n']}")
        for key in ("C", "c"):
            row[key] = _num(q.get(key, 1.0), f"{p}/{key}", lo=0, strict_lo=True)
        out.setdefault("thm2", []).append(row)
    for i, q in enumerate(_as_list(cfg["thm3"], "/thm3") if "thm3" in cfg else []):
        p = f"/thm3/{i}"
        _check_keys(q, {"n", "d"}, p)
        n = _int(q.get("n"), f"{p}/n", lo=2)
        d = _int(q.get("d"), f"{p}/d", lo=n)
        out.setdefault("thm3", []).append({"n": n, "d": d})
    for i, q in enumerate(_as_list(cfg["thm4"], "/thm4") if "thm4" in cfg else []):
        p = f"/thm4/{i}"
        _check_keys(q, {"n", "spectrum", "c", "c_prime"}, p)
        n = _int(q.get("n"), f"{p}/n", lo=2)
        spec = validate_spectrum(q.get("spectrum"), f"{p}/spectrum", n=n)
        if spec["d"] <= n:
            raise _err(f"{p}/spectrum", f"need d > n, got d={spec['d']}")
        row = {"n": n, "spectrum": spec,
               "c": _num(q.get("c", 1.0), f"{p}/c", lo=0, strict_lo=True),
               "c_prime": _num(q.get("c_prime", 1.0), f"{p}/c_prime", lo=0, strict_lo=True)}
        out.setdefault("thm4", []).append(row)
    for i, q in enumerate(_as_list(cfg["buhot"], "/buhot") if "buhot" in cfg else []):
        p = f"/buhot/{i}"
        _check_keys(q, {"delta"}, p)
        out.setdefault("buhot", []).append({"delta": _num(q.get("delta"), f"{p}/delta", lo=0,
                                                          strict_lo=True)})
    if not out:
        out["thm3"] = [{"n": 50, "d": 50}]


def validate(subcommand: str, cfg: dict) -> dict:
    """Validate one subcommand's parameters and fill in defaults."""
    if subcommand not in SCHEMAS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    _check_keys(cfg, SCHEMAS[subcommand] | COMMON, "")
    out = {}
    if subcommand in ("gen", "solve", "check"):
        _dataset_params(cfg, "", out)
        if subcommand != "gen":
            out["solver"] = validate_solver(cfg.get("solver"), "/solver")
        if subcommand == "check":
            out["run_solver"] = _bool(cfg.get("run_solver", True), "/run_solver")
            out["tol_amb"] = _num(cfg.get("tol_amb", 1e-9), "/tol_amb", lo=0)
    elif subcommand == "sweep":
        if "cells" in cfg and "grid" in cfg:
            raise _err("", "give either 'cells' or 'grid'")
        if "grid" in cfg:
            raw = _expand_grid(cfg["grid"], "/grid")
            cells = [validate_cell(c, f"/grid/cell{i}") for i, c in enumerate(raw)]
        else:
            raw = cfg.get("cells", [{"n": 50, "d": 50}, {"n": 50, "d": 979}])
            if not isinstance(raw, list) or not raw:
                raise _err("/cells", "expected a non-empty list of cells")
            cells = [validate_cell(c, f"/cells/{i}") for i, c in enumerate(raw)]
        out["cells"] = cells
        out["trials"] = _int(cfg.get("trials", 100), "/trials", lo=1)
        out["mode"] = _choice(cfg.get("mode", "cond2"), ("cond2", "cond3", "solver"), "/mode")
        out["solver"] = validate_solver(cfg.get("solver"), "/solver")
        out["audit"] = _bool(cfg.get("audit", False), "/audit")
        out["tol_amb"] = _num(cfg.get("tol_amb", 1e-9), "/tol_amb", lo=0)
        out["render"] = _bool(cfg.get("render", True), "/render")
    elif subcommand == "converse":
        out["n_list"] = _int_list(cfg.get("n_list", [50, 100]), "/n_list", lo=2)
        out["d_over_n_list"] = _num_list(cfg.get("d_over_n_list", [1, 2]), "/d_over_n_list", lo=1)
        out["trials"] = _int(cfg.get("trials", 1000), "/trials", lo=1)
        out["labels"] = _choice(cfg.get("labels", "ones"), ("ones", "alternating"), "/labels")
        out["render"] = _bool(cfg.get("render", True), "/render")
    elif subcommand == "buhot":
        out["delta_list"] = _num_list(cfg.get("delta_list", [0.05, 0.1, 0.2, 0.5]), "/delta_list",
                                      lo=0, strict_lo=True)
        out["n"] = _int(cfg.get("n", 50), "/n", lo=1)
        out["trials"] = _int(cfg.get("trials", 200), "/trials", lo=1)
        out["solver"] = validate_solver(cfg.get("solver"), "/solver")
        out["render"] = _bool(cfg.get("render", True), "/render")
    elif subcommand == "concentration":
        n = out["n"] = _int(cfg.get("n", 40), "/n", lo=1)
        spec = validate_spectrum(cfg.get("spectrum", {"kind": "isotropic", "d": 20 * n}),
                                 "/spectrum", n=n)
        if spec["d"] < n:
            raise _err("/spectrum", f"d={spec['d']} < n={n}")
        out["spectrum"] = spec
        out["law"] = _choice(cfg.get("law", "gaussian"), LAWS, "/law")
        out["trials"] = _int(cfg.get("trials", 200), "/trials", lo=1)
    elif subcommand == "figure1":
        n = out["n"] = _int(cfg.get("n", 32), "/n", lo=1)
        k = out["k"] = _int(cfg.get("k", 2**14), "/k", lo=1)
        if 2 * k + 1 < n:
            raise _err("/k", f"need 2k+1 >= n, got k={k}, n={n}")
        out["decays"] = _num_list(cfg.get("decays", [1.0, 3.0]), "/decays", lo=0)
        seeds = cfg.get("seeds", 50)
        if isinstance(seeds, list):
            out["seeds"] = _int_list(seeds, "/seeds", lo=0)
        else:
            out["seeds"] = list(range(_int(seeds, "/seeds", lo=1)))
        out["labels"] = validate_labels(cfg.get("labels", {"kind": "random_signs"}), "/labels",
                                        n=n, d=2 * k + 1)
        if out["labels"]["kind"] in ("logistic", "probit", "one_bit", "multi_index") and \
                "w" not in out["labels"] and "W" not in out["labels"]:
            raise _err("/labels", "trig features need explicit label weights")
        out["solver"] = validate_solver(cfg.get("solver"), "/solver")
        out["render"] = _bool(cfg.get("render", True), "/render")
    else:
        _validate_bounds(cfg, out)
    return out


def _set_path(d, dotted, value):
    keys = dotted.split(".")
    cur = d
    for k in keys[:-1]:
        cur = cur.setdefault(k, {})
        if not isinstance(cur, dict):
            raise ConfigError(f"override {dotted!r}: {k!r} is not an object")
    cur[keys[-1]] = value


def parse_override(text: str):
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def _key_before(text: str, pos: int) -> str | None:
    """Name of the last object key that starts before ``pos`` (for parse diagnostics)."""
    keys = re.findall(r'"((?:[^"\\]|\\.)*)"\s*:', text[:pos])
    return keys[-1] if keys else None


def load_config(path, subcommand: str | None = None, overrides=()) -> RunConfig:
    """Read a JSON config file, apply ``key=value`` overrides and validate."""
    raw = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file {path} does not exist")
        try:
            raw = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            key = _key_before(exc.doc, exc.pos)
            where = f" after key {key!r}" if key else ""
            raise ConfigError(f"{path}: invalid JSON{where} at line {exc.lineno} column "
                              f"{exc.colno}: {exc.msg}") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be an object")
    raw = copy.deepcopy(raw)
    sub = subcommand or raw.pop("subcommand", None)
    raw.pop("subcommand", None)
    if sub not in SUBCOMMANDS:
        raise ConfigError(f"unknown or missing subcommand {sub!r}")
    for key, value in overrides:
        _set_path(raw, key, value)
    seed = _int(raw.get("seed", DEFAULT_SEED), "/seed", lo=0, hi=2**64 - 1)
    workers = _int(raw.get("workers", 1), "/workers", lo=1)
    out_dir = raw.get("out")
    if out_dir is not None and not isinstance(out_dir, str):
        raise _err("/out", "expected a directory path")
    params = validate(sub, raw)
    return RunConfig(sub, params, str(path) if path else None, out_dir, seed, workers,
                     [f"{k}={json.dumps(v)}" for k, v in overrides], raw)
