"""Monte-Carlo experiments on support vector proliferation.

Every trial is a pure function of ``(master_seed, cell_index, trial_index)``,
so results do not depend on the worker count or scheduling.  Trials whose
Gram matrix is singular, or whose decision sits within tolerance of the
boundary, are counted separately and left out of the proliferation estimate.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from statsmodels.stats.proportion import proportion_confint

from .bounds import buhot_fraction, thm3_bound
from .ensembles import (
    Dataset,
    LabelModel,
    apply_labels,
    sample_haar,
    sample_independent,
    trial_rng,
    trig_dataset,
    trig_features,
)
from .equivalence import TOL_AMB, check_equivalence, ridgeless
from .errors import InconsistentVerdicts, NotSeparable, NumericalFailure, PreconditionViolated
from .kernel import eigmin, gram, gram_effective_dims, opnorm
from .spectra import Spectrum, effective_dims, isotropic_spectrum, spectrum_from_json, trig_spectrum
from .svm import SolverOptions, margin_audit, solve_dual

__all__ = [
    "MODES",
    "CSV_COLUMNS",
    "Cell",
    "SweepConfig",
    "TrialOutcome",
    "CellResult",
    "wilson_halfwidth",
    "make_dataset",
    "run_trial",
    "proliferation_sweep",
    "converse_probe",
    "concentration_probe",
    "buhot_compare",
    "figure1_repro",
]

MODES = ("cond2", "cond3", "solver")
CSV_COLUMNS = ["n", "d", "ensemble", "law", "trials", "proliferation_count", "singular",
               "ambiguous", "p_hat", "ci_halfwidth", "sv_fraction_mean", "runtime_s"]


@dataclass(frozen=True)
class Cell:
    """One grid point.

    ``spectrum`` is a JSON spectrum description; ``ensemble`` is
    ``independent``, ``haar`` or ``trig``; ``labels`` is a label-model JSON
    object whose GLM weights may be omitted (then drawn once per cell).
    """

    n: int
    spectrum: dict
    ensemble: str = "independent"
    law: str = "gaussian"
    labels: dict = field(default_factory=lambda: {"kind": "fixed"})

    def build_spectrum(self) -> Spectrum:
        return spectrum_from_json(self.spectrum, n=self.n)

    @property
    def d(self) -> int:
        return self.build_spectrum().d


@dataclass(frozen=True)
class SweepConfig:
    cells: tuple
    trials: int = 100
    seed: int = 2021
    mode: str = "cond2"
    solver: SolverOptions = SolverOptions()
    tol_amb: float = TOL_AMB
    audit: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        for i, c in enumerate(self.cells):
            if c.d < c.n:
                raise ValueError(f"cell {i}: d={c.d} < n={c.n}")


@dataclass
class TrialOutcome:
    status: str  # ok | singular | ambiguous | inconsistent
    proliferated: bool | None = None
    sv_fraction: float | None = None
    min_margin: float | None = None
    max_h: float | None = None
    audit_ok: bool | None = None


@dataclass
class CellResult:
    n: int
    d: int
    ensemble: str
    law: str
    trials: int
    proliferation_count: int
    singular: int
    ambiguous: int
    inconsistent: int
    p_hat: float
    ci_halfwidth: float
    sv_fraction_mean: float
    min_margin_mean: float
    max_h_mean: float
    runtime_s: float
    audited: int = 0
    audit_failures: int = 0

    @property
    def valid(self) -> int:
        return self.trials - self.singular - self.ambiguous - self.inconsistent

    def csv_row(self) -> list:
        return [self.n, self.d, self.ensemble, self.law, self.trials, self.proliferation_count,
                self.singular, self.ambiguous, _fmt(self.p_hat), _fmt(self.ci_halfwidth),
                _fmt(self.sv_fraction_mean), f"{self.runtime_s:.3f}"]

    def to_json(self) -> dict:
        out = asdict(self)
        out["valid"] = self.valid
        return out


def _fmt(x) -> str:
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else repr(float(x))


def wilson_halfwidth(count: int, nobs: int) -> float:
    if nobs == 0:
        return math.nan
    lo, hi = proportion_confint(count, nobs, alpha=0.05, method="wilson")
    return float(hi - lo) / 2.0


def _label_model(cell: Cell, spectrum: Spectrum, seed: int, cell_index: int) -> LabelModel:
    obj = dict(cell.labels)
    kind = obj["kind"]
    if kind in ("logistic", "probit", "one_bit") and "w" not in obj:
        rng = trial_rng(seed, 0, "label_params", cell_index)
        obj["w"] = (rng.standard_normal(spectrum.d) / math.sqrt(spectrum.l1)).tolist()
    if kind == "multi_index" and "W" not in obj:
        rng = trial_rng(seed, 0, "label_params", cell_index)
        kk = int(obj.pop("k", 2))
        obj["W"] = (rng.standard_normal((kk, spectrum.d)) / math.sqrt(spectrum.l1)).tolist()
    if kind == "fixed" and isinstance(obj.get("values"), str):
        pattern = obj.pop("values")
        if pattern == "alternating":
            obj["values"] = [1 if i % 2 == 0 else -1 for i in range(cell.n)]
        elif pattern != "ones":
            raise ValueError(f"unknown fixed label pattern {pattern!r}")
    return LabelModel.from_json(obj)


def make_dataset(cell: Cell, seed: int, cell_index: int, trial: int,
                 label_model: LabelModel | None = None) -> Dataset:
    spectrum = cell.build_spectrum()
    if label_model is None:
        label_model = _label_model(cell, spectrum, seed, cell_index)
    frng = trial_rng(seed, trial, "features", cell_index)
    lrng = trial_rng(seed, trial, "labels", cell_index)
    if cell.ensemble == "independent":
        ds = sample_independent(cell.n, spectrum, cell.law, frng, require_high_dim=False)
    elif cell.ensemble == "haar":
        ds = sample_haar(cell.n, spectrum, frng)
    elif cell.ensemble == "trig":
        meta = spectrum.meta
        ds = trig_dataset(cell.n, meta["k"], meta["decay"], None, frng)
    else:
        raise ValueError(f"unknown ensemble {cell.ensemble!r}")
    ds = apply_labels(ds, label_model, lrng)
    rec = {"master_seed": seed, "cell": cell_index, "trial": trial}
    return Dataset(ds.Z, ds.spectrum, ds.y, rec, ds.ensemble, ds.law)


def run_trial(ds: Dataset, mode: str = "cond2", opts: SolverOptions = SolverOptions(),
              tol_amb: float = TOL_AMB, audit: bool = False) -> TrialOutcome:
    gf = gram(ds)
    if gf.singular_flag:
        return TrialOutcome("singular")
    try:
        rep = check_equivalence(ds, gf, run_solver=(mode == "solver"), opts=opts,
                                tol_amb=tol_amb, strict=True)
    except InconsistentVerdicts:
        return TrialOutcome("inconsistent")
    except NumericalFailure:
        return TrialOutcome("singular")
    out = TrialOutcome("ok", min_margin=float(rep.signed_margins.min()),
                       max_h=float(rep.loo_stats.max()))
    if mode == "cond2":
        amb = np.any(np.abs(rep.signed_margins) <= tol_amb * np.abs(rep.beta).max())
        out.proliferated = rep.cond2_all_positive
    elif mode == "cond3":
        amb = np.any(np.abs(rep.loo_stats - 1.0) <= tol_amb)
        out.proliferated = rep.cond3_all_below_one
    else:
        amb = rep.is_ambiguous
        out.proliferated = rep.cond1_all_sv
        out.sv_fraction = rep.n_sv / ds.n
    if amb:
        out.status = "ambiguous"
        return out
    if audit and mode == "solver" and out.proliferated:
        try:
            out.audit_ok = margin_audit(rep.solution, gf, ds.spectrum)["chain_ok"]
        except PreconditionViolated:
            out.audit_ok = None
    return out


def _map_ordered(fn, items, workers: int):
    if workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def _aggregate(cell: Cell, outcomes, runtime: float) -> CellResult:
    n_trials = len(outcomes)
    singular = sum(o.status == "singular" for o in outcomes)
    ambiguous = sum(o.status == "ambiguous" for o in outcomes)
    inconsistent = sum(o.status == "inconsistent" for o in outcomes)
    ok = [o for o in outcomes if o.status == "ok"]
    count = sum(bool(o.proliferated) for o in ok)
    valid = len(ok)
    fr = [o.sv_fraction for o in ok if o.sv_fraction is not None]
    audited = [o for o in ok if o.audit_ok is not None]

    def mean(vals):
        vals = list(vals)
        return float(np.mean(vals)) if vals else math.nan

    return CellResult(
        n=cell.n, d=cell.d, ensemble=cell.ensemble, law=cell.law, trials=n_trials,
        proliferation_count=count, singular=singular, ambiguous=ambiguous,
        inconsistent=inconsistent,
        p_hat=count / valid if valid else math.nan,
        ci_halfwidth=wilson_halfwidth(count, valid),
        sv_fraction_mean=mean(fr),
        min_margin_mean=mean(o.min_margin for o in ok),
        max_h_mean=mean(o.max_h for o in ok),
        runtime_s=runtime,
        audited=len(audited),
        audit_failures=sum(not o.audit_ok for o in audited),
    )


def proliferation_sweep(cfg: SweepConfig, workers: int = 1) -> list[CellResult]:
    """Estimate Pr(every example is a support vector) on every cell of ``cfg``."""
    results = []
    for ci, cell in enumerate(cfg.cells):
        spectrum = cell.build_spectrum()
        lm = _label_model(cell, spectrum, cfg.seed, ci)

        def one(trial, ci=ci, cell=cell, lm=lm):
            ds = make_dataset(cell, cfg.seed, ci, trial, lm)
            return run_trial(ds, cfg.mode, cfg.solver, cfg.tol_amb, cfg.audit)

        t0 = time.perf_counter()
        outcomes = _map_ordered(one, range(cfg.trials), workers)
        results.append(_aggregate(cell, outcomes, time.perf_counter() - t0))
    return results


def converse_probe(n_list, d_over_n_list, trials: int, seed: int = 2021,
                   labels: str = "ones", workers: int = 1) -> list[dict]:
    """Pr(some example is not a support vector) against the isotropic Gaussian lower bound."""
    cells = []
    for n in n_list:
        for r in d_over_n_list:
            d = int(round(n * r))
            cells.append(Cell(n, {"kind": "isotropic", "d": d}, "independent", "gaussian",
                              {"kind": "fixed", "values": labels}))
    res = proliferation_sweep(SweepConfig(tuple(cells), trials, seed, "cond2"), workers)
    table = []
    for cell, r in zip(cells, res):
        valid = r.valid
        fail = valid - r.proliferation_count
        q_hat = fail / valid if valid else math.nan
        ci = wilson_halfwidth(fail, valid)
        bound = thm3_bound(cell.n, r.d).value
        table.append({"n": cell.n, "d": r.d, "trials": r.trials, "valid": valid,
                      "singular": r.singular, "ambiguous": r.ambiguous, "q_hat": q_hat,
                      "ci_halfwidth": ci, "thm3_bound": bound,
                      "consistent": bool(q_hat + ci >= bound), "runtime_s": r.runtime_s})
    return table


def concentration_probe(n: int, spectrum: Spectrum, entry_law: str, trials: int,
                        seed: int = 2021, workers: int = 1) -> dict:
    """Frequencies of ``eigmin(K) >= ||lam||_1 / 2`` and ``||K||_op <= 2 ||lam||_1``."""
    l1 = spectrum.l1

    def one(trial):
        ds = sample_independent(n, spectrum, entry_law, trial_rng(seed, trial, "features"))
        gf = gram(ds)
        lo = eigmin(gf)
        hi = opnorm(gf)
        avg = float(np.trace(gf.K)) / n
        return lo, hi, avg

    rows = _map_ordered(one, range(trials), workers)
    lo = np.array([r[0] for r in rows])
    hi = np.array([r[1] for r in rows])
    avg = np.array([r[2] for r in rows])
    ed = effective_dims(spectrum)
    return {
        "n": n, "d": spectrum.d, "law": entry_law, "trials": trials,
        "l1": l1, "d2": ed.d2, "d_inf": ed.d_inf,
        "freq_eigmin_event": float(np.mean(lo >= 0.5 * l1)),
        "freq_opnorm_event": float(np.mean(hi <= 2.0 * l1)),
        "eigmin_mean": float(lo.mean()), "opnorm_mean": float(hi.mean()),
        "eigmin_le_mean_diag_always": bool(np.all(lo <= avg * (1 + 1e-12))),
    }


def buhot_compare(delta_list, n: int, trials: int, seed: int = 2021,
                  opts: SolverOptions = SolverOptions(), max_resamples: int = 100,
                  workers: int = 1) -> list[dict]:
    """Mean fraction of support vectors vs the asymptotic formula, Gaussian isotropic inputs.

    Labels come from a random teacher (``one_bit`` with Gaussian weights), so
    instances with ``n > d`` stay separable; a non-separable draw is resampled.
    """
    table = []
    for ci, delta in enumerate(delta_list):
        d = max(1, int(round(n / delta)))
        spectrum = isotropic_spectrum(d)

        def one(trial, ci=ci, d=d, spectrum=spectrum):
            for attempt in range(max_resamples):
                key = trial * max_resamples + attempt
                ds = sample_independent(n, spectrum, "gaussian", trial_rng(seed, key, "features", ci),
                                        require_high_dim=False)
                w = trial_rng(seed, key, "teacher", ci).standard_normal(d)
                ds = apply_labels(ds, LabelModel("one_bit", w=w), trial_rng(seed, key, "labels", ci))
                try:
                    sol = solve_dual(ds, gram(ds), opts)
                except NotSeparable:
                    continue
                return sol.sv_set.size / n, attempt
            return math.nan, max_resamples

        t0 = time.perf_counter()
        rows = _map_ordered(one, range(trials), workers)
        frac = np.array([r[0] for r in rows])
        b = buhot_fraction(delta)
        mean = float(np.nanmean(frac))
        table.append({"delta": delta, "n": n, "d": d, "trials": trials,
                      "sv_fraction_mean": mean, "sv_fraction_std": float(np.nanstd(frac)),
                      "buhot_value": b["value"], "buhot_small_delta": b["small_delta_branch"],
                      "buhot_large_delta": b["large_delta_branch"],
                      "abs_gap": abs(mean - b["value"]),
                      "resamples": int(sum(r[1] for r in rows)),
                      "runtime_s": time.perf_counter() - t0})
    return table


def _decision_values(ds: Dataset, w: np.ndarray, t_grid: np.ndarray, k: int, chunk: int = 64):
    sq = np.sqrt(ds.spectrum.lam)
    out = np.empty(t_grid.size)
    for a in range(0, t_grid.size, chunk):
        out[a:a + chunk] = trig_features(t_grid[a:a + chunk], k) @ (sq * w)
    return out


def figure1_repro(n: int = 32, k: int = 2**14, decays=(1.0, 3.0), seeds=range(50),
                  seed: int = 2021, labels: dict | None = None,
                  opts: SolverOptions = SolverOptions(), n_grid: int = 512,
                  curve_seed: int | None = None, workers: int = 1) -> dict:
    """SVM vs least-norm interpolation on trigonometric features.

    The same inputs and labels are reused for every decay; curves of both
    decision functions are sampled for ``curve_seed`` (default: first seed).
    """
    labels = labels or {"kind": "random_signs"}
    seeds = list(seeds)
    curve_seed = seeds[0] if curve_seed is None else curve_seed
    t_grid = np.linspace(0.0, 2.0 * math.pi, n_grid, endpoint=False)
    runs, curves, summary = [], {}, {}
    for decay in decays:
        lam_dims = effective_dims(trig_spectrum(k, decay))
        lm = LabelModel.from_json(labels)

        def one(s, decay=decay, lm=lm):
            ds = trig_dataset(n, k, decay, lm, trial_rng(seed, s, "inputs"),
                              trial_rng(seed, s, "labels"))
            gf = gram(ds)
            sol = solve_dual(ds, gf, opts)
            beta_i, w_i = ridgeless(ds, gf)
            rel = float(np.linalg.norm(sol.w_star - w_i) / np.linalg.norm(w_i))
            gd = gram_effective_dims(gf)
            row = {"seed": s, "decay": decay, "n_sv": int(sol.sv_set.size),
                   "all_sv": bool(sol.sv_set.size == n), "w_rel_diff": rel,
                   "svm_equals_interp": bool(rel <= 1e-6), "gram_d2": gd.d2,
                   "gram_d_inf": gd.d_inf, "lambda_d2": lam_dims.d2,
                   "lambda_d_inf": lam_dims.d_inf, "cond": gf.condition_estimate,
                   "converged": bool(sol.diagnostics["converged"])}
            curve = None
            if s == curve_seed:
                t_train = np.asarray(ds.seed_record["t"])
                curve = {"t": t_grid, "svm": _decision_values(ds, sol.w_star, t_grid, k),
                         "interp": _decision_values(ds, w_i, t_grid, k),
                         "t_train": t_train, "y_train": ds.y,
                         "sv_mask": np.isin(np.arange(n), sol.sv_set)}
            return row, curve

        out = _map_ordered(one, seeds, workers)
        decay_rows = [r for r, _ in out]
        runs.extend(decay_rows)
        for _, c in out:
            if c is not None:
                curves[decay] = c
        nsv = np.array([r["n_sv"] for r in decay_rows])
        good = [r["all_sv"] and r["svm_equals_interp"] for r in decay_rows]
        summary[decay] = {
            "decay": decay, "seeds": len(seeds),
            "frac_all_sv_and_equal": float(np.mean(good)),
            "frac_all_sv": float(np.mean(nsv == n)),
            "median_n_sv": float(np.median(nsv)),
            "lambda_d2": lam_dims.d2, "lambda_d_inf": lam_dims.d_inf,
            "gram_d2_median": float(np.median([r["gram_d2"] for r in decay_rows])),
            "gram_d_inf_median": float(np.median([r["gram_d_inf"] for r in decay_rows])),
            "equal_whenever_all_sv": bool(all(r["svm_equals_interp"] for r in decay_rows
                                              if r["all_sv"])),
        }
    return {"n": n, "k": k, "runs": runs, "summary": summary, "curves": curves}


_CORPUS_FEATURES = ("gaussian", "rademacher", "uniform_sqrt3", "haar")
_CORPUS_SPECTRA = ("isotropic", "spiked", "trig")
_CORPUS_LABELS = ("random_signs", "fixed", "logistic", "probit", "one_bit", "multi_index")


def random_instance(seed: int, index: int, n_max: int = 64, ratio_max: int = 8) -> Dataset:
    """One randomized instance for the equivalence corpus.

    Feature kind, spectrum shape, label model, ``n in [1, n_max]`` and
    ``d in [n, ratio_max * n]`` are all drawn from the instance's own stream.
    """
    rng = trial_rng(seed, index, "corpus_spec")
    feat = _CORPUS_FEATURES[rng.integers(len(_CORPUS_FEATURES))]
    shape = _CORPUS_SPECTRA[rng.integers(len(_CORPUS_SPECTRA))]
    lab = _CORPUS_LABELS[rng.integers(len(_CORPUS_LABELS))]
    n = int(rng.integers(1, n_max + 1))
    d = int(rng.integers(n, ratio_max * n + 1))
    if shape == "trig":
        k = max(1, math.ceil((d - 1) / 2))
        d = 2 * k + 1
    if shape == "isotropic":
        spectrum = isotropic_spectrum(d)
    elif shape == "spiked" and d >= 2:
        k_sp = int(rng.integers(1, max(2, d // 4) + 1))
        k_sp = min(k_sp, d - 1)
        spectrum = spectrum_from_json({"kind": "spiked", "d": d, "k": k_sp,
                                       "a": float(rng.uniform(0.05, 0.95))})
    elif shape == "trig":
        spectrum = trig_spectrum((d - 1) // 2, float(rng.choice([0.5, 1.0, 2.0])))
    else:
        spectrum = isotropic_spectrum(d)

    frng = trial_rng(seed, index, "features")
    if feat == "haar":
        ds = sample_haar(n, spectrum, frng)
    else:
        ds = sample_independent(n, spectrum, feat, frng)

    prng = trial_rng(seed, index, "label_params")
    if lab == "fixed":
        lm = LabelModel("fixed", values=tuple(int(v) for v in prng.choice([-1, 1], size=n)))
    elif lab == "random_signs":
        lm = LabelModel("random_signs")
    elif lab == "multi_index":
        lm = LabelModel("multi_index", W=prng.standard_normal((2, d)), h="xor")
    else:
        lm = LabelModel(lab, w=prng.standard_normal(d) / math.sqrt(spectrum.l1))
    ds = apply_labels(ds, lm, trial_rng(seed, index, "labels"))
    rec = {"master_seed": seed, "trial": index, "features": feat, "spectrum": shape, "labels": lab}
    return Dataset(ds.Z, ds.spectrum, ds.y, rec, ds.ensemble, ds.law)


def equivalence_corpus(count: int, seed: int = 2021, opts: SolverOptions = SolverOptions(),
                       tol_amb: float = TOL_AMB, workers: int = 1) -> dict:
    """Run all three conditions plus the direct leave-one-out oracle on ``count`` instances."""
    from .equivalence import loo_statistics_direct, schur_identity_residual
    from .errors import SingularLeaveOneOut

    def one(i):
        ds = random_instance(seed, i)
        gf = gram(ds)
        if gf.singular_flag:
            return {"status": "singular"}
        try:
            rep = check_equivalence(ds, gf, run_solver=True, opts=opts, tol_amb=tol_amb,
                                    strict=False)
            h_direct = loo_statistics_direct(ds, gf)
        except (SingularLeaveOneOut, NumericalFailure):
            return {"status": "singular"}
        res = schur_identity_residual(rep.signed_margins, rep.schur, h_direct)
        dev = np.abs(rep.loo_stats - h_direct) / np.maximum(1.0, np.abs(h_direct))
        out = {"status": "ambiguous" if rep.is_ambiguous else "ok", "n": ds.n,
               "schur_residual": float(res.max()), "h_deviation": float(dev.max()),
               "cond": gf.condition_estimate, "kind": ds.seed_record}
        if not rep.is_ambiguous:
            v = (rep.cond1_all_sv, rep.cond2_all_positive, rep.cond3_all_below_one)
            out["agree"] = len(set(v)) == 1 and np.array_equal(rep.signed_margins > 0,
                                                                 rep.loo_stats < 1.0)
            out["proliferated"] = rep.cond2_all_positive
        return out

    rows = _map_ordered(one, range(count), workers)
    ok = [r for r in rows if r["status"] == "ok"]
    checked = [r for r in rows if r["status"] != "singular"]
    return {
        "instances": count,
        "singular": sum(r["status"] == "singular" for r in rows),
        "ambiguous": sum(r["status"] == "ambiguous" for r in rows),
        "evaluated": len(ok),
        "agree": sum(r["agree"] for r in ok),
        "disagree": sum(not r["agree"] for r in ok),
        "proliferated": sum(r["proliferated"] for r in ok),
        "max_schur_residual": max((r["schur_residual"] for r in checked), default=0.0),
        "max_h_deviation": max((r["h_deviation"] for r in checked), default=0.0),
        "rows": rows,
    }
