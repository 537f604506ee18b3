"""Three equivalent characterizations of "every example is a support vector".

With ``beta = K^{-1} y``, ``s_i = 1 / (K^{-1})_{ii}`` (the Schur complement of
``K_ii``) and the leave-one-out statistic

    h_i = y_i y_{-i}^T K_{-i}^{-1} K_{-i,i},

the determinant identity ``det K = det K_{-i} * s_i`` together with Cramer's
rule gives ``y_i beta_i = (1 - h_i) / s_i``.  Since ``s_i > 0`` the three
conditions

    1. the SVM keeps every example as a support vector,
    2. ``y_i beta_i > 0`` for all i,
    3. ``h_i < 1`` for all i,

coincide whenever ``K`` is non-singular.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InconsistentVerdicts, SingularLeaveOneOut
from .kernel import GramFactor, inverse_diagonal, solve
from .svm import SolverOptions, solve_dual

__all__ = [
    "TOL_AMB",
    "EquivalenceReport",
    "ridgeless",
    "loo_statistics",
    "loo_statistics_direct",
    "schur_identity_residual",
    "check_equivalence",
]

TOL_AMB = 1e-9


@dataclass
class EquivalenceReport:
    beta: np.ndarray
    signed_margins: np.ndarray
    loo_stats: np.ndarray
    schur: np.ndarray
    cond2_all_positive: bool
    cond3_all_below_one: bool
    cond1_all_sv: bool | None = None
    ambiguous: np.ndarray = field(default_factory=lambda: np.array([], dtype=int))
    n_sv: int | None = None
    solver_diagnostics: dict | None = None
    solution: object = None

    @property
    def is_ambiguous(self) -> bool:
        if self.ambiguous.size:
            return True
        diag = self.solver_diagnostics
        if diag is not None and (not diag.get("converged") or diag.get("sv_boundary_count", 0)):
            return True
        return False

    @property
    def all_support_vectors(self) -> bool:
        return self.cond2_all_positive

    def to_json(self) -> dict:
        return {
            "n": int(self.beta.size),
            "verdicts": {
                "cond1_all_sv": self.cond1_all_sv,
                "cond2_all_positive": self.cond2_all_positive,
                "cond3_all_below_one": self.cond3_all_below_one,
            },
            "ambiguous": self.ambiguous.tolist(),
            "n_sv": self.n_sv,
            "beta": self.beta.tolist(),
            "signed_margins": self.signed_margins.tolist(),
            "loo_stats": self.loo_stats.tolist(),
            "schur": self.schur.tolist(),
        }


def ridgeless(ds, gf: GramFactor):
    """Least-norm interpolator: ``beta = K^{-1} y`` and ``w = X^T beta``."""
    beta = solve(gf, ds.y)
    return beta, ds.X().T @ beta


def loo_statistics(ds, gf: GramFactor, beta=None):
    """Leave-one-out statistics ``h`` and Schur complements ``s`` in O(n^3).

    ``h_i = 1 - y_i beta_i s_i``.  Non-singular ``K`` implies every principal
    submatrix ``K_{-i}`` is non-singular, so no separate check is needed.
    """
    y = ds.y
    if beta is None:
        beta = solve(gf, y)
    kinv = inverse_diagonal(gf)
    s = 1.0 / kinv
    if y.size == 1:
        return np.zeros(1), s
    h = 1.0 - y * beta * s
    return h, s


def loo_statistics_direct(ds, gf: GramFactor) -> np.ndarray:
    """``h_i`` from an explicit solve with ``K_{-i}`` for every i (O(n^4) oracle)."""
    K = gf.K
    y = ds.y
    n = y.size
    if n == 1:
        return np.zeros(1)
    h = np.empty(n)
    for i in range(n):
        rest = np.r_[0:i, i + 1:n]
        sub = GramFactor(K[np.ix_(rest, rest)])
        if sub.singular_flag:
            raise SingularLeaveOneOut(i)
        h[i] = y[i] * (y[rest] @ solve(sub, K[rest, i]))
    return h


def schur_identity_residual(signed_margins, s, h) -> np.ndarray:
    """``|y_i beta_i s_i - (1 - h_i)|`` scaled by ``max(1, |h_i|)``."""
    return np.abs(signed_margins * s - (1.0 - h)) / np.maximum(1.0, np.abs(h))


def check_equivalence(ds, gf: GramFactor, run_solver: bool = False,
                      opts: SolverOptions = SolverOptions(), tol_amb: float = TOL_AMB,
                      strict: bool = True) -> EquivalenceReport:
    """Evaluate conditions 2 and 3 (and 1 if ``run_solver``) on one instance.

    With ``strict`` a disagreement between verdicts on an instance with no
    ambiguous index raises :class:`InconsistentVerdicts`.
    """
    y = ds.y
    beta = solve(gf, y)
    h, s = loo_statistics(ds, gf, beta)
    margins = y * beta
    bmax = float(np.abs(beta).max())
    amb = np.flatnonzero((np.abs(margins) <= tol_amb * bmax) | (np.abs(h - 1.0) <= tol_amb))
    rep = EquivalenceReport(
        beta=beta,
        signed_margins=margins,
        loo_stats=h,
        schur=s,
        cond2_all_positive=bool(np.all(margins > 0)),
        cond3_all_below_one=bool(np.all(h < 1.0)),
        ambiguous=amb,
    )
    if run_solver:
        sol = solve_dual(ds, gf, opts)
        rep.n_sv = int(sol.sv_set.size)
        rep.cond1_all_sv = rep.n_sv == y.size
        rep.solver_diagnostics = dict(sol.diagnostics, sv_boundary_count=sol.sv_boundary_count)
        rep.solution = sol
    if strict and not rep.is_ambiguous:
        verdicts = {rep.cond2_all_positive, rep.cond3_all_below_one}
        if rep.cond1_all_sv is not None:
            verdicts.add(rep.cond1_all_sv)
        index_wise = np.array_equal(margins > 0, h < 1.0)
        if len(verdicts) > 1 or not index_wise:
            raise InconsistentVerdicts(
                f"verdicts disagree: cond1={rep.cond1_all_sv} cond2={rep.cond2_all_positive} "
                f"cond3={rep.cond3_all_below_one}")
    return rep
