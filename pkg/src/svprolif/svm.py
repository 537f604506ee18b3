"""Hard-margin homogeneous linear SVM.

The dual is solved in the signed variables ``beta`` (``beta_i = y_i alpha_i``)::

    max  y^T beta - 1/2 beta^T K beta   s.t.  y_i beta_i >= 0

by cyclic exact coordinate ascent.  Between sweep blocks the solver tries an
exact solve restricted to the current support; the candidate is only
accepted if it satisfies the KKT conditions to ``tol_kkt``, so the returned
point is always KKT-certified or flagged as not converged.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from numba import njit

from .errors import NotSeparable, PreconditionViolated, SingularCoordinate
from .kernel import GramFactor, opnorm, solve

__all__ = [
    "SolverOptions",
    "SvmSolution",
    "solve_dual",
    "solve_dual_gram",
    "solve_exact_smalln",
    "support_vectors",
    "margin_audit",
    "dual_objective",
]


@dataclass(frozen=True)
class SolverOptions:
    tol_kkt: float | None = None  # None: 1e-10 * ||y||_inf * max row sum of |K|
    max_sweeps: int = 100_000
    tol_sv: float = 1e-6
    polish: bool = True
    trace: bool = False  # record the objective after every sweep


@dataclass
class SvmSolution:
    beta_star: np.ndarray
    y: np.ndarray
    w_star: np.ndarray | None
    gamma_star: float
    sv_set: np.ndarray
    sv_boundary_count: int
    diagnostics: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.beta_star.size

    def to_json(self) -> dict:
        return {
            "beta_star": self.beta_star.tolist(),
            "gamma_star": self.gamma_star,
            "wnorm_sq": float(1.0 / self.gamma_star**2) if self.gamma_star > 0 else None,
            "sv_set": self.sv_set.tolist(),
            "n_sv": int(self.sv_set.size),
            "sv_boundary_count": self.sv_boundary_count,
            "diagnostics": {k: v for k, v in self.diagnostics.items() if k != "objective_trace"},
        }


def dual_objective(K, y, beta) -> float:
    return float(y @ beta - 0.5 * beta @ (K @ beta))


@njit(cache=True, nogil=True)
def _cd_sweeps(Q, alpha, grad, n_sweeps, trace):
    n = Q.shape[0]
    for s in range(n_sweeps):
        for i in range(n):
            new = alpha[i] - grad[i] / Q[i, i]
            if new < 0.0:
                new = 0.0
            delta = new - alpha[i]
            if delta != 0.0:
                alpha[i] = new
                for j in range(n):
                    grad[j] += delta * Q[j, i]
        if trace.size > 0:
            acc = 0.0
            for i in range(n):
                acc += alpha[i] * (1.0 - 0.5 * (grad[i] + 1.0))
            trace[s] = acc


def _kkt_residual(alpha, grad):
    # projected gradient of 1/2 a^T Q a - 1^T a over a >= 0
    pg = np.where(alpha > 0, np.abs(grad), np.maximum(-grad, 0.0))
    return float(pg.max()) if pg.size else 0.0


def _polish(Q, alpha, tol):
    A = np.flatnonzero(alpha > 0)
    if A.size == 0:
        return None
    QA = Q[np.ix_(A, A)]
    try:
        cf = sla.cho_factor(QA, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        return None
    ones = np.ones(A.size)
    a = sla.cho_solve(cf, ones, check_finite=False)
    a = a + sla.cho_solve(cf, ones - QA @ a, check_finite=False)
    if not np.all(a > 0):
        return None
    cand = np.zeros_like(alpha)
    cand[A] = a
    grad = Q @ cand - 1.0
    if _kkt_residual(cand, grad) <= tol:
        return cand, grad
    return None


def _min_norm_optimum(Q, grad, tol):
    # singular K: dual optima form a face; pick the minimum-norm point on it
    S = np.flatnonzero(np.abs(grad) <= max(tol, 1e-8))
    if S.size == 0:
        return None
    aS = np.linalg.lstsq(Q[np.ix_(S, S)], np.ones(S.size), rcond=None)[0]
    if np.any(aS < 0):
        return None
    cand = np.zeros(Q.shape[0])
    cand[S] = aS
    g = Q @ cand - 1.0
    if _kkt_residual(cand, g) <= max(tol, 1e-8):
        return cand, g
    return None


def _objective(alpha, grad):
    return float(alpha @ (1.0 - 0.5 * (grad + 1.0)))


def solve_dual_gram(K, y, opts: SolverOptions = SolverOptions(), known_separable: bool = False):
    """Coordinate ascent on the sign-constrained dual; returns ``(beta, diagnostics)``."""
    K = np.asarray(K, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = y.size
    diagK = np.diag(K)
    if np.any(diagK <= 0):
        raise SingularCoordinate(f"K_ii = 0 at indices {np.flatnonzero(diagK <= 0).tolist()}")
    tol = opts.tol_kkt
    if tol is None:
        tol = 1e-10 * float(np.abs(y).max()) * float(np.abs(K).sum(axis=1).max())
    Q = np.ascontiguousarray(K * np.outer(y, y))
    alpha = np.zeros(n)
    grad = -np.ones(n)
    sweeps = 0
    block = 1
    polished = False
    converged = False
    trace_all = []
    checkpoints = [(0, 0.0)]
    kkt = _kkt_residual(alpha, grad)
    while sweeps < opts.max_sweeps:
        m = min(block, opts.max_sweeps - sweeps)
        tr = np.empty(m if opts.trace else 0)
        _cd_sweeps(Q, alpha, grad, m, tr)
        sweeps += m
        if opts.trace:
            trace_all.extend(tr.tolist())
        grad = Q @ alpha - 1.0
        obj = _objective(alpha, grad)
        checkpoints.append((sweeps, obj))
        kkt = _kkt_residual(alpha, grad)
        if kkt <= tol:
            converged = True
            break
        if opts.polish:
            res = _polish(Q, alpha, tol)
            if res is not None:
                alpha, grad = res
                kkt = _kkt_residual(alpha, grad)
                polished = True
                converged = True
                if opts.trace:
                    trace_all.append(_objective(alpha, grad))
                break
        if not known_separable and obj > 1.0 / tol:
            raise NotSeparable(f"dual objective {obj:.3g} exceeded divergence guard {1.0 / tol:.3g}")
        block = min(2 * block, 64)

    if not converged and not known_separable and _unbounded_trend(checkpoints, alpha, grad):
        raise NotSeparable("dual objective grows without bound; data are not linearly separable")
    canonical = False
    if converged and not known_separable:
        res = _min_norm_optimum(Q, grad, tol)
        if res is not None:
            alpha, grad = res
            kkt = _kkt_residual(alpha, grad)
            canonical = True

    beta = y * alpha
    diag = {
        "iterations": sweeps,
        "max_kkt_violation": kkt,
        "tol_kkt": tol,
        "converged": converged,
        "separable": True if converged else None,
        "polished": polished,
        "min_norm_canonicalized": canonical,
        "objective": dual_objective(K, y, beta),
    }
    if opts.trace:
        diag["objective_trace"] = trace_all
    return beta, diag


def _unbounded_trend(checkpoints, alpha, grad) -> bool:
    if len(checkpoints) < 3:
        return False
    total = checkpoints[-1][0]
    obj = dict(checkpoints)
    # objective increase over the last half vs the half before it
    s_half = max(s for s, _ in checkpoints if s <= total // 2)
    s_q = max(s for s, _ in checkpoints if s <= s_half // 2)
    late = obj[total] - obj[s_half]
    early = obj[s_half] - obj[s_q]
    quad = float(alpha @ (grad + 1.0))  # a^T Q a
    lin = float(alpha.sum())
    # at a separable optimum a^T Q a = 1^T a; divergence drives the ratio to 0
    return late > 0.25 * max(early, 0.0) and quad < 0.5 * lin


def _finish(ds, K, y, beta, diag, tol_sv) -> SvmSolution:
    w = ds.X().T @ beta if ds is not None else None
    wnorm_sq = float(beta @ (K @ beta))
    gamma = 1.0 / np.sqrt(wnorm_sq) if wnorm_sq > 0 else np.inf
    sv, boundary = _sv_from_beta(beta, tol_sv)
    return SvmSolution(beta, y, w, gamma, sv, boundary, diag)


def solve_dual(ds, gf: GramFactor, opts: SolverOptions = SolverOptions()) -> SvmSolution:
    """Solve the hard-margin SVM for a labelled dataset with Gram matrix ``gf``.

    A non-singular ``K`` certifies linear independence of the examples, hence
    separability, and disables the divergence guard.
    """
    y = ds.y
    beta, diag = solve_dual_gram(gf.K, y, opts, known_separable=not gf.singular_flag)
    return _finish(ds, gf.K, y, beta, diag, opts.tol_sv)


def solve_exact_smalln(ds, gf: GramFactor, tol: float = 1e-9, tol_sv: float = 1e-6) -> SvmSolution:
    """Brute-force KKT search over all active sets (n <= 12), largest sets first."""
    K = gf.K
    y = ds.y if ds is not None else None
    n = K.shape[0]
    if n > 12:
        raise ValueError("exact enumeration is limited to n <= 12")
    scale = max(1.0, float(np.abs(K).max()))
    for size in range(n, 0, -1):
        for A in itertools.combinations(range(n), size):
            A = list(A)
            KA = K[np.ix_(A, A)]
            # minimum-norm solve: on a singular K_A this picks the same canonical
            # optimum as solve_dual
            bA = np.linalg.lstsq(KA, y[A], rcond=None)[0]
            if not np.all(np.isfinite(bA)):
                continue
            if np.linalg.norm(KA @ bA - y[A]) > 1e-8 * np.sqrt(size):
                continue
            if np.any(y[A] * bA < -tol * max(1.0, np.abs(bA).max())):
                continue
            beta = np.zeros(n)
            beta[A] = bA
            margins = y * (K @ beta)
            if np.all(margins >= 1.0 - tol * scale):
                diag = {"iterations": 0, "active_set": A, "converged": True, "separable": True,
                        "objective": dual_objective(K, y, beta)}
                return _finish(ds, K, y, beta, diag, tol_sv)
    raise NotSeparable("no active set yields a KKT point")


def _sv_from_beta(beta, tol_sv):
    a = np.abs(beta)
    top = a.max() if a.size else 0.0
    if top == 0:
        return np.array([], dtype=int), 0
    rel = a / top
    sv = np.flatnonzero(rel > tol_sv)
    boundary = int(np.count_nonzero((rel >= 0.1 * tol_sv) & (rel <= 10 * tol_sv)))
    return sv, boundary


def support_vectors(sol, tol_sv: float = 1e-6):
    """Indices with ``|beta_i| > tol_sv * max_j |beta_j|`` and the count inside the ambiguity band."""
    beta = sol.beta_star if hasattr(sol, "beta_star") else np.asarray(sol, dtype=np.float64)
    return _sv_from_beta(np.asarray(beta, dtype=np.float64), tol_sv)


def margin_audit(sol: SvmSolution, gf: GramFactor, spectrum, rtol: float = 1e-8) -> dict:
    """Check ``||w||^2 = y^T K^-1 y >= n / ||K||_op`` and the margin-bound product."""
    n = sol.n
    if sol.sv_set.size != n:
        raise PreconditionViolated(f"only {sol.sv_set.size} of {n} examples are support vectors")
    y = sol.y
    wnorm_sq = float(1.0 / sol.gamma_star**2)
    yKy = float(y @ solve(gf, y))
    op = opnorm(gf)
    l1 = spectrum.l1
    lower = n / op
    product = wnorm_sq / n * l1
    eq_ok = abs(wnorm_sq - yKy) <= rtol * yKy
    rayleigh_ok = yKy >= lower * (1 - rtol)
    op_event = op <= 2 * l1
    report = {
        "wnorm_sq": wnorm_sq,
        "y_K_inv_y": yKy,
        "opnorm": op,
        "lower_bound_n_over_opnorm": lower,
        "bound_value": n / (2 * l1),
        "margin_bound_product": product,
        "opnorm_event": bool(op_event),
        "equality_holds": bool(eq_ok),
        "rayleigh_holds": bool(rayleigh_ok),
        "half_bound_holds": bool(product >= 0.5) if op_event else None,
    }
    report["chain_ok"] = bool(eq_ok and rayleigh_ok and (not op_event or product >= 0.5))
    return report
