"""Gram matrices and the dense linear algebra shared by the solvers."""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from .errors import SingularGram
from .spectra import EffectiveDims

__all__ = [
    "MAX_DENSE_N",
    "GramFactor",
    "gram",
    "gram_from_matrix",
    "solve",
    "inverse_diagonal",
    "eigmin",
    "opnorm",
    "gram_effective_dims",
]

MAX_DENSE_N = 2000
EPS = np.finfo(np.float64).eps


class GramFactor:
    """Symmetric PSD matrix ``K`` with its Cholesky factor.

    ``singular_flag`` is set when the factorization breaks down or the
    smallest pivot ``L_ii**2`` is at most ``n * eps`` times the largest.
    """

    def __init__(self, K: np.ndarray):
        K = np.asarray(K, dtype=np.float64)
        if K.ndim != 2 or K.shape[0] != K.shape[1]:
            raise ValueError("Gram matrix must be square")
        n = K.shape[0]
        if n > MAX_DENSE_N:
            raise ValueError(f"n={n} exceeds the dense limit {MAX_DENSE_N}")
        K = 0.5 * (K + K.T)
        K.setflags(write=False)
        self.K = K
        self.n = n
        self.L = None
        self.pivots = None
        self.singular_flag = True
        try:
            L = sla.cholesky(K, lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            return
        piv = np.diag(L) ** 2
        self.pivots = piv
        if piv.min() > n * EPS * piv.max():
            self.L = L
            self.singular_flag = False

    @property
    def condition_estimate(self) -> float:
        """Reciprocal of LAPACK's 1-norm reciprocal condition estimate."""
        if self.singular_flag:
            return np.inf
        anorm = float(np.abs(self.K).sum(axis=0).max())
        rcond, info = lapack.dpocon(self.L, anorm, uplo="L")
        return np.inf if rcond == 0 else 1.0 / rcond

    def _require(self):
        if self.singular_flag:
            raise SingularGram("Gram matrix is numerically singular")


def gram_from_matrix(K) -> GramFactor:
    return GramFactor(K)


def gram(ds) -> GramFactor:
    """``K = (Z diag(lam)^{1/2}) (Z diag(lam)^{1/2})^T``."""
    X = ds.X()
    return GramFactor(X @ X.T)


def solve(gf: GramFactor, rhs, refine_steps: int = 3) -> np.ndarray:
    """Solve ``K beta = rhs`` with iterative refinement until ``||K beta - rhs|| <= 1e-8 ||rhs||``."""
    gf._require()
    rhs = np.asarray(rhs, dtype=np.float64)
    cf = (gf.L, True)
    beta = sla.cho_solve(cf, rhs, check_finite=False)
    target = 1e-8 * np.linalg.norm(rhs)
    # always take one refinement step; more only if the residual is still large
    for step in range(refine_steps):
        r = rhs - gf.K @ beta
        if step > 0 and np.linalg.norm(r) <= target:
            break
        beta = beta + sla.cho_solve(cf, r, check_finite=False)
    return beta


def inverse_diagonal(gf: GramFactor) -> np.ndarray:
    """Diagonal of ``K^{-1}``, one triangular solve per column of ``L^{-1}``."""
    gf._require()
    Linv = sla.solve_triangular(gf.L, np.eye(gf.n), lower=True, check_finite=False)
    # (K^-1)_ii = ||column i of L^-1||^2
    return np.einsum("ij,ij->j", Linv, Linv)


def _eig_at(K: np.ndarray, index: int) -> float:
    """``index``-th smallest eigenvalue of symmetric ``K``.

    The subset drivers (MRRR / bisection) can fail to converge on tightly
    clustered spectra such as ``K ~ d I``; the full divide-and-conquer
    solver is the fallback.
    """
    try:
        return float(sla.eigvalsh(K, subset_by_index=[index, index], check_finite=False)[0])
    except np.linalg.LinAlgError:
        return float(sla.eigvalsh(K, driver="evd", check_finite=False)[index])


def eigmin(gf: GramFactor) -> float:
    if gf.n > MAX_DENSE_N:
        raise ValueError("dense eigensolver limited to n <= 2000")
    return _eig_at(gf.K, 0)


def opnorm(gf: GramFactor) -> float:
    return _eig_at(gf.K, gf.n - 1)


def gram_effective_dims(gf: GramFactor) -> EffectiveDims:
    mu = np.clip(sla.eigvalsh(gf.K, check_finite=False), 0.0, None)
    mu = np.sort(mu)[::-1]
    s1 = float(np.sum(mu))
    s2 = float(np.sum(mu * mu))
    if s1 == 0.0:
        return EffectiveDims(d2=0.0, d_inf=0.0, d=gf.n)
    return EffectiveDims(d2=s1 * s1 / s2, d_inf=s1 / float(mu[0]), d=gf.n)
