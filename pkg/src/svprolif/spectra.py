"""Diagonal covariance spectra and their effective dimensions.

A spectrum is the positive weight vector ``lam`` such that a feature vector
is ``x = diag(lam)**0.5 @ z``.  Two scalar summaries govern support vector
proliferation::

    d2    = ||lam||_1**2 / ||lam||_2**2
    d_inf = ||lam||_1    / ||lam||_inf
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

__all__ = [
    "Spectrum",
    "EffectiveDims",
    "RateRegionPoint",
    "Region",
    "effective_dims",
    "isotropic_spectrum",
    "spiked_spectrum",
    "bilevel_spectrum",
    "trig_spectrum",
    "rate_region_classify",
    "spectrum_from_json",
]

BOUNDARY_TOL = 1e-9


@dataclass(frozen=True)
class Spectrum:
    lam: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        lam = np.array(self.lam, dtype=np.float64).ravel()
        if lam.size < 1:
            raise ValueError("spectrum must have d >= 1 entries")
        if not np.all(np.isfinite(lam)) or np.any(lam <= 0):
            raise ValueError("every spectrum entry must be finite and strictly positive")
        lam.setflags(write=False)
        object.__setattr__(self, "lam", lam)

    @property
    def d(self) -> int:
        return int(self.lam.size)

    @property
    def l1(self) -> float:
        return _fsum_desc(self.lam)

    def to_json(self) -> dict:
        if self.meta:
            return dict(self.meta)
        return {"d": self.d, "lambda": [float(v) for v in self.lam]}


@dataclass(frozen=True)
class EffectiveDims:
    d2: float
    d_inf: float
    d: int

    def to_json(self) -> dict:
        return {"d": self.d, "d2": self.d2, "d_inf": self.d_inf}


@dataclass(frozen=True)
class RateRegionPoint:
    """Exponents of the bi-level ensemble: ``d = n**p``, spike mass ``n**-q``, ``n**r`` spikes.

    ``q`` is allowed to exceed 1 because the benign region itself extends
    past ``q = 1`` whenever ``p > 1``.
    """

    p: float
    q: float
    r: float

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError(f"p must exceed 1, got {self.p}")
        if not self.q >= 0:
            raise ValueError(f"q must be non-negative, got {self.q}")
        if not 0 < self.r < 1:
            raise ValueError(f"r must lie in (0, 1), got {self.r}")


def _fsum_desc(values) -> float:
    # compensated summation in descending magnitude
    v = np.sort(np.abs(np.asarray(values, dtype=np.float64)))[::-1]
    return math.fsum(v.tolist())


def effective_dims(s: Spectrum) -> EffectiveDims:
    lam = s.lam
    l1 = _fsum_desc(lam)
    l2sq = _fsum_desc(lam * lam)
    d2 = l1 * l1 / l2sq
    d_inf = l1 / float(lam.max())
    return EffectiveDims(d2=d2, d_inf=d_inf, d=s.d)


def isotropic_spectrum(d: int) -> Spectrum:
    if d < 1:
        raise ValueError("d must be >= 1")
    return Spectrum(np.ones(int(d)), meta={"kind": "isotropic", "d": int(d)})


def spiked_spectrum(d: int, k: int, a: float) -> Spectrum:
    """Two-level spectrum with ``k`` spikes carrying fraction ``a`` of the total mass ``d``."""
    d, k = int(d), int(k)
    if not 1 <= k < d:
        raise ValueError(f"need 1 <= k < d, got k={k}, d={d}")
    if not 0 < a < 1:
        raise ValueError(f"spike mass fraction must lie in (0, 1), got {a}")
    lam = np.empty(d)
    lam[:k] = a * d / k
    lam[k:] = (1.0 - a) * d / (d - k)
    return Spectrum(lam, meta={"kind": "spiked", "d": d, "k": k, "a": float(a)})


def bilevel_spectrum(pt: RateRegionPoint, n: int) -> Spectrum:
    """Spiked spectrum of the ``(p, q, r)`` ensemble at sample size ``n``.

    ``d = floor(n**p)``, ``k = floor(n**r)`` and spike mass fraction ``a = n**-q``.
    The resulting effective dimensions scale as ``d_inf ~ n**(q+r)`` and
    ``d2 ~ n**min(2q+r, p)``.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    d = math.floor(n**pt.p)
    k = math.floor(n**pt.r)
    a = float(n) ** (-pt.q)
    if k < 1 or d <= k:
        raise ValueError(f"degenerate bi-level sizes d={d}, k={k}")
    if a >= 1:
        raise ValueError("q = 0 puts all mass on the spikes; small entries would vanish")
    s = spiked_spectrum(d, k, a)
    meta = {"kind": "bilevel", "p": pt.p, "q": pt.q, "r": pt.r, "n": int(n)}
    return Spectrum(s.lam, meta=meta)


def trig_spectrum(k: int, decay: float) -> Spectrum:
    """Weights ``(1, eta_1, eta_1, ..., eta_k, eta_k)`` with ``eta_i = i**-decay``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    eta = np.arange(1, k + 1, dtype=np.float64) ** (-float(decay))
    lam = np.concatenate([[1.0], np.repeat(eta, 2)])
    return Spectrum(lam, meta={"kind": "trig", "k": int(k), "decay": float(decay)})


class Region(str, Enum):
    BENIGN_MARGIN = "benign-margin"
    BENIGN_PROLIFERATION = "benign-proliferation"
    PRIOR_WORK_GAP = "prior-work-gap"
    OUTSIDE = "outside"
    BOUNDARY = "boundary"


def rate_region_classify(pt: RateRegionPoint, tol: float = BOUNDARY_TOL) -> Region:
    """Locate ``pt`` relative to the benign rate region ``0 <= q < 1 - r + (p-1)/2``.

    Points with ``1 - r < q`` inside the region are ``PRIOR_WORK_GAP`` when the
    earlier region ``{q < 1-r} U {3/2 - r < q < 1 - r + (p-1)/2}`` misses them,
    otherwise ``BENIGN_PROLIFERATION``.
    """
    p, q, r = pt.p, pt.q, pt.r
    margin_edge = 1.0 - r
    upper_edge = 1.0 - r + (p - 1.0) / 2.0
    old_edge = 1.5 - r
    edges = [margin_edge, upper_edge]
    if old_edge < upper_edge:
        edges.append(old_edge)
    if any(abs(q - e) <= tol for e in edges):
        return Region.BOUNDARY
    if q < margin_edge:
        return Region.BENIGN_MARGIN
    if q > upper_edge:
        return Region.OUTSIDE
    if q < old_edge:
        return Region.PRIOR_WORK_GAP
    return Region.BENIGN_PROLIFERATION


def spectrum_from_json(obj: dict, n: int | None = None) -> Spectrum:
    """Build a spectrum from either the explicit or the named-constructor JSON form."""
    if "lambda" in obj:
        lam = obj["lambda"]
        if "d" in obj and int(obj["d"]) != len(lam):
            raise ValueError(f"d={obj['d']} does not match len(lambda)={len(lam)}")
        return Spectrum(np.asarray(lam, dtype=np.float64))
    kind = obj.get("kind")
    if kind == "isotropic":
        return isotropic_spectrum(int(obj["d"]))
    if kind == "spiked":
        return spiked_spectrum(int(obj["d"]), int(obj["k"]), float(obj["a"]))
    if kind == "bilevel":
        nn = obj.get("n", n)
        if nn is None:
            raise ValueError("bilevel spectrum needs n")
        return bilevel_spectrum(RateRegionPoint(obj["p"], obj["q"], obj["r"]), int(nn))
    if kind == "trig":
        return trig_spectrum(int(obj["k"]), float(obj.get("decay", 1.0)))
    raise ValueError(f"unknown spectrum kind {kind!r}")
