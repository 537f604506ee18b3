"""Closed-form probability bounds and asymptotic support-vector fractions.

The universal constants in the proliferation bounds are not known, so they
are plain keyword arguments (default 1).  Results are only meaningful as
shapes unless calibrated constants are supplied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

from .errors import NoAdmissibleK
from .spectra import Spectrum

__all__ = [
    "BoundValue",
    "norm_cdf",
    "thm1_bound",
    "thm2_bound",
    "thm3_bound",
    "thm4_bound",
    "buhot_fraction",
]


@dataclass(frozen=True)
class BoundValue:
    name: str
    value: float
    clipped: bool = False
    inputs: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"name": self.name, "value": self.value, "clipped": self.clipped,
                "inputs": self.inputs, **self.extra}


def norm_cdf(x: float) -> float:
    """Standard normal CDF via ``erfc``; keeps full relative accuracy in the lower tail."""
    return 0.5 * float(erfc(-x / math.sqrt(2.0)))


def _exp(a: float) -> float:
    return math.inf if a > 700 else math.exp(a)


def _clip(name, raw, inputs, **extra) -> BoundValue:
    clipped = not 0.0 <= raw <= 1.0
    return BoundValue(name, min(1.0, max(0.0, raw)), clipped, inputs, extra)


def thm1_bound(n, d2, d_inf, v=1.0, C=1.0, c=1.0) -> BoundValue:
    """Independent sub-Gaussian features with variance proxy ``v``."""
    raw = (1.0
           - _exp(-c * min(d2 / v**2, d_inf / v) + C * n)
           - _exp(-c * d_inf / (v * n) + C * math.log(n)))
    return _clip("thm1", raw, {"n": n, "d2": d2, "d_inf": d_inf, "v": v, "C": C, "c": c})


def thm2_bound(n, d, d_inf, C=1.0, c=1.0) -> BoundValue:
    """Haar features."""
    if d < n:
        raise ValueError("need d >= n")
    raw = (1.0
           - _exp(-c * d_inf + C * n)
           - _exp(-c * ((d - n + 1) / d) * (d_inf / n) + C * math.log(n)))
    return _clip("thm2", raw, {"n": n, "d": d, "d_inf": d_inf, "C": C, "c": c})


def thm3_bound(n, d) -> BoundValue:
    """Lower bound on Pr(some example is not a support vector), isotropic Gaussian, fixed labels."""
    if not d >= n >= 2:
        raise ValueError("need d >= n >= 2")
    m = d - n
    t = (m + 4 + 2 * math.sqrt(m + 2)) / (n - 1)
    val = norm_cdf(-math.sqrt(t)) * (1.0 - 1.0 / math.e)
    return BoundValue("thm3", val, False, {"n": n, "d": d}, {"t": t})


def thm4_bound(n, spectrum: Spectrum, c=1.0, c_prime=1.0, eps=1e-12) -> BoundValue:
    """Anisotropic converse, maximized over admissible ``k < (n-1)/c``.

    For each ``k`` the smallest admissible ``b`` is
    ``max(1 + eps, sum_{j>k} lam_j / (lam_{k+1} (n-1)))`` with ``lam`` sorted
    in decreasing order.
    """
    d = spectrum.d
    if not d > n:
        raise ValueError("need d > n")
    if (n - 1) / c <= 1:
        raise NoAdmissibleK(f"(n-1)/c = {(n - 1) / c} leaves no admissible k")
    lam = np.sort(spectrum.lam)[::-1]
    # tail[k] = sum_{j >= k} lam_j (0-based), i.e. the mass beyond the top k
    tail = np.cumsum(lam[::-1])[::-1]
    kmax = min(math.ceil((n - 1) / c) - 1, d - 1)
    success = 1.0 - 10.0 * math.exp(-(n - 1) / c)
    best = None
    for k in range(0, kmax + 1):
        b = max(1.0 + eps, tail[k] / (lam[k] * (n - 1)))
        val = c_prime * norm_cdf(-math.sqrt(2 * c * b * b * (n - 1) / (k + 1))) * success
        if best is None or val > best[0]:
            best = (val, k, b)
    val, k, b = best
    return _clip("thm4", val, {"n": n, "d": d, "c": c, "c_prime": c_prime}, k=k, b=b)


def buhot_fraction(delta: float) -> dict:
    """Asymptotic fraction of support vectors at ``delta = n/d``.

    ``0.952/delta`` for ``delta >> 1`` and ``1 - sqrt(2 delta/pi) exp(-1/(2 delta))``
    for ``delta << 1``; ``value`` picks the first when ``delta >= 1``.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    large = 0.952 / delta
    small = 1.0 - math.sqrt(2.0 * delta / math.pi) * math.exp(-1.0 / (2.0 * delta))
    return {"delta": delta, "value": large if delta >= 1 else small,
            "large_delta_branch": large, "small_delta_branch": small}
