"""Seeded random feature ensembles and label models.

Every random draw comes from :func:`trial_rng`, which derives an independent
``numpy`` generator from ``(master_seed, cell, trial, op)``.  The op name is
folded in through CRC-32 so that, e.g., features and labels of one trial use
unrelated streams.  Identical tuples give bit-identical draws regardless of
which thread or in what order they are requested.
"""

from __future__ import annotations

import json
import math
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.special import ndtr

from .spectra import Spectrum, spectrum_from_json, trig_spectrum

__all__ = [
    "ENTRY_LAWS",
    "Dataset",
    "LabelModel",
    "trial_rng",
    "sample_independent",
    "sample_haar",
    "apply_labels",
    "trig_features",
    "trig_dataset",
    "save_dataset",
    "load_dataset",
]

ENTRY_LAWS = ("gaussian", "rademacher", "uniform_sqrt3")
LABEL_KINDS = ("fixed", "logistic", "probit", "one_bit", "multi_index", "random_signs")


def trial_rng(master_seed: int, trial: int = 0, op: str = "", cell: int = 0) -> np.random.Generator:
    """Generator for one ``(master_seed, cell, trial, op)`` stream."""
    key = (int(cell), int(trial), zlib.crc32(op.encode()))
    ss = np.random.SeedSequence(entropy=int(master_seed) & (2**64 - 1), spawn_key=key)
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class Dataset:
    """Raw features ``Z`` (n x d), spectrum and labels.

    Scaled features are ``X = Z * sqrt(lam)`` and are only formed on request.
    """

    Z: np.ndarray
    spectrum: Spectrum
    y: np.ndarray | None = None
    seed_record: dict = field(default_factory=dict)
    ensemble: str = ""
    law: str = ""

    def __post_init__(self):
        Z = np.asarray(self.Z, dtype=np.float64)
        if Z.ndim != 2 or Z.shape[0] < 1:
            raise ValueError("Z must be a non-empty 2-D array")
        if Z.shape[1] != self.spectrum.d:
            raise ValueError(f"Z has {Z.shape[1]} columns but spectrum has d={self.spectrum.d}")
        object.__setattr__(self, "Z", Z)
        if self.y is not None:
            y = np.asarray(self.y, dtype=np.float64).ravel()
            if y.shape != (Z.shape[0],):
                raise ValueError("labels must have one entry per row of Z")
            if not np.all(np.abs(y) == 1):
                raise ValueError("labels must be -1 or +1")
            object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.Z.shape[0]

    @property
    def d(self) -> int:
        return self.Z.shape[1]

    def X(self) -> np.ndarray:
        return self.Z * np.sqrt(self.spectrum.lam)

    def with_labels(self, y) -> "Dataset":
        return replace(self, y=np.asarray(y, dtype=np.float64))


@dataclass(frozen=True)
class LabelModel:
    """Conditional label law given the scaled features.

    ``kind`` is one of ``fixed``, ``logistic``, ``probit``, ``one_bit``,
    ``multi_index`` or ``random_signs``.  GLM kinds use ``w`` (length d);
    ``multi_index`` uses ``W`` (k x d) and a link ``h`` mapping the k-vector
    ``W @ x`` to ``Pr(y = +1)``.  ``fixed`` with ``values=None`` means all ones.
    """

    kind: str
    values: tuple | None = None
    w: np.ndarray | None = None
    W: np.ndarray | None = None
    h: str = "intersection"

    def __post_init__(self):
        if self.kind not in LABEL_KINDS:
            raise ValueError(f"unknown label model {self.kind!r}")

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        if self.values is not None:
            out["values"] = [int(v) for v in self.values]
        if self.w is not None:
            out["w"] = [float(v) for v in np.ravel(self.w)]
        if self.W is not None:
            out["W"] = np.asarray(self.W).tolist()
            out["h"] = self.h
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "LabelModel":
        kw = {"kind": obj["kind"]}
        if "values" in obj:
            kw["values"] = tuple(int(v) for v in obj["values"])
        if "w" in obj:
            kw["w"] = np.asarray(obj["w"], dtype=np.float64)
        if "W" in obj:
            kw["W"] = np.asarray(obj["W"], dtype=np.float64)
        if "h" in obj:
            kw["h"] = obj["h"]
        return cls(**kw)


def sample_independent(n: int, spectrum: Spectrum, entry_law: str, rng: np.random.Generator,
                       require_high_dim: bool = True) -> Dataset:
    """Z with i.i.d. mean-zero, unit-variance sub-Gaussian entries."""
    d = spectrum.d
    if require_high_dim and d < n:
        raise ValueError(f"need d >= n, got n={n}, d={d}")
    if entry_law == "gaussian":
        Z = rng.standard_normal((n, d))
    elif entry_law == "rademacher":
        Z = rng.integers(0, 2, size=(n, d)).astype(np.float64) * 2.0 - 1.0
    elif entry_law == "uniform_sqrt3":
        s3 = math.sqrt(3.0)
        Z = rng.uniform(-s3, s3, size=(n, d))
    else:
        raise ValueError(f"unknown entry law {entry_law!r}")
    return Dataset(Z, spectrum, ensemble="independent", law=entry_law)


def sample_haar(n: int, spectrum: Spectrum, rng: np.random.Generator) -> Dataset:
    """First n rows of a Haar-random d x d orthogonal matrix, scaled by sqrt(d)."""
    d = spectrum.d
    if d < n:
        raise ValueError(f"need d >= n, got n={n}, d={d}")
    G = rng.standard_normal((d, n))
    Q, R = np.linalg.qr(G)
    # positive diagonal of R makes Q exactly Haar
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    Q = Q * signs
    return Dataset(math.sqrt(d) * Q.T, spectrum, ensemble="haar", law="haar")


def _multi_index_prob(h: str, u: np.ndarray) -> np.ndarray:
    # u has shape (n, k)
    if h == "intersection":
        return np.all(u > 0, axis=1).astype(np.float64)
    if h == "xor":
        return (np.prod(np.sign(u), axis=1) > 0).astype(np.float64)
    if h == "mean_logistic":
        return 1.0 / (1.0 + np.exp(-u.mean(axis=1)))
    raise ValueError(f"unknown multi-index link {h!r}")


def apply_labels(ds: Dataset, lm: LabelModel, rng: np.random.Generator) -> Dataset:
    """Draw labels independently given each scaled feature vector."""
    n = ds.n
    if lm.kind == "fixed":
        if lm.values is None:
            y = np.ones(n)
        else:
            if len(lm.values) != n:
                raise ValueError(f"fixed labels have length {len(lm.values)}, expected {n}")
            y = np.asarray(lm.values, dtype=np.float64)
        return ds.with_labels(y)
    if lm.kind == "random_signs":
        return ds.with_labels(np.where(rng.random(n) < 0.5, 1.0, -1.0))

    X = ds.X()
    if lm.kind == "multi_index":
        W = np.atleast_2d(np.asarray(lm.W, dtype=np.float64))
        if W.shape[1] != ds.d:
            raise ValueError(f"W has {W.shape[1]} columns, expected d={ds.d}")
        prob = _multi_index_prob(lm.h, X @ W.T)
    else:
        w = np.asarray(lm.w, dtype=np.float64).ravel()
        if w.shape != (ds.d,):
            raise ValueError(f"w has length {w.size}, expected d={ds.d}")
        t = X @ w
        if lm.kind == "one_bit":
            return ds.with_labels(np.where(t >= 0, 1.0, -1.0))
        if lm.kind == "logistic":
            prob = 0.5 * (1.0 + np.tanh(0.5 * t))
        else:
            prob = ndtr(t)
    u = rng.random(n)
    return ds.with_labels(np.where(u < prob, 1.0, -1.0))


def trig_features(t: np.ndarray, k: int) -> np.ndarray:
    """Unweighted map ``t -> (1, cos t, sin t, ..., cos kt, sin kt)``, one row per input."""
    t = np.asarray(t, dtype=np.float64).ravel()
    m = np.arange(1, k + 1, dtype=np.float64)
    ang = np.outer(t, m)
    out = np.empty((t.size, 2 * k + 1))
    out[:, 0] = 1.0
    out[:, 1::2] = np.cos(ang)
    out[:, 2::2] = np.sin(ang)
    return out


def trig_dataset(n: int, k: int, decay: float, label_model: LabelModel | None,
                 rng: np.random.Generator, label_rng: np.random.Generator | None = None) -> Dataset:
    """Trigonometric features of ``n`` inputs drawn uniformly on ``[0, 2 pi)``."""
    if 2 * k + 1 < n:
        raise ValueError(f"need 2k+1 >= n, got k={k}, n={n}")
    t = rng.uniform(0.0, 2.0 * math.pi, size=n)
    ds = Dataset(trig_features(t, k), trig_spectrum(k, decay), ensemble="trig", law="trig",
                 seed_record={"t": t.tolist()})
    if label_model is not None:
        ds = apply_labels(ds, label_model, label_rng if label_rng is not None else rng)
    return ds


def save_dataset(ds: Dataset, directory, label_model: LabelModel | None = None,
                 stem: str = "dataset") -> dict:
    """Write ``<stem>_features.csv``, ``<stem>_labels.csv`` and ``<stem>.json``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    feat = directory / f"{stem}_features.csv"
    lab = directory / f"{stem}_labels.csv"
    np.savetxt(feat, ds.Z, fmt="%.17g", delimiter=",")
    if ds.y is not None:
        np.savetxt(lab, ds.y.reshape(-1, 1), fmt="%d", delimiter=",")
    sidecar = {
        "n": ds.n,
        "d": ds.d,
        "ensemble": ds.ensemble,
        "law": ds.law,
        "spectrum": ds.spectrum.to_json(),
        "label_model": label_model.to_json() if label_model is not None else None,
        "seed": {k: v for k, v in ds.seed_record.items() if k != "t"},
        "features_csv": feat.name,
        "labels_csv": lab.name if ds.y is not None else None,
    }
    with open(directory / f"{stem}.json", "w") as fh:
        json.dump(sidecar, fh, indent=2)
    return sidecar


def load_dataset(sidecar_path) -> Dataset:
    sidecar_path = Path(sidecar_path)
    with open(sidecar_path) as fh:
        meta = json.load(fh)
    base = sidecar_path.parent
    Z = np.loadtxt(base / meta["features_csv"], delimiter=",", ndmin=2)
    y = None
    if meta.get("labels_csv"):
        y = np.loadtxt(base / meta["labels_csv"], delimiter=",", ndmin=1)
    spectrum = spectrum_from_json(meta["spectrum"], n=meta["n"])
    return Dataset(Z, spectrum, y, seed_record=meta.get("seed", {}),
                   ensemble=meta.get("ensemble", ""), law=meta.get("law", ""))
