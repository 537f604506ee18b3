import numpy as np
import pytest

from svprolif.ensembles import Dataset
from svprolif.spectra import Spectrum, isotropic_spectrum


def dataset_from_rows(X, y=None, lam=None):
    """Dataset whose scaled features equal ``X`` (isotropic unless ``lam`` is given)."""
    X = np.asarray(X, dtype=np.float64)
    if lam is None:
        return Dataset(X, isotropic_spectrum(X.shape[1]), y)
    lam = np.asarray(lam, dtype=np.float64)
    return Dataset(X / np.sqrt(lam), Spectrum(lam), y)


def cofactor_inverse(A):
    """Explicit inverse from the adjugate; independent of any factorization."""
    A = np.asarray(A, dtype=np.float64)
    n = A.shape[0]
    C = np.empty_like(A)
    for i in range(n):
        for j in range(n):
            minor = np.delete(np.delete(A, i, axis=0), j, axis=1)
            C[i, j] = (-1) ** (i + j) * (np.linalg.det(minor) if minor.size else 1.0)
    return C.T / np.linalg.det(A)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
