import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import cofactor_inverse, dataset_from_rows
from svprolif.ensembles import Dataset, sample_haar, sample_independent, trial_rng
from svprolif.errors import SingularGram
from svprolif.kernel import (
    GramFactor,
    eigmin,
    gram,
    gram_effective_dims,
    gram_from_matrix,
    inverse_diagonal,
    opnorm,
    solve,
)
from svprolif.spectra import isotropic_spectrum, spiked_spectrum


def random_spd(rng, n, cond=10.0):
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    ev = np.geomspace(1.0, cond, n)
    return (Q * ev) @ Q.T


@pytest.mark.parametrize("n,d", [(1, 1), (5, 5), (10, 37)])
def test_haar_isotropic_gram(n, d):
    gf = gram(sample_haar(n, isotropic_spectrum(d), trial_rng(n * 100 + d)))
    np.testing.assert_allclose(gf.K, d * np.eye(n), atol=1e-8 * d)


def test_single_example_gram():
    s = spiked_spectrum(5, 2, 0.3)
    ds = Dataset(np.array([[1.0, -2.0, 0.5, 3.0, 1.0]]), s)
    gf = gram(ds)
    assert gf.K.shape == (1, 1)
    assert gf.K[0, 0] == pytest.approx(float(np.sum(s.lam * ds.Z[0] ** 2)), rel=1e-14)


def test_rank_deficient_rademacher_flagged():
    ds = Dataset(np.array([[1.0, -1.0], [1.0, -1.0]]), isotropic_spectrum(2), [1, 1])
    gf = gram(ds)
    assert gf.singular_flag
    with pytest.raises(SingularGram):
        solve(gf, np.ones(2))


def test_singular_threshold_semantics():
    n = 3
    eps = np.finfo(float).eps
    just_above = np.diag([1.0, 1.0, 4 * n * eps])
    just_below = np.diag([1.0, 1.0, 0.25 * n * eps])
    assert not GramFactor(just_above).singular_flag
    assert GramFactor(just_below).singular_flag


def test_symmetrized_and_readonly():
    K = np.array([[2.0, 1.0 + 1e-14], [1.0, 2.0]])
    gf = gram_from_matrix(K)
    assert np.array_equal(gf.K, gf.K.T)
    with pytest.raises(ValueError):
        gf.K[0, 0] = 3.0


def test_size_limit():
    with pytest.raises(ValueError):
        GramFactor(np.eye(2001))


def test_solve_identity_and_scaling():
    y = np.array([1.0, -1.0, 1.0])
    np.testing.assert_array_equal(solve(GramFactor(np.eye(3)), y), y)
    np.testing.assert_allclose(solve(GramFactor(2 * np.eye(3)), y), y / 2, rtol=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_solve_matches_cofactor_inverse(seed):
    rng = np.random.default_rng(seed)
    K = random_spd(rng, 5, cond=1e3)
    rhs = rng.standard_normal(5)
    expected = cofactor_inverse(K) @ rhs
    np.testing.assert_allclose(solve(GramFactor(K), rhs), expected, rtol=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 40), st.integers(0, 60), st.sampled_from(["gaussian", "rademacher",
                                                                    "uniform_sqrt3"]),
       st.integers(0, 2**31))
def test_solve_residual(n, extra, law, seed):
    ds = sample_independent(n, isotropic_spectrum(n + extra), law, trial_rng(seed))
    gf = gram(ds)
    if gf.singular_flag:
        return
    y = np.where(trial_rng(seed, 1).random(n) < 0.5, -1.0, 1.0)
    beta = solve(gf, y)
    assert np.linalg.norm(gf.K @ beta - y) <= 1e-8 * np.linalg.norm(y)


def test_inverse_diagonal_examples():
    np.testing.assert_allclose(inverse_diagonal(GramFactor(4 * np.eye(3))), [0.25] * 3, rtol=1e-15)
    np.testing.assert_allclose(inverse_diagonal(GramFactor([[2.0, 1.0], [1.0, 2.0]])),
                               [2 / 3, 2 / 3], rtol=1e-14)


def test_inverse_diagonal_consistent_with_solve(rng):
    K = random_spd(rng, 8, cond=1e4)
    gf = GramFactor(K)
    diag = inverse_diagonal(gf)
    cols = np.array([solve(gf, e)[i] for i, e in enumerate(np.eye(8))])
    np.testing.assert_allclose(diag, cols, rtol=1e-10)


def test_eigmin_examples():
    assert eigmin(GramFactor(7 * np.eye(4))) == pytest.approx(7.0)
    assert eigmin(GramFactor([[2.0, 1.0], [1.0, 2.0]])) == pytest.approx(1.0, rel=1e-14)
    assert opnorm(GramFactor([[2.0, 1.0], [1.0, 2.0]])) == pytest.approx(3.0, rel=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 30), st.integers(0, 30), st.integers(0, 2**31))
def test_spectral_invariants(n, extra, seed):
    ds = sample_independent(n, isotropic_spectrum(n + extra), "gaussian", trial_rng(seed))
    gf = gram(ds)
    lo = eigmin(gf)
    assert lo >= -1e-10 * opnorm(gf)
    assert np.all(lo <= np.diag(gf.K) * (1 + 1e-12))
    ed = gram_effective_dims(gf)
    tol = 1e-9 * n
    assert n + tol >= ed.d2 >= ed.d_inf - tol and ed.d_inf >= 1 - tol
    for i in range(n):
        rest = np.r_[0:i, i + 1:n]
        sub = GramFactor(gf.K[np.ix_(rest, rest)])
        assert eigmin(sub) >= lo - 1e-9 * opnorm(gf)


def test_gram_effective_dims_examples():
    ed = gram_effective_dims(GramFactor(3 * np.eye(6)))
    assert ed.d2 == pytest.approx(6) and ed.d_inf == pytest.approx(6)
    v = np.array([1.0, 2.0, -1.0])
    ed = gram_effective_dims(GramFactor(np.outer(v, v)))
    assert ed.d2 == pytest.approx(1, rel=1e-10) and ed.d_inf == pytest.approx(1, rel=1e-10)


def test_condition_estimate():
    gf = GramFactor(np.diag([1.0, 10.0, 100.0]))
    assert gf.condition_estimate == pytest.approx(100.0, rel=1e-12)
    assert GramFactor(np.ones((2, 2))).condition_estimate == np.inf


def test_concurrent_solves_share_factor(rng):
    from concurrent.futures import ThreadPoolExecutor

    gf = GramFactor(random_spd(rng, 30, cond=100))
    rhs = [rng.standard_normal(30) for _ in range(16)]
    serial = [solve(gf, r) for r in rhs]
    with ThreadPoolExecutor(4) as ex:
        par = list(ex.map(lambda r: solve(gf, r), rhs))
    for a, b in zip(serial, par):
        assert a.tobytes() == b.tobytes()


def test_rows_helper_matches_definition():
    X = np.array([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_allclose(gram(dataset_from_rows(X, lam=[2.0, 0.5])).K, X @ X.T)


def test_extreme_eigenvalues_on_clustered_spectrum():
    # K ~ 100 I: the subset eigensolvers fail to converge here; the fallback must not
    for s in range(30, 40):
        gf = gram(sample_haar(32, isotropic_spectrum(100), trial_rng(s)))
        assert opnorm(gf) == pytest.approx(100.0, rel=1e-12)
        assert eigmin(gf) == pytest.approx(100.0, rel=1e-12)
