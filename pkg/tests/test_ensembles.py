import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from svprolif.ensembles import (
    Dataset,
    LabelModel,
    apply_labels,
    load_dataset,
    sample_haar,
    sample_independent,
    save_dataset,
    trial_rng,
    trig_dataset,
    trig_features,
)
from svprolif.kernel import gram
from svprolif.spectra import isotropic_spectrum, spiked_spectrum, trig_spectrum


def test_rademacher_entries():
    ds = sample_independent(300, isotropic_spectrum(400), "rademacher", trial_rng(1, 0, "f"))
    assert set(np.unique(ds.Z)) == {-1.0, 1.0}
    assert np.var(ds.Z, axis=0).mean() == pytest.approx(1.0, abs=0.01)


def test_uniform_sqrt3_entries():
    ds = sample_independent(200, isotropic_spectrum(400), "uniform_sqrt3", trial_rng(1, 0, "f"))
    assert np.abs(ds.Z).max() <= math.sqrt(3)
    assert np.var(ds.Z) == pytest.approx(1.0, abs=0.02)


def test_gaussian_mean_and_variance():
    means, variances = [], []
    for seed in range(5):
        ds = sample_independent(200, isotropic_spectrum(400), "gaussian", trial_rng(seed, 0, "f"))
        means.append(ds.Z.mean())
        variances.append(ds.Z.var())
    assert abs(np.mean(means)) <= 0.02
    assert all(0.9 <= v <= 1.1 for v in variances)


@pytest.mark.parametrize("law", ["gaussian", "rademacher", "uniform_sqrt3"])
def test_same_seed_bit_identical(law):
    a = sample_independent(20, isotropic_spectrum(30), law, trial_rng(7, 3, "features", 2))
    b = sample_independent(20, isotropic_spectrum(30), law, trial_rng(7, 3, "features", 2))
    assert a.Z.tobytes() == b.Z.tobytes()
    c = sample_independent(20, isotropic_spectrum(30), law, trial_rng(7, 4, "features", 2))
    assert a.Z.tobytes() != c.Z.tobytes()


def test_streams_independent_of_thread_count():
    def draw(t):
        return sample_independent(10, isotropic_spectrum(15), "gaussian",
                                  trial_rng(99, t, "features")).Z.tobytes()

    serial = [draw(t) for t in range(16)]
    with ThreadPoolExecutor(8) as ex:
        threaded = list(ex.map(draw, range(16)))
    assert serial == threaded


def test_rng_ops_are_distinct_streams():
    a = trial_rng(1, 0, "features").standard_normal(4)
    b = trial_rng(1, 0, "labels").standard_normal(4)
    assert not np.array_equal(a, b)


def test_high_dim_requirement():
    with pytest.raises(ValueError):
        sample_independent(10, isotropic_spectrum(5), "gaussian", trial_rng(0))
    ds = sample_independent(10, isotropic_spectrum(5), "gaussian", trial_rng(0), require_high_dim=False)
    assert ds.Z.shape == (10, 5)


def test_unknown_law():
    with pytest.raises(ValueError):
        sample_independent(3, isotropic_spectrum(5), "cauchy", trial_rng(0))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 30), st.integers(0, 40), st.integers(0, 2**32))
def test_haar_rows_orthogonal(n, extra, seed):
    d = n + extra
    ds = sample_haar(n, isotropic_spectrum(d), trial_rng(seed))
    G = ds.Z @ ds.Z.T
    assert np.abs(G - d * np.eye(n)).max() <= 1e-8 * d
    assert np.linalg.norm(G / d - np.eye(n), 2) <= 1e-10 * n


def test_haar_square_determinant():
    ds = sample_haar(3, isotropic_spectrum(3), trial_rng(5))
    assert abs(abs(np.linalg.det(ds.Z / math.sqrt(3))) - 1) <= 1e-10


def test_haar_isotropic_gram_is_scaled_identity():
    ds = sample_haar(12, isotropic_spectrum(40), trial_rng(2))
    np.testing.assert_allclose(gram(ds).K, 40 * np.eye(12), atol=1e-8 * 40)


def test_haar_distribution_first_entry_symmetric():
    # sign convention must not bias entries: the mean over draws is near 0
    vals = [sample_haar(2, isotropic_spectrum(4), trial_rng(s)).Z[0, 0] for s in range(2000)]
    assert abs(np.mean(vals)) < 0.1


def test_one_bit_positive_projection():
    X = np.array([[2.0, 0.3, -1.0]])
    ds = Dataset(X, isotropic_spectrum(3))
    out = apply_labels(ds, LabelModel("one_bit", w=np.array([1.0, 0.0, 0.0])), trial_rng(0))
    assert out.y.tolist() == [1.0]


def test_one_bit_tie_goes_positive():
    ds = Dataset(np.array([[0.0, 1.0]]), isotropic_spectrum(2))
    out = apply_labels(ds, LabelModel("one_bit", w=np.array([1.0, 0.0])), trial_rng(0))
    assert out.y.tolist() == [1.0]


def test_logistic_zero_weights_is_fair_coin():
    ds = sample_independent(4000, isotropic_spectrum(4000), "gaussian", trial_rng(0))
    out = apply_labels(ds, LabelModel("logistic", w=np.zeros(4000)), trial_rng(1))
    assert abs(out.y.mean()) < 4 / math.sqrt(4000)


def test_probit_large_weights_deterministic():
    ds = sample_independent(50, isotropic_spectrum(60), "gaussian", trial_rng(0))
    w = np.zeros(60)
    w[0] = 1e6
    out = apply_labels(ds, LabelModel("probit", w=w), trial_rng(1))
    np.testing.assert_array_equal(out.y, np.where(ds.X()[:, 0] >= 0, 1.0, -1.0))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_fixed_labels_ignore_seed(seed):
    ds = Dataset(np.eye(3), isotropic_spectrum(3))
    out = apply_labels(ds, LabelModel("fixed", values=(1, -1, 1)), trial_rng(seed))
    assert out.y.tolist() == [1.0, -1.0, 1.0]


def test_fixed_default_all_ones():
    ds = Dataset(np.eye(4), isotropic_spectrum(4))
    assert apply_labels(ds, LabelModel("fixed"), trial_rng(0)).y.tolist() == [1.0] * 4


@pytest.mark.parametrize("h", ["intersection", "xor", "mean_logistic"])
def test_multi_index_labels_are_signs(h):
    ds = sample_independent(30, isotropic_spectrum(40), "gaussian", trial_rng(0))
    W = trial_rng(1).standard_normal((3, 40))
    out = apply_labels(ds, LabelModel("multi_index", W=W, h=h), trial_rng(2))
    assert set(np.unique(out.y)) <= {-1.0, 1.0}


def test_random_signs_balanced():
    ds = sample_independent(2000, isotropic_spectrum(2000), "gaussian", trial_rng(0))
    y = apply_labels(ds, LabelModel("random_signs"), trial_rng(3)).y
    assert abs(y.mean()) < 0.1


def test_label_model_validation():
    with pytest.raises(ValueError):
        LabelModel("sigmoid")


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(np.ones((2, 3)), isotropic_spectrum(4))
    with pytest.raises(ValueError):
        Dataset(np.ones((2, 3)), isotropic_spectrum(3), y=[1, 0])
    with pytest.raises(ValueError):
        Dataset(np.ones((2, 3)), isotropic_spectrum(3), y=[1, 1, 1])


def test_scaled_features_on_demand():
    s = spiked_spectrum(4, 1, 0.5)
    ds = Dataset(np.ones((2, 4)), s)
    np.testing.assert_allclose(ds.X(), np.ones((2, 4)) * np.sqrt(s.lam))


def test_trig_features_at_zero():
    z = trig_features(np.array([0.0]), 4)[0]
    np.testing.assert_array_equal(z, [1, 1, 0, 1, 0, 1, 0, 1, 0])


@settings(max_examples=25, deadline=None)
@given(st.integers(4, 200), st.floats(0.0, 4.0), st.integers(0, 2**31))
def test_trig_rows_have_constant_weighted_norm(k, decay, seed):
    ds = trig_dataset(8, k, decay, None, trial_rng(seed))
    lam = ds.spectrum.lam
    norms = (ds.Z**2 * lam).sum(axis=1)
    # each (cos, sin) pair shares one weight, so the constant is 1 + sum(eta) = (l1 + 1) / 2
    np.testing.assert_allclose(norms, (ds.spectrum.l1 + 1) / 2, rtol=1e-12)


def test_trig_figure_setting_nonsingular():
    ds = trig_dataset(32, 2**14, 1.0, LabelModel("random_signs"), trial_rng(2021, 0, "inputs"))
    gf = gram(ds)
    assert not gf.singular_flag
    assert gf.condition_estimate < 1e8


def test_trig_inputs_recorded():
    ds = trig_dataset(5, 3, 1.0, None, trial_rng(0))
    t = np.asarray(ds.seed_record["t"])
    assert t.shape == (5,) and np.all((0 <= t) & (t < 2 * math.pi))
    np.testing.assert_array_equal(ds.Z, trig_features(t, 3))
    np.testing.assert_array_equal(ds.spectrum.lam, trig_spectrum(3, 1.0).lam)


def test_save_load_round_trip(tmp_path):
    s = spiked_spectrum(9, 2, 0.3)
    ds = sample_independent(6, s, "gaussian", trial_rng(4))
    lm = LabelModel("logistic", w=trial_rng(5).standard_normal(9))
    ds = apply_labels(ds, lm, trial_rng(6))
    save_dataset(ds, tmp_path, lm, stem="inst")
    back = load_dataset(tmp_path / "inst.json")
    assert back.Z.tobytes() == ds.Z.tobytes()
    assert back.y.tobytes() == ds.y.tobytes()
    assert back.spectrum.lam.tobytes() == ds.spectrum.lam.tobytes()
    assert back.law == "gaussian"


def test_joint_row_permutation_equivariance():
    from svprolif.equivalence import check_equivalence

    ds = sample_independent(10, isotropic_spectrum(25), "gaussian", trial_rng(8))
    ds = apply_labels(ds, LabelModel("random_signs"), trial_rng(9))
    perm = trial_rng(10).permutation(10)
    pds = Dataset(ds.Z[perm], ds.spectrum, ds.y[perm])
    a = check_equivalence(ds, gram(ds), run_solver=True)
    b = check_equivalence(pds, gram(pds), run_solver=True)
    np.testing.assert_allclose(a.beta[perm], b.beta, rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(a.loo_stats[perm], b.loo_stats, rtol=1e-9, atol=1e-12)
    assert a.cond1_all_sv == b.cond1_all_sv
