import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from svprolif.spectra import (
    RateRegionPoint,
    Region,
    Spectrum,
    bilevel_spectrum,
    effective_dims,
    isotropic_spectrum,
    rate_region_classify,
    spectrum_from_json,
    spiked_spectrum,
    trig_spectrum,
)

positive = st.floats(min_value=1e-6, max_value=1e6, allow_nan=False, allow_infinity=False)


def test_isotropic_five():
    ed = effective_dims(Spectrum([1, 1, 1, 1, 1]))
    assert ed.d2 == 5 and ed.d_inf == 5 and ed.d == 5


def test_two_one_one_one():
    ed = effective_dims(Spectrum([2, 1, 1, 1]))
    assert ed.d2 == pytest.approx(25 / 7, rel=1e-15)
    assert ed.d_inf == pytest.approx(2.5, rel=1e-15)


def test_trig_harmonic_oracle():
    k = 2**14
    harmonic = math.fsum(1.0 / i for i in range(1, k + 1))
    ed = effective_dims(trig_spectrum(k, 1.0))
    assert ed.d_inf == pytest.approx(1 + 2 * harmonic, rel=1e-13)
    assert abs(ed.d_inf - 21.5626) < 0.01
    assert abs(ed.d2 - 108.386) < 0.05


def test_trig_decay3_zeta_oracle():
    k = 2**14
    ed = effective_dims(trig_spectrum(k, 3.0))
    assert ed.d_inf == pytest.approx(1 + 2 * math.fsum(i**-3.0 for i in range(1, k + 1)), rel=1e-13)
    assert ed.d_inf == pytest.approx(3.404, abs=1e-3)


def test_trig_k1():
    np.testing.assert_array_equal(trig_spectrum(1, 1.0).lam, [1.0, 1.0, 1.0])


def test_bilevel_construction():
    s = bilevel_spectrum(RateRegionPoint(2, 0.5, 0.5), 100)
    assert s.d == 10000
    assert np.sum(s.lam == s.lam[0]) == 10
    assert s.lam[0] == pytest.approx(100.0, rel=1e-12)
    assert s.lam[-1] == pytest.approx(9000 / 9990, rel=1e-12)
    assert s.l1 == pytest.approx(10000.0, rel=1e-12)


def test_bilevel_exponents_n100():
    pt = RateRegionPoint(2, 0.5, 0.5)
    n = 100
    ed = effective_dims(bilevel_spectrum(pt, n))
    target_inf = n ** (pt.q + pt.r)
    target_2 = n ** min(2 * pt.q + pt.r, pt.p)
    assert target_inf / 2 <= ed.d_inf <= 2 * target_inf
    assert target_2 / 4 <= ed.d2 <= 4 * target_2


@pytest.mark.parametrize("p,q,r", [(2, 0.5, 0.5), (1.5, 0.3, 0.4), (2.5, 0.8, 0.3)])
@pytest.mark.parametrize("n", [50, 100, 200])
def test_bilevel_exponent_consistency(p, q, r, n):
    ed = effective_dims(bilevel_spectrum(RateRegionPoint(p, q, r), n))
    assert abs(math.log(ed.d_inf) / math.log(n) - (q + r)) <= 0.15


@given(st.lists(positive, min_size=1, max_size=60))
def test_dimension_ordering(lam):
    ed = effective_dims(Spectrum(lam))
    tol = 8 * np.finfo(float).eps * ed.d
    assert ed.d + tol >= ed.d2 >= ed.d_inf - tol
    assert ed.d_inf >= 1 - tol


@given(st.lists(positive, min_size=1, max_size=40), st.floats(min_value=1e-3, max_value=1e3))
def test_scaling_invariance(lam, c):
    a = effective_dims(Spectrum(lam))
    b = effective_dims(Spectrum(np.asarray(lam) * c))
    assert b.d2 == pytest.approx(a.d2, rel=1e-12)
    assert b.d_inf == pytest.approx(a.d_inf, rel=1e-12)


@given(st.integers(min_value=1, max_value=500))
def test_isotropic_exact(d):
    ed = effective_dims(isotropic_spectrum(d))
    assert ed.d2 == d and ed.d_inf == d


@pytest.mark.parametrize("bad", [[], [1.0, 0.0], [1.0, -2.0], [float("nan")], [float("inf")]])
def test_spectrum_rejects(bad):
    with pytest.raises(ValueError):
        Spectrum(bad)


def test_spectrum_immutable():
    s = Spectrum([1.0, 2.0])
    with pytest.raises(ValueError):
        s.lam[0] = 5.0


@pytest.mark.parametrize("pt,region", [
    ((3, 0.2, 0.5), Region.BENIGN_MARGIN),
    ((3, 1.2, 0.5), Region.BENIGN_PROLIFERATION),
    ((1.1, 1.6, 0.5), Region.OUTSIDE),
    ((3, 0.7, 0.5), Region.PRIOR_WORK_GAP),
    ((3, 0.5, 0.5), Region.BOUNDARY),
])
def test_rate_region_examples(pt, region):
    assert rate_region_classify(RateRegionPoint(*pt)) == region


def test_rate_region_edges_sorted():
    # benign-proliferation needs the old upper region, which opens once p > 2
    assert rate_region_classify(RateRegionPoint(1.8, 0.8, 0.5)) == Region.PRIOR_WORK_GAP
    assert rate_region_classify(RateRegionPoint(4, 1.8, 0.5)) == Region.BENIGN_PROLIFERATION


@settings(max_examples=200)
@given(st.floats(1.01, 4), st.floats(1e-6, 3), st.floats(0.01, 0.99), st.floats(-1e-10, 1e-10))
def test_rate_region_stable_under_tiny_perturbations(p, q, r, eps):
    edges = [1 - r, 1 - r + (p - 1) / 2, 1.5 - r]
    if min(abs(q - e) for e in edges) < 1e-8:
        return
    assert rate_region_classify(RateRegionPoint(p, q, r)) == \
        rate_region_classify(RateRegionPoint(p, q + eps, r))


@pytest.mark.parametrize("bad", [(1.0, 0.5, 0.5), (2, -0.1, 0.5), (2, 0.5, 0.0), (2, 0.5, 1.0)])
def test_rate_point_validation(bad):
    with pytest.raises(ValueError):
        RateRegionPoint(*bad)


def test_spiked_validation():
    with pytest.raises(ValueError):
        spiked_spectrum(5, 5, 0.5)
    with pytest.raises(ValueError):
        spiked_spectrum(5, 2, 1.0)


@pytest.mark.parametrize("obj", [
    {"kind": "isotropic", "d": 7},
    {"kind": "spiked", "d": 20, "k": 3, "a": 0.4},
    {"kind": "bilevel", "p": 2, "q": 0.5, "r": 0.5, "n": 20},
    {"kind": "trig", "k": 5, "decay": 2.0},
    {"d": 3, "lambda": [3.0, 0.5, 1e-3]},
])
def test_json_round_trip(obj):
    s = spectrum_from_json(obj)
    again = spectrum_from_json(json.loads(json.dumps(s.to_json())))
    np.testing.assert_array_equal(s.lam, again.lam)
    explicit = spectrum_from_json({"d": s.d, "lambda": s.lam.tolist()})
    np.testing.assert_array_equal(s.lam, explicit.lam)


def test_json_d_mismatch():
    with pytest.raises(ValueError):
        spectrum_from_json({"d": 4, "lambda": [1.0, 2.0]})


def test_bilevel_json_needs_n():
    with pytest.raises(ValueError):
        spectrum_from_json({"kind": "bilevel", "p": 2, "q": 0.5, "r": 0.5})
    assert spectrum_from_json({"kind": "bilevel", "p": 2, "q": 0.5, "r": 0.5}, n=10).d == 100
