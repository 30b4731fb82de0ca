import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import hdtest.modelcheck as mc
from hdtest.datagen import seeded_stream
from hdtest.errors import TooFewObservations
from hdtest.estimators import w_stat
from hdtest.matcore import Sample
from hdtest.modelcheck import diagnose, eta_hat, kappa, kappa_power, select_k, sse_check, tau_tilde


def test_kappa_printed_values():
    assert round(kappa(47), 3) == 0.286
    assert round(kappa(25), 3) == 0.359


def test_kappa_direct():
    assert kappa(3) == pytest.approx(math.sqrt(math.log(3) / 3))
    assert kappa(3) == pytest.approx(0.605, abs=5e-4)
    assert kappa_power(0.25)(16) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        kappa_power(0.5)


def _one_factor(p, n, r, seed):
    z = seeded_stream(seed, r).standard_normal((p, n))
    z[0] *= np.sqrt(p)
    return Sample(z)


def test_sse_detected_for_dominant_factor():
    hits = sum(sse_check(_one_factor(1000, 50, r, 1), _one_factor(1000, 50, r + 500, 1)).sse
               for r in range(200))
    assert hits >= 190


def test_identity_is_nsse():
    misses = 0
    for r in range(200):
        rng = seeded_stream(2, r)
        d = sse_check(Sample(rng.standard_normal((1000, 50))), Sample(rng.standard_normal((1000, 50))))
        misses += d.sse
    assert misses <= 10


def _equal_spectrum(n=5, scale=3.0):
    # observations spanning the centered subspace evenly: all lambda-hat equal
    vals, vecs = np.linalg.eigh(np.eye(n) - np.ones((n, n)) / n)
    return Sample(vecs[:, vals > 0.5].T * scale)


def test_zero_lambda_tilde_gives_zero_eta(rng, monkeypatch):
    # an equal spectrum forces W_n = 0 as well, so lambda-tilde_1 is stubbed
    s = Sample(rng.standard_normal((20, 8)))
    assert w_stat(s).value > 0
    monkeypatch.setattr(mc, "nr_eigenvalues", lambda summary: np.zeros(summary.n - 2))
    eta, flagged = eta_hat(s)
    assert eta == 0.0 and not flagged
    assert not sse_check(s, s).sse


def test_nonpositive_w_flags_inf():
    s = _equal_spectrum()
    assert w_stat(s).value <= 0
    d = sse_check(s, s)
    assert d.eta == (math.inf, math.inf) and d.sse and len(d.flags) == 2
    assert d.to_dict()["eta1"] == "inf"


def test_k_zero_under_identity():
    zeros = sum(select_k(Sample(seeded_stream(3, r).standard_normal((500, 60)))) == 0
                for r in range(200))
    assert zeros >= 180


def test_k_capped_for_small_split(rng):
    for _ in range(20):
        s = Sample(rng.standard_normal((50, 6)) * np.r_[30.0, 20.0, np.ones(48)][:, None])
        assert select_k(s) <= 1


def test_select_k_needs_six():
    with pytest.raises(TooFewObservations):
        select_k(Sample(np.eye(4, 5)))


@given(arrays(np.float64, (12, 9), elements=st.floats(-10, 10, allow_nan=False)),
       st.floats(1e-3, 1e3))
def test_select_k_scale_invariant(x, c):
    s = Sample(x)
    if not np.any(s.summary.centered):
        return
    assert select_k(Sample(c * x)) == select_k(s)


def test_tau_tilde_ratio(rng):
    s = Sample(rng.standard_normal((30, 14)))
    t = tau_tilde(s)
    assert len(t) == 6
    assert np.all(t[:-1] >= 0)


def test_diagnosis_report_is_json(rng):
    s1 = Sample(rng.standard_normal((40, 12)))
    s2 = Sample(rng.standard_normal((40, 10)))
    d = diagnose(s1, s2).to_dict()
    assert {"eta1", "eta2", "kappa1", "kappa2", "sse", "k1", "k2"} <= set(d)
    json.loads(json.dumps(d, allow_nan=False))
    assert d["kappa1"] == pytest.approx(kappa(12))
    assert d["sse"] == (d["eta1"] >= d["kappa1"] or d["eta2"] >= d["kappa2"])
