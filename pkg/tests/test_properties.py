"""Randomised invariants (hypothesis)."""
import math

import numpy as np
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from volfilt.afcd import AfcdConfig, clamp_unit, detect_afcd
from volfilt.cafcd import CafcdConfig, combine_lambdas, detect_cafcd
from volfilt.evaluation import match_detections
from volfilt.filters import VolatilityFilter, fast_slow_weights, filter_series

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
SMALL = dict(T_s=30, T_f=5, T_d=3)


@settings(max_examples=60, deadline=None)
@given(arrays(float, st.integers(1, 120), elements=finite),
       st.sampled_from(["triangular", "uniform"]), st.integers(4, 12))
def test_filter_batch_matches_brute_force(x, scheme, T):
    w = fast_slow_weights(scheme, T // 2, T)[1]
    out = filter_series(x, w)
    f = VolatilityFilter(w)
    for t, v in enumerate(x):
        s = f.push(v)
        if t < len(w) - 1:
            assert s is None and math.isnan(out[t])
        else:
            ref = math.sqrt(sum(w[k] * x[t - k] ** 2 for k in range(len(w))))
            assert math.isclose(out[t], ref, rel_tol=1e-12, abs_tol=1e-12)
            assert math.isclose(s, ref, rel_tol=1e-12, abs_tol=1e-12)


@settings(max_examples=40, deadline=None)
@given(arrays(float, st.integers(40, 300), elements=finite),
       st.floats(1e-3, 50), st.sampled_from(["triangular", "uniform"]))
def test_lambda_stays_in_unit_interval(x, mu, scheme):
    res = detect_afcd(x, AfcdConfig(mu=mu, weight_scheme=scheme, **SMALL), vce=False)
    lam = res.lam[~np.isnan(res.lam)]
    assert np.all((lam >= 0) & (lam <= 1))
    times = res.detect_times
    assert all(b - a > 36 for a, b in zip(times, times[1:]))  # refractory round(1.2 * 30)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 4), st.integers(40, 200), st.integers(0, 2**31), st.floats(1e-3, 20))
def test_psi_stays_in_unit_interval(C, n, seed, mu):
    x = np.random.default_rng(seed).standard_normal((n, C)) * np.linspace(0.5, 3, n)[:, None]
    cfg = CafcdConfig.uniform(AfcdConfig(mu=mu, **SMALL), C, seed=seed)
    res = detect_cafcd(x, cfg, vce=False)
    psi = res.lam[~np.isnan(res.lam)]
    assert np.all((psi >= 0) & (psi <= 1))


@given(st.lists(st.floats(0, 1), min_size=1, max_size=10), st.data())
def test_combine_bounds_and_order(lams, data):
    raw = data.draw(st.lists(st.floats(0.01, 1), min_size=len(lams), max_size=len(lams)))
    g = [v / sum(raw) for v in raw]
    psi = combine_lambdas(lams, g)
    assert min(lams) - 1e-12 <= psi <= max(lams) + 1e-12
    perm = data.draw(st.permutations(range(len(lams))))
    assert combine_lambdas([lams[i] for i in perm], [g[i] for i in perm]) == psi


@given(st.floats(-1e6, 1e6, allow_nan=False))
def test_clamp(v):
    c = clamp_unit(v)
    assert 0 <= c <= 1 and (c == v or v < 0 or v > 1)


@given(st.lists(st.integers(0, 5000), max_size=30), st.lists(st.integers(0, 5000), max_size=10, unique=True),
       st.integers(1, 500))
def test_match_invariants(dets, truths, window):
    from volfilt.evaluation import MatchConfig
    r = match_detections(dets, truths, MatchConfig(window))
    assert 0 <= r.n_matched <= min(len(dets), len(truths))
    assert r.n_false + r.n_matched == len(dets)
    assert all(0 <= v <= window for v in r.latencies)
    assert 0 <= r.tp_proportion <= 1 and 0 <= r.fp_proportion <= 1
    assert match_detections(dets[::-1], truths[::-1], MatchConfig(window)).summary() == r.summary()
