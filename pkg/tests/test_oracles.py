import math

import numpy as np
import pytest

from volfilt.afcd import make_desired_weights
from volfilt.filters import fast_slow_weights, make_triangular_fast_weights, make_uniform_weights
from volfilt.oracles import (
    TransitionSpec,
    exact_sigmaD_peak,
    expected_lambda_minimizer,
    expected_mixture_variance,
    expected_sigmaD_profile,
    mc_sigmaD,
    mixture_masses,
)

WD = make_desired_weights(10)


def naive_minimizer(spec, wf, ws, wd, t_rel, n_mc, seed, lag):
    """Explicit time-indexed version: the change happens at index 0, the
    filters end at time t_rel - 1 and the desired window at t_rel + lag."""
    rng = np.random.default_rng(seed)
    look = lag + 1
    n_back = max(len(wf), len(ws), len(wd) - look)
    end = t_rel - 1 + look  # newest sample index
    idx = end - np.arange(n_back + look)  # newest first
    sig = np.where(idx >= 0, spec.sigma2, spec.sigma1)
    X = (rng.standard_normal((n_mc, len(idx))) * sig) ** 2
    num = den = 0.0
    for r in range(n_mc):
        row = X[r]
        f = math.sqrt(sum(w * row[look + i] for i, w in enumerate(wf)))
        s = math.sqrt(sum(w * row[look + i] for i, w in enumerate(ws)))
        d = math.sqrt(sum(w * row[i] for i, w in enumerate(wd)))
        num += (d - s) * (f - s)
        den += (f - s) ** 2
    return num / den


def test_spec_validation():
    with pytest.raises(ValueError):
        TransitionSpec(0.0, 1.0)


@pytest.mark.parametrize("lag", [0, 11])
@pytest.mark.parametrize("t_rel", [0, 3, 25])
def test_minimizer_matches_naive(lag, t_rel):
    spec = TransitionSpec(1.0, 2.0)
    wf, ws = fast_slow_weights("triangular", 20, 60)
    a = expected_lambda_minimizer(spec, wf, ws, WD, t_rel, 1000, 3, lag)
    b = naive_minimizer(spec, wf, ws, WD, t_rel, 1000, 3, lag)
    assert a == pytest.approx(b, rel=1e-9)


def test_minimizer_errors():
    spec = TransitionSpec(1.0, 1.0)
    w = make_uniform_weights(10)
    with pytest.raises(ValueError):
        expected_lambda_minimizer(spec, w, w, WD, 0, 2000)
    with pytest.raises(ValueError):
        expected_lambda_minimizer(spec, w, make_uniform_weights(20), WD, 0, 999)


def test_minimizer_stationary_values():
    # frozen Monte Carlo values (seed 0, 10^4 draws); the aligned form is the
    # textbook one, the lagged form is the detector's default
    spec = TransitionSpec(1.0, 1.0)
    wf, ws = fast_slow_weights("triangular", 20, 250)
    aligned = expected_lambda_minimizer(spec, wf, ws, WD, 0, 10_000, 0, lag=0)
    lagged = expected_lambda_minimizer(spec, wf, ws, WD, 0, 10_000, 0)
    assert aligned == pytest.approx(1.0137, abs=1e-4)
    assert lagged == pytest.approx(0.0919, abs=1e-4)


def test_triangular_vs_uniform_after_fast_window():
    # once the fast window is entirely post-change the triangular pair keeps
    # the larger weight
    spec = TransitionSpec(1.0, 2.0)
    for t in (20, 30, 40):
        tri = expected_lambda_minimizer(spec, *fast_slow_weights("triangular", 20, 250), WD, t, 10_000, 0, 0)
        uni = expected_lambda_minimizer(spec, *fast_slow_weights("uniform", 20, 250), WD, t, 10_000, 0, 0)
        assert tri > uni


def test_mixture_variance():
    spec = TransitionSpec(1.0, 2.0)
    w = make_triangular_fast_weights(4)
    assert expected_mixture_variance(spec, w, 2) == pytest.approx(3.1)
    assert expected_mixture_variance(spec, w, 0) == pytest.approx(1.0)
    assert expected_mixture_variance(spec, w, 4) == pytest.approx(4.0)
    u = make_uniform_weights(5)
    assert expected_mixture_variance(spec, u, 0) == pytest.approx(1.25)
    pre = [mixture_masses(w, t)[0] for t in range(5)]
    post = [mixture_masses(w, t)[1] for t in range(5)]
    assert all(a >= b for a, b in zip(pre, pre[1:])) and all(a <= b for a, b in zip(post, post[1:]))
    with pytest.raises(ValueError):
        mixture_masses(w, 5)


def test_sigmaD_profile_values():
    assert expected_sigmaD_profile(TransitionSpec(1.0, 2.0, T_l=20), 0) == 1.0
    for k in range(-20, 21):
        assert expected_sigmaD_profile(TransitionSpec(1.5, 1.5, T_l=20), k) == 0.0
    s50 = TransitionSpec(1.0, 2.0, T_l=50)
    assert expected_sigmaD_profile(s50, 10, form="printed") == pytest.approx(2 - math.sqrt(76 / 49))  # 0.7546
    assert expected_sigmaD_profile(s50, 10) == pytest.approx(2 - math.sqrt(80 / 50))  # 0.7351
    assert expected_sigmaD_profile(s50, -10) == pytest.approx(math.sqrt((10 + 40 * 4) / 50) - 1)
    assert expected_sigmaD_profile(s50, 50) == 0.0
    with pytest.raises(ValueError):
        expected_sigmaD_profile(s50, 51)
    with pytest.raises(ValueError):
        expected_sigmaD_profile(s50, 3, form="other")


@pytest.mark.parametrize("s1,s2", [(1, 2), (2, 1), (1, 1.3)])
@pytest.mark.parametrize("T_l", [20, 50, 100])
def test_sigmaD_extremum(s1, s2, T_l):
    spec = TransitionSpec(s1, s2, T_l=T_l)
    peak = abs(expected_sigmaD_profile(spec, 0))
    assert all(peak > abs(expected_sigmaD_profile(spec, k)) for k in range(-T_l, T_l + 1) if k)


def test_exact_peak_matches_monte_carlo():
    spec = TransitionSpec(1.0, 2.0, T_l=20)
    d = mc_sigmaD(spec, 0, 10_000, 1)
    se = d.std(ddof=1) / math.sqrt(len(d))
    assert abs(d.mean() - exact_sigmaD_peak(spec)) < 3 * se
    assert exact_sigmaD_peak(spec) == pytest.approx(1.0132387, abs=1e-6)
