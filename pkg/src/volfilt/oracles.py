"""
Theory checks for the detector and the location estimator
=========================================================

Monte Carlo and closed-form expressions for

* the weight ``lam`` that minimises the expected squared error of the
  combined filter, around a single variance step;
* the expected squared output of a filter straddling a step;
* the expected differenced volatility profile near a step.

Time convention: ``t_rel`` counts the post-change samples inside the fast
and slow filter windows (``t_rel = 0`` means the filters have not yet seen the
change).
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from scipy.special import gammaln


@dataclass(frozen=True)
class TransitionSpec:
    sigma1: float
    sigma2: float
    tau: int = 0
    T_f: int = 20
    T_s: int = 250
    T_l: int = 20

    def __post_init__(self):
        if not (self.sigma1 > 0 and self.sigma2 > 0):
            raise ValueError("sigmas must be positive")


def _step_block(spec, n_rows, n_back, t_rel, lookahead, rng):
    """Squared samples, column 0 newest. Columns ``< n_post`` are post-change."""
    n_cols = n_back + lookahead
    n_post = t_rel + lookahead
    sig = np.where(np.arange(n_cols) < n_post, spec.sigma2, spec.sigma1)
    return (rng.standard_normal((n_rows, n_cols)) * sig) ** 2


def expected_lambda_minimizer(spec, weights_f, weights_s, weights_d, t_rel, n_mc=10_000, seed=0, lag=None,
                              return_parts=False):
    """Monte Carlo estimate of the error-minimising convex weight.

    ``E[(sd - ss)(sf - ss)] / E[(sf - ss)^2]`` with all expectations taken on
    the same draws. ``weights_d`` is newest-first and its first entry applies
    to the sample one step ahead of the step time. The fast and slow windows
    end ``lag`` samples before that step time (``lag=None`` means
    ``len(weights_d) - 1``, the detector default).

    Raises
    ------
    ValueError
        When ``n_mc < 1000`` or the denominator vanishes.
    """
    if n_mc < 1000:
        raise ValueError("n_mc must be at least 1000")
    wf = np.asarray(weights_f, float)
    ws = np.asarray(weights_s, float)
    wd = np.asarray(weights_d, float)
    if lag is None:
        lag = len(wd) - 1
    look = lag + 1  # samples newer than the fast/slow windows
    n_back = max(len(wf), len(ws), len(wd) - look)
    rng = np.random.default_rng(seed)
    X = _step_block(spec, n_mc, n_back, t_rel, look, rng)
    sf = np.sqrt(X[:, look:look + len(wf)] @ wf)
    ss = np.sqrt(X[:, look:look + len(ws)] @ ws)
    sd = np.sqrt(X[:, :len(wd)] @ wd)
    num = float(np.mean((sd - ss) * (sf - ss)))
    den = float(np.mean((sf - ss) ** 2))
    if den <= 1e-14 * max(1.0, spec.sigma1 ** 2, spec.sigma2 ** 2):
        raise ValueError("degenerate denominator: fast and slow filters coincide")
    if return_parts:
        return num / den, num, den
    return num / den


def mixture_masses(weights, t_rel):
    """``(pre, post)`` weight mass when the newest ``t_rel`` samples are post-change."""
    w = np.asarray(weights, float)
    if not 0 <= t_rel <= len(w):
        raise ValueError("t_rel must lie in [0, window size]")
    post = float(np.sum(w[:t_rel]))
    return float(np.sum(w)) - post, post


def expected_mixture_variance(spec, weights, t_rel):
    """Closed-form expected squared filter output straddling the step."""
    pre, post = mixture_masses(weights, t_rel)
    return pre * spec.sigma1 ** 2 + post * spec.sigma2 ** 2


def expected_sigmaD_profile(spec, k, form="consistent"):
    """First-order expected differenced volatility at offset ``k`` from ``tau + T_l - 1``.

    Uses ``E[sigma] ~ sqrt(E[sigma^2])``. ``k = 0`` gives ``sigma2 - sigma1``.

    Parameters
    ----------
    spec : TransitionSpec
    k : int
        Offset in ``[-T_l, T_l]``.
    form : {"consistent", "printed"}
        ``"consistent"`` counts the samples on each side of the step exactly,
        with window weights normalised to one: for ``k > 0`` the lagged window
        holds ``k`` post-change samples, for ``k < 0`` the current window
        holds ``|k|`` pre-change samples. ``"printed"`` evaluates the
        textbook expressions ``sigma2 - sqrt(((T-k) s1 + (k-1) s2) / (T-1))``
        and its mirror image; these tie with ``k = 0`` at ``|k| = 1``.
    """
    T = spec.T_l
    if not -T <= k <= T:
        raise ValueError("k must lie in [-T_l, T_l]")
    s1, s2 = spec.sigma1 ** 2, spec.sigma2 ** 2
    if k == 0:
        return spec.sigma2 - spec.sigma1
    if form == "printed":
        j = abs(k)
        if k > 0:
            return spec.sigma2 - math.sqrt(((T - j) * s1 + (j - 1) * s2) / (T - 1))
        return math.sqrt(((T - j) * s2 + (j - 1) * s1) / (T - 1)) - spec.sigma1
    if form != "consistent":
        raise ValueError(f"unknown form {form!r}")
    if k > 0:
        cur = s2
        lagged = ((T - k) * s1 + k * s2) / T
    else:
        j = -k
        cur = (j * s1 + (T - j) * s2) / T
        lagged = s1
    return math.sqrt(cur) - math.sqrt(lagged)


def exact_sigmaD_peak(spec):
    """Exact ``E[sigma_D(tau + T_l - 1)]`` for the square window ``1/(T_l-1)``.

    Both windows are homogeneous there, so each term is a scaled chi mean.
    """
    T = spec.T_l
    chi_mean = math.exp(0.5 * math.log(2.0) + gammaln((T + 1) / 2) - gammaln(T / 2))
    c = chi_mean / math.sqrt(T - 1)
    return c * (spec.sigma2 - spec.sigma1)


def mc_sigmaD(spec, k, n_mc=10_000, seed=0):
    """Monte Carlo draws of ``sigma_D`` at offset ``k`` (square window ``1/(T_l-1)``)."""
    T = spec.T_l
    rng = np.random.default_rng(seed)
    t = spec.T_l - 1 + k  # relative to tau
    idx = np.arange(t - 2 * T + 1, t + 1)  # lagged window then current window
    sig = np.where(idx >= 0, spec.sigma2, spec.sigma1)
    X = (rng.standard_normal((n_mc, 2 * T)) * sig) ** 2
    lagged = np.sqrt(X[:, :T].sum(axis=1) / (T - 1))
    cur = np.sqrt(X[:, T:].sum(axis=1) / (T - 1))
    return cur - lagged


def lambda_profile(spec, schemes, t_rels, T_d=10, n_mc=10_000, seed=0, lag=None):
    """Table of minimising weights for several weight schemes.

    ``schemes`` maps a label to ``(weights_f, weights_s)``.
    """
    wd = np.full(T_d + 2, 1.0 / (T_d + 2))
    rows = []
    for t in t_rels:
        row = {"t_rel": int(t)}
        for name, (wf, ws) in schemes.items():
            try:
                row[name] = expected_lambda_minimizer(spec, wf, ws, wd, t, n_mc, seed, lag)
            except ValueError:
                row[name] = float("nan")
        rows.append(row)
    return rows
