"""Numba-compiled inner loops shared by the batch detectors.

Not part of the public API. The streaming classes in :mod:`volfilt.afcd`,
:mod:`volfilt.cafcd` and :mod:`volfilt.glr` implement the same recursions in
plain Python and are tested against these.
"""
import math

import numpy as np
from numba import njit


@njit(cache=True)
def fir_volatility(x2, w):
    n = x2.shape[0]
    T = w.shape[0]
    out = np.full(n, np.nan)
    for t in range(T - 1, n):
        acc = 0.0
        for k in range(T):
            acc += w[k] * x2[t - k]
        out[t] = math.sqrt(acc)
    return out


@njit(cache=True)
def afcd_loop(sf, ss, sd, u, t0, mu, rho, gamma, arm_level, T_r, persistent, normalize):
    """Single-channel SS-LMS recursion.

    Step ``t`` runs for ``t0 <= t <= n - 2`` and consumes ``u[t - t0]``.
    ``lam[t]`` holds the weight after the update at step ``t``. With
    ``normalize`` the learning rate is divided by the first slow-filter variance.
    """
    n = sf.shape[0]
    lam_out = np.full(n, np.nan)
    state = np.zeros(n, np.int8)
    events = np.empty(n, np.int64)
    n_events = 0

    lam = 1.0
    armed = False
    hold = 0
    v_ref = ss[t0] * ss[t0]
    v_cur = v_ref
    if normalize and v_ref > 0.0:
        mu = mu / v_ref
    for t in range(t0, n - 1):
        f = sf[t]
        s = ss[t]
        so = lam * f + (1.0 - lam) * s
        e = sd[t] - so
        m = mu
        if v_cur > 0.0 and v_ref > 0.0:
            m = mu * (v_ref / v_cur)
        lam = lam + m * (abs(lam) + rho * u[t - t0]) * e * (f - s)
        if lam > 1.0:
            lam = 1.0
        elif lam < 0.0:
            lam = 0.0
        lam_out[t] = lam

        if hold > 0:
            state[t] = 1
            hold -= 1
            if hold == 0:
                if persistent:
                    v_cur = s * s
                else:
                    v_cur = v_ref
        elif not armed:
            if lam < arm_level:
                armed = True
        elif lam >= gamma:
            events[n_events] = t
            n_events += 1
            state[t] = 1
            hold = T_r
            armed = False
            v_cur = s * s
    return lam_out, state, events[:n_events]


@njit(cache=True)
def cafcd_loop(sf, ss, sd, u, t0, mu, rho, g, gamma, arm_level, T_r, persistent, normalize):
    """Combine-then-adapt recursion over ``C`` channels (arrays are ``(n, C)``)."""
    n, C = sf.shape
    psi_out = np.full(n, np.nan)
    state = np.zeros(n, np.int8)
    events = np.empty(n, np.int64)
    n_events = 0

    lam = np.ones(C)
    prod = np.empty(C)
    for c in range(C):
        prod[c] = g[c] * lam[c]
    prod.sort()
    psi = 0.0
    for c in range(C):
        psi += prod[c]
    if psi > 1.0:
        psi = 1.0

    armed = False
    hold = 0
    v_ref = np.empty(C)
    v_cur = np.empty(C)
    mu = mu.copy()
    for c in range(C):
        v_ref[c] = ss[t0, c] * ss[t0, c]
        v_cur[c] = v_ref[c]
        if normalize and v_ref[c] > 0.0:
            mu[c] = mu[c] / v_ref[c]

    for t in range(t0, n - 1):
        for c in range(C):
            f = sf[t, c]
            s = ss[t, c]
            so = psi * f + (1.0 - psi) * s
            e = sd[t, c] - so
            m = mu[c]
            if v_cur[c] > 0.0 and v_ref[c] > 0.0:
                m = mu[c] * (v_ref[c] / v_cur[c])
            lc = psi + m * (abs(psi) + rho[c] * u[t - t0, c]) * e * (f - s)
            if lc > 1.0:
                lc = 1.0
            elif lc < 0.0:
                lc = 0.0
            lam[c] = lc
        # sorted summation keeps psi independent of channel order
        for c in range(C):
            prod[c] = g[c] * lam[c]
        prod.sort()
        psi = 0.0
        for c in range(C):
            psi += prod[c]
        if psi > 1.0:
            psi = 1.0
        psi_out[t] = psi

        if hold > 0:
            state[t] = 1
            hold -= 1
            if hold == 0:
                for c in range(C):
                    if persistent:
                        v_cur[c] = ss[t, c] * ss[t, c]
                    else:
                        v_cur[c] = v_ref[c]
        elif not armed:
            if psi < arm_level:
                armed = True
        elif psi >= gamma:
            events[n_events] = t
            n_events += 1
            state[t] = 1
            hold = T_r
            armed = False
            for c in range(C):
                v_cur[c] = ss[t, c] * ss[t, c]
    return psi_out, state, events[:n_events]


@njit(cache=True)
def glr_max_split(csum, a, W, lo, hi):
    """Best split of the window ``[a, a + W)`` given cumulative squared sums."""
    S0 = csum[a + W] - csum[a]
    best = -np.inf
    best_k = -1
    if S0 <= 0.0:
        return best, best_k
    base = W * math.log(S0 / W)
    for k in range(lo, hi + 1):
        S1 = csum[a + k] - csum[a]
        S2 = S0 - S1
        if S1 <= 0.0 or S2 <= 0.0:
            continue
        D = 0.5 * (base - k * math.log(S1 / k) - (W - k) * math.log(S2 / (W - k)))
        if D > best:
            best = D
            best_k = k
    return best, best_k


@njit(cache=True)
def glr_scan_loop(x, L):
    """Best statistic and best split for every window end (``-1`` split where undefined)."""
    n = x.shape[0]
    W = 2 * L
    lo = L // 2
    hi = (3 * L) // 2
    csum = np.zeros(n + 1)
    for i in range(n):
        csum[i + 1] = csum[i] + x[i] * x[i]
    stat = np.full(n, np.nan)
    split = np.full(n, -1, np.int64)
    for t in range(W - 1, n):
        best, k = glr_max_split(csum, t - W + 1, W, lo, hi)
        if k >= 0:
            stat[t] = best
            split[t] = k
    return stat, split


@njit(cache=True)
def glr_threshold(stat, split, L, h, refractory):
    """Events from a precomputed scan: strict threshold, then ``refractory`` silent samples."""
    n = stat.shape[0]
    events = np.empty(n, np.int64)
    locs = np.empty(n, np.int64)
    n_events = 0
    hold = 0
    for t in range(2 * L - 1, n):
        if hold > 0:
            hold -= 1
            continue
        if split[t] >= 0 and stat[t] > h:
            events[n_events] = t
            locs[n_events] = t - 2 * L + 1 + split[t]
            n_events += 1
            hold = refractory
    return events[:n_events], locs[:n_events]


def glr_loop(x, L, h, refractory):
    stat, split = glr_scan_loop(x, L)
    events, locs = glr_threshold(stat, split, L, h, refractory)
    return stat, events, locs
