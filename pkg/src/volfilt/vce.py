"""
Change-point location from the differenced volatility filter
============================================================

After a detection at ``t_d`` the estimator scans ``|sigma_D|`` over
``[t_d, t_d + search_span]`` and places the change ``T_l - 1`` samples before
the largest value. ``sigma_D(t) = sigma_l(t) - sigma_l(t - T_l)`` where
``sigma_l`` is the square-window filter of length ``T_l``.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
import math

import numpy as np

from .filters import VolatilityFilter, differenced_series, filter_series, make_uniform_weights


@dataclass(frozen=True)
class VceConfig:
    T_l: int = 20
    search_span: int | None = None  # defaults to 2 * T_l

    def __post_init__(self):
        if int(self.T_l) != self.T_l or self.T_l < 2:
            raise ValueError(f"T_l must be an integer >= 2, got {self.T_l!r}")
        if self.search_span is None:
            object.__setattr__(self, "search_span", 2 * int(self.T_l))
        if self.search_span < self.T_l:
            raise ValueError("search_span must be >= T_l")


def sigma_d_series(x, T_l):
    """Differenced square-window volatility for a 1-D series."""
    return differenced_series(filter_series(x, make_uniform_weights(T_l)), T_l)


def vce_estimate(sigma_D, detect_time, config):
    """Location estimate for one detection, or ``None`` if the search window is incomplete.

    Parameters
    ----------
    sigma_D : array_like
        Differenced volatility indexed by sample (NaN where undefined).
    detect_time : int
    config : VceConfig

    Returns
    -------
    int or None
    """
    sigma_D = np.asarray(sigma_D, dtype=float)
    end = detect_time + config.search_span
    if end >= len(sigma_D):
        return None
    seg = np.abs(sigma_D[detect_time:end + 1])
    if np.all(np.isnan(seg)):
        return None
    # nanargmax returns the first maximum, i.e. the earliest index on ties
    peak = detect_time + int(np.nanargmax(seg))
    return peak - config.T_l + 1


def multichannel_location(estimates):
    """Rounded mean of per-channel location estimates (halves round up)."""
    est = [e for e in estimates if e is not None]
    if not est:
        raise ValueError("at least one channel estimate is required")
    return int(math.floor(sum(est) / len(est) + 0.5))


def locate(x, detect_times, config):
    """Batch location estimates for a 1-D series and a list of detection times."""
    sd = sigma_d_series(x, config.T_l)
    return [vce_estimate(sd, t, config) for t in detect_times]


class _Search:
    __slots__ = ("start", "end", "best", "best_idx", "on_done")

    def __init__(self, start, end, on_done):
        self.start = start
        self.end = end
        self.best = -1.0
        self.best_idx = None
        self.on_done = on_done

    def offer(self, idx, value):
        a = abs(value)
        if a > self.best:
            self.best = a
            self.best_idx = idx


class VceTracker:
    """Streaming location estimator for a single channel.

    Feed every raw sample through :meth:`push`; call :meth:`start` when a
    detection occurs. The callback receives the estimate once the search
    window has filled.
    """

    def __init__(self, config):
        self.config = config
        self._filter = VolatilityFilter(make_uniform_weights(config.T_l))
        self._sigma_l = deque(maxlen=config.T_l + 1)
        self._recent = deque(maxlen=config.search_span + 2)
        self._pending = []
        self.n = -1

    def push(self, x):
        self.n += 1
        s = self._filter.push(x)
        if s is None:
            return
        self._sigma_l.append(s)
        if len(self._sigma_l) <= self.config.T_l:
            return
        d = self._sigma_l[-1] - self._sigma_l[0]
        self._recent.append((self.n, d))
        still = []
        for job in self._pending:
            if job.start <= self.n <= job.end:
                job.offer(self.n, d)
            if self.n >= job.end:
                self._finish(job)
            else:
                still.append(job)
        self._pending = still

    def start(self, detect_time, on_done):
        job = _Search(detect_time, detect_time + self.config.search_span, on_done)
        for idx, d in self._recent:
            if job.start <= idx <= job.end:
                job.offer(idx, d)
        if self.n >= job.end:
            self._finish(job)
        else:
            self._pending.append(job)

    def _finish(self, job):
        loc = None if job.best_idx is None else job.best_idx - self.config.T_l + 1
        job.on_done(loc)
