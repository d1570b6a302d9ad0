"""
Sliding-window GLR baseline for variance changes
================================================

For the ``2L`` most recent samples the statistic compares one zero-mean
Gaussian fit against two fits split at index ``k``::

    D(k) = 2L ln s0 - k ln s1 - (2L - k) ln s2

with ``s0``, ``s1``, ``s2`` the pooled and per-side RMS values. ``k`` ranges
over ``[L/2, 3L/2]``. A detection is raised when ``max_k D(k) > h``; the
maximising split is reported as the change location.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
import math

import numpy as np

from . import _kernels
from .afcd import AfcdResult, DetectionEvent


@dataclass(frozen=True)
class GlrConfig:
    L: int = 250
    h: float = 5.0
    refractory: int | None = None  # defaults to L

    def __post_init__(self):
        if self.refractory is None:
            object.__setattr__(self, "refractory", int(self.L))
        if int(self.L) != self.L or self.L < 4:
            raise ValueError("L must be an integer >= 4")
        if not self.h > 0:
            raise ValueError("h must be positive")
        if self.refractory < 0:
            raise ValueError("refractory must be >= 0")

    @property
    def split_range(self):
        return self.L // 2, (3 * self.L) // 2


def glr_statistic(window, split):
    """Log-likelihood ratio for a variance change at ``split`` within ``window``.

    Raises
    ------
    ValueError
        If either side (or the whole window) has zero energy.
    """
    w = np.asarray(window, dtype=float)
    n = len(w)
    if not 0 < split < n:
        raise ValueError("split must leave samples on both sides")
    s0 = float(np.dot(w, w))
    s1 = float(np.dot(w[:split], w[:split]))
    s2 = s0 - s1
    if s1 <= 0 or s2 <= 0:
        raise ValueError("zero variance on one side of the split")
    n1, n2 = split, n - split
    return 0.5 * (n * math.log(s0 / n) - n1 * math.log(s1 / n1) - n2 * math.log(s2 / n2))


def max_split_statistic(window, config):
    """``(best statistic, best split)`` over the allowed split range."""
    lo, hi = config.split_range
    best, best_k = -math.inf, None
    for k in range(lo, hi + 1):
        try:
            d = glr_statistic(window, k)
        except ValueError:
            continue
        if d > best:
            best, best_k = d, k
    return best, best_k


class GlrDetector:
    """Streaming GLR detector for one channel."""

    def __init__(self, config, channel=0):
        self.config = config
        self.channel = channel
        self._window = deque(maxlen=2 * config.L)
        self.hold = 0
        self.n = -1
        self.events = []

    def update(self, x):
        x = float(x)
        if not math.isfinite(x):
            raise ValueError(f"non-finite sample {x!r}")
        self.n += 1
        self._window.append(x)
        if len(self._window) < 2 * self.config.L:
            return None
        if self.hold > 0:
            self.hold -= 1
            return None
        w = np.fromiter(self._window, float, len(self._window))
        best, k = max_split_statistic(w, self.config)
        if k is None or not best > self.config.h:
            return None
        a = self.n - 2 * self.config.L + 1
        ev = DetectionEvent(self.n, self.channel, location_estimate=a + k, statistic=best)
        self.events.append(ev)
        self.hold = self.config.refractory
        return ev


def glr_scan(x, config, return_split=False):
    """Max-over-splits statistic for every index (NaN during warm-up).

    With ``return_split`` the maximising split offsets are returned as well
    (``-1`` where undefined); see :func:`events_from_scan`.
    """
    x = np.ascontiguousarray(x, dtype=float)
    stat, split = _kernels.glr_scan_loop(x, int(config.L))
    return (stat, split) if return_split else stat


def events_from_scan(stat, split, config, channel=0):
    """Apply threshold and refractory rule to a precomputed scan.

    Lets one scan serve many thresholds, e.g. during calibration.
    """
    times, locs = _kernels.glr_threshold(stat, split, int(config.L), float(config.h), int(config.refractory))
    return [
        DetectionEvent(int(t), channel, location_estimate=int(k), statistic=float(stat[t]))
        for t, k in zip(times, locs)
    ]


def detect_glr(x, config, channel=0):
    """Run the GLR detector over a 1-D series."""
    x = np.ascontiguousarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("x must be one-dimensional")
    if not np.all(np.isfinite(x)):
        raise ValueError("x contains non-finite samples")
    stat, split = _kernels.glr_scan_loop(x, int(config.L))
    events = events_from_scan(stat, split, config, channel)
    state = np.zeros(len(x), np.int8)
    return AfcdResult(events, stat, state, 2 * config.L - 1)


def detect_glr_channels(x, config, fuse=True):
    """GLR applied separately to each column of ``x``.

    With ``fuse=True`` the per-channel events are merged: events are taken in
    time order and any event within ``refractory`` samples of the last kept one
    is dropped, giving one network-level event per change.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    per = [detect_glr(x[:, c], config, channel=c).events for c in range(x.shape[1])]
    merged = sorted((e for evs in per for e in evs), key=lambda e: (e.detect_time, e.channel))
    if not fuse:
        return merged
    kept = []
    for ev in merged:
        if kept and ev.detect_time - kept[-1].detect_time <= config.refractory:
            continue
        kept.append(ev)
    return kept
