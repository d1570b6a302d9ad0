"""
Windowed volatility filters
===========================

FIR filters over squared samples. A filter's weight vector is ordered
newest-sample-first: ``weights[0]`` multiplies the most recent squared sample.

The streaming :class:`VolatilityFilter` recomputes the full dot product on every
push. :func:`filter_series` is the batch equivalent used by the detectors.
"""
from __future__ import annotations

from collections import deque
from fractions import Fraction
import math

import numpy as np

from . import _kernels


def _check_window(T, name="T"):
    if int(T) != T or T < 2:
        raise ValueError(f"{name} must be an integer >= 2, got {T!r}")
    return int(T)


def make_uniform_weights(T):
    """Square-window weights ``1/(T-1)`` (unbiased-variance convention).

    The weights sum to ``T/(T-1)``, not 1.
    """
    T = _check_window(T)
    return np.full(T, 1.0 / (T - 1))


def _triangular(T):
    total = T * (T + 1) // 2
    return np.array([float(Fraction(k, total)) for k in range(1, T + 1)])


def make_triangular_slow_weights(T_s):
    """Triangular weights rising with sample age: ``k / (1 + 2 + ... + T_s)``.

    The newest sample gets the smallest weight, the oldest the largest.
    """
    return _triangular(_check_window(T_s, "T_s"))


def make_triangular_fast_weights(T_f):
    """Triangular weights falling with sample age: the newest sample weighs most.

    Exact reversal of :func:`make_triangular_slow_weights` at equal length.
    """
    return _triangular(_check_window(T_f, "T_f"))[::-1].copy()


WEIGHT_SCHEMES = ("triangular", "uniform")


def fast_slow_weights(scheme, T_f, T_s):
    """Return ``(fast, slow)`` weight vectors for a named scheme."""
    if scheme == "triangular":
        return make_triangular_fast_weights(T_f), make_triangular_slow_weights(T_s)
    if scheme == "uniform":
        return make_uniform_weights(T_f), make_uniform_weights(T_s)
    raise ValueError(f"unknown weight scheme {scheme!r}; expected one of {WEIGHT_SCHEMES}")


class VolatilityFilter:
    """Streaming volatility filter.

    Parameters
    ----------
    weights : array_like
        Positive FIR coefficients, newest sample first.

    Notes
    -----
    :meth:`push` returns ``None`` until ``len(weights)`` samples have been seen.
    """

    def __init__(self, weights):
        w = np.asarray(weights, dtype=float)
        if w.ndim != 1 or len(w) == 0:
            raise ValueError("weights must be a non-empty 1-D sequence")
        if not np.all(w > 0):
            raise ValueError("weights must be strictly positive")
        self.weights = w
        self.size = len(w)
        self._window = deque(maxlen=self.size)
        self.fill_count = 0

    @property
    def ready(self):
        return self.fill_count >= self.size

    def push(self, x):
        """Add sample ``x`` and return the volatility estimate, or ``None`` during warm-up."""
        x = float(x)
        if not math.isfinite(x):
            raise ValueError(f"non-finite sample {x!r}")
        self._window.appendleft(x * x)
        self.fill_count += 1
        return self.value()

    def value(self):
        if not self.ready:
            return None
        var = float(np.dot(self.weights, np.fromiter(self._window, float, self.size)))
        assert var >= 0.0
        return math.sqrt(var)

    def reset(self):
        self._window.clear()
        self.fill_count = 0


def filter_series(x, weights):
    """Batch volatility filter output for every index of ``x``.

    Entries before the window fills are NaN.
    """
    x = np.ascontiguousarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("x must be one-dimensional")
    if not np.all(np.isfinite(x)):
        raise ValueError("x contains non-finite samples")
    return _kernels.fir_volatility(x * x, np.ascontiguousarray(weights, dtype=float))


def differenced_output(history, T_l):
    """Lag-``T_l`` difference of the newest filter output.

    ``history`` holds defined filter outputs, oldest first. Returns ``None``
    when fewer than ``T_l + 1`` values are available.
    """
    if len(history) < T_l + 1:
        return None
    return history[-1] - history[-1 - T_l]


def differenced_series(sigma_l, T_l):
    """``sigma_l[t] - sigma_l[t - T_l]`` for every index (NaN where undefined)."""
    sigma_l = np.asarray(sigma_l, dtype=float)
    out = np.full(len(sigma_l), np.nan)
    if len(sigma_l) > T_l:
        out[T_l:] = sigma_l[T_l:] - sigma_l[:-T_l]
    return out
