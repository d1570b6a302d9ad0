"""
Synthetic piecewise-variance scenarios
======================================

Zero-mean Gaussian series whose standard deviation jumps at random times.
Every segment's sigma is the previous sigma times a random scale factor; in
the multichannel case all channels change together and share a random
correlation matrix.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# partial-correlation concentration for the vine sampler
CORRELATION_PRESETS = {"low": 10.0, "high": 0.5}


@dataclass(frozen=True)
class SynthConfig:
    total_range: tuple = (5000, 30000)
    segment_range: tuple = (300, 700)
    scale_down_range: tuple = (0.5, 0.85)
    scale_up_range: tuple = (1.2, 1.7)
    p_up: float = 0.5
    n_channels: int = 1
    correlation_preset: str = "low"
    initial_sigma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        for name in ("total_range", "segment_range", "scale_down_range", "scale_up_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} must be (low, high)")
            object.__setattr__(self, name, (lo, hi))
        if not 0.0 <= self.p_up <= 1.0:
            raise ValueError("p_up must lie in [0, 1]")
        if self.n_channels < 1:
            raise ValueError("n_channels must be >= 1")
        if self.correlation_preset not in (*CORRELATION_PRESETS, "identity"):
            raise ValueError(f"unknown correlation preset {self.correlation_preset!r}")
        if self.segment_range[0] < 1:
            raise ValueError("segments must be at least one sample long")


@dataclass
class Scenario:
    samples: np.ndarray  # (n_samples, n_channels)
    change_times: np.ndarray
    segment_sigmas: np.ndarray
    correlation: np.ndarray
    seed: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def n_samples(self):
        return self.samples.shape[0]

    @property
    def n_channels(self):
        return self.samples.shape[1]


def random_correlation_matrix(dim, concentration, seed=None):
    """Random correlation matrix from a C-vine of Beta partial correlations.

    Every partial correlation is drawn as ``2 B - 1`` with
    ``B ~ Beta(concentration, concentration)``, so large concentrations give
    matrices close to the identity and small ones give strong (mixed-sign)
    correlations. Rows and columns are randomly permuted afterwards.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if not concentration > 0:
        raise ValueError("concentration must be positive")
    rng = np.random.default_rng(seed)
    P = np.zeros((dim, dim))
    S = np.eye(dim)
    lim = 0.999
    for k in range(dim - 1):
        for i in range(k + 1, dim):
            P[k, i] = np.clip(2.0 * rng.beta(concentration, concentration) - 1.0, -lim, lim)
            p = P[k, i]
            # convert partial to raw correlation
            for l in range(k - 1, -1, -1):
                p = p * np.sqrt((1 - P[l, i] ** 2) * (1 - P[l, k] ** 2)) + P[l, i] * P[l, k]
            S[k, i] = S[i, k] = p
    perm = rng.permutation(dim)
    S = S[np.ix_(perm, perm)]
    S = (S + S.T) / 2.0
    np.fill_diagonal(S, 1.0)
    return S


def preset_correlation(dim, preset, rng):
    if preset == "identity" or dim == 1:
        return np.eye(dim)
    return random_correlation_matrix(dim, CORRELATION_PRESETS[preset], rng)


def _segment_plan(config, rng):
    n = int(rng.integers(config.total_range[0], config.total_range[1] + 1))
    changes = []
    sigmas = [float(config.initial_sigma)]
    t = 0
    lo, hi = config.segment_range
    while True:
        t += int(rng.integers(lo, hi + 1))
        if t >= n:
            break
        changes.append(t)
        if rng.random() < config.p_up:
            factor = rng.uniform(*config.scale_up_range)
        else:
            factor = rng.uniform(*config.scale_down_range)
        sigmas.append(sigmas[-1] * factor)
    return n, np.array(changes, dtype=np.int64), np.array(sigmas)


def sample_piecewise(n, change_times, sigmas, correlation, rng):
    """Draw correlated Gaussian samples with a common per-segment scale."""
    chol = np.linalg.cholesky(correlation)
    z = rng.standard_normal((n, correlation.shape[0])) @ chol.T
    bounds = np.concatenate([[0], change_times, [n]])
    scale = np.repeat(sigmas, np.diff(bounds))
    return z * scale[:, None]


def gen_piecewise_gaussian(config):
    """Generate one :class:`Scenario` from ``config`` (fully determined by ``config.seed``)."""
    rng = np.random.default_rng(config.seed)
    n, changes, sigmas = _segment_plan(config, rng)
    corr = preset_correlation(config.n_channels, config.correlation_preset, rng)
    x = sample_piecewise(n, changes, sigmas, corr, rng)
    return Scenario(x, changes, sigmas, corr, config.seed)


def gen_stationary(n, n_channels=1, correlation_preset="identity", sigma=1.0, seed=0):
    """Constant-variance surrogate with a random correlation matrix."""
    rng = np.random.default_rng(seed)
    corr = preset_correlation(n_channels, correlation_preset, rng)
    x = sample_piecewise(n, np.array([], dtype=np.int64), np.array([sigma]), corr, rng)
    return Scenario(x, np.array([], dtype=np.int64), np.array([sigma]), corr, seed)


def first_difference(series):
    """``y[t] = x[t+1] - x[t]`` along the time axis."""
    x = np.asarray(series, dtype=float)
    if x.shape[0] < 2:
        raise ValueError("need at least two samples to difference")
    return np.diff(x, axis=0)


def gen_activity_surrogate(seed=0, n_channels=3, segment_length=1500, sigmas=(0.1, 1.0, 2.5, 1.0, 0.1),
                           jitter=200):
    """Accelerometer-like stand-in for a rest/walk/run/walk/rest recording.

    Each channel is a per-channel offset (gravity) plus a slow random-walk
    drift, plus a gait oscillation and Gaussian noise whose amplitude follows
    ``sigmas``. The raw series is trending, so detectors should see it after
    :func:`first_difference`. Change times shift by up to ``jitter`` samples.

    Returns
    -------
    Scenario
        Raw (undifferenced) samples; ``change_times`` index the raw series.
    """
    rng = np.random.default_rng(seed)
    k = len(sigmas)
    lengths = segment_length + rng.integers(-jitter, jitter + 1, k)
    bounds = np.concatenate([[0], np.cumsum(lengths)])
    n = int(bounds[-1])
    amp = np.repeat(np.asarray(sigmas, float), lengths)
    t = np.arange(n)
    offset = rng.uniform(-1.0, 1.0, n_channels)
    offset[-1] += 9.8
    drift = np.cumsum(rng.standard_normal((n, n_channels)) * 1e-3, axis=0)
    phase = rng.uniform(0, 2 * np.pi, n_channels)
    gait = np.sin(2 * np.pi * t[:, None] / 50.0 + phase) * 0.5
    x = offset + drift + amp[:, None] * (gait + rng.standard_normal((n, n_channels)))
    return Scenario(x, bounds[1:-1].astype(np.int64), np.asarray(sigmas, float), np.eye(n_channels), seed,
                    meta={"kind": "activity"})
