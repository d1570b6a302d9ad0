"""
Adaptive filtering change detector (single channel)
===================================================

A convex weight ``lam`` mixes a fast and a slow volatility filter. It is
adapted with a sparse (proportional) LMS rule against a short "desired"
volatility estimate, and a change is declared when ``lam`` reaches the
threshold ``gamma``.

Two entry points share the same recursion:

* :class:`AfcdDetector` consumes one sample at a time.
* :func:`detect_afcd` processes a whole array through a compiled loop.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
import math

import numpy as np

from . import _kernels
from .filters import VolatilityFilter, fast_slow_weights, filter_series, WEIGHT_SCHEMES
from .vce import VceConfig, VceTracker, sigma_d_series, vce_estimate

RENORMALIZE_MODES = ("persistent", "refractory")


@dataclass(frozen=True)
class AfcdConfig:
    """Detector parameters.

    ``lag`` is the number of samples by which the fast and slow filters trail
    the newest sample of the desired window; ``None`` means ``T_d + 1`` so the
    two windows do not overlap. ``lag=0`` aligns all three filters at ``t``.

    ``normalize_mu`` divides ``mu`` by the first slow-filter variance, so the
    same ``mu`` behaves identically on data of any scale.

    The detector is armed once ``lam`` falls below ``arm_level`` (default
    ``gamma / 2``) and disarmed at every detection, so ``lam`` must pass
    through the low band between two events.

    ``renormalize`` selects what happens to the learning rate when a
    refractory period ends: ``"persistent"`` keeps it scaled to the variance
    measured at that moment, ``"refractory"`` restores the configured value.
    """

    mu: float
    T_s: int = 250
    T_f: int = 20
    T_d: int = 10
    gamma: float = 0.8
    rho: float = 0.001
    T_r: int | None = None
    weight_scheme: str = "triangular"
    rng_seed: int = 0
    lag: int | None = None
    renormalize: str = "persistent"
    normalize_mu: bool = True
    arm_level: float | None = None

    def __post_init__(self):
        if self.T_r is None:
            object.__setattr__(self, "T_r", int(round(1.2 * self.T_s)))
        if self.lag is None:
            object.__setattr__(self, "lag", self.T_d + 1)
        if self.arm_level is None:
            object.__setattr__(self, "arm_level", self.gamma / 2.0)
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if not (2 <= self.T_f < self.T_s):
            raise ValueError("need 2 <= T_f < T_s")
        if self.T_d < 0:
            raise ValueError("T_d must be >= 0")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if not 0.0 <= self.arm_level <= self.gamma:
            raise ValueError("arm_level must lie in [0, gamma]")
        if self.rho < 0:
            raise ValueError("rho must be >= 0")
        if self.T_r < 1:
            raise ValueError("T_r must be >= 1")
        if self.lag < 0:
            raise ValueError("lag must be >= 0")
        if self.weight_scheme not in WEIGHT_SCHEMES:
            raise ValueError(f"weight_scheme must be one of {WEIGHT_SCHEMES}")
        if self.renormalize not in RENORMALIZE_MODES:
            raise ValueError(f"renormalize must be one of {RENORMALIZE_MODES}")

    @property
    def warmup(self):
        """First step index at which every filter is defined."""
        return max(self.T_s - 1 + self.lag, self.T_d)


@dataclass
class DetectionEvent:
    """A declared change.

    ``channel`` is 0 for univariate detectors and -1 for network-level
    (cooperative) detections. ``location_estimate`` is filled once the
    location search window has been observed.
    """

    detect_time: int
    channel: int = 0
    location_estimate: int | None = None
    statistic: float | None = None
    channel_locations: list | None = None

    def as_record(self):
        rec = {
            "detect_time": int(self.detect_time),
            "channel": int(self.channel),
            "location_estimate": None if self.location_estimate is None else int(self.location_estimate),
            "statistic": None if self.statistic is None else float(self.statistic),
        }
        if self.channel_locations is not None:
            rec["channel_locations"] = [None if v is None else int(v) for v in self.channel_locations]
        return rec


def convex_combine(lam, sigma_f, sigma_s):
    return lam * sigma_f + (1.0 - lam) * sigma_s


def clamp_unit(v):
    if v > 1.0:
        return 1.0
    if v < 0.0:
        return 0.0
    return v


def sslms_update(lam, e, sigma_f, sigma_s, mu, rho, u):
    """One sparse-LMS step on the convex weight, hard-limited to ``[0, 1]``."""
    return clamp_unit(lam + mu * (abs(lam) + rho * u) * e * (sigma_f - sigma_s))


def threshold_state(lam, gamma):
    return 1 if lam >= gamma else 0


def make_desired_weights(T_d):
    """Uniform weights over the ``T_d + 2`` samples ``x[t+1] ... x[t-T_d]``."""
    n = T_d + 2
    return np.full(n, 1.0 / n)


def noise_stream(seed, channel=0):
    """Generator for the dither draws of one channel."""
    return np.random.default_rng([int(seed), int(channel)])


class ChannelFront:
    """Fast, slow and desired filters for one channel, with the lag applied.

    :meth:`push` takes sample ``x[n]`` and returns ``(sigma_f, sigma_s, sigma_d)``
    for step ``t = n - 1``, or ``None`` while any filter is warming up.
    """

    def __init__(self, config):
        wf, ws = fast_slow_weights(config.weight_scheme, config.T_f, config.T_s)
        self.fast = VolatilityFilter(wf)
        self.slow = VolatilityFilter(ws)
        self.desired = VolatilityFilter(make_desired_weights(config.T_d))
        self._delay = deque()
        self._lag = config.lag
        self._last = (None, None)

    def push(self, x):
        sd = self.desired.push(x)
        # fast/slow see x[n - 1 - lag]
        self._delay.append(x)
        if len(self._delay) > self._lag + 1:
            old = self._delay.popleft()
            self._last = (self.fast.push(old), self.slow.push(old))
        sf, ss = self._last
        if sd is None or sf is None or ss is None:
            return None
        return sf, ss, sd


@dataclass
class StepResult:
    t: int
    state: int
    lam: float
    event: DetectionEvent | None = None


class AfcdDetector:
    """Streaming single-channel detector.

    Parameters
    ----------
    config : AfcdConfig
    vce : VceConfig, bool or None
        Location estimator settings. ``True`` uses ``T_l = T_f``; ``None`` or
        ``False`` disables location estimation.

    Notes
    -----
    Output for time ``t`` is produced when sample ``t + 1`` arrives. Events are
    appended to :attr:`events`; their ``location_estimate`` is filled in place
    once ``2 * T_l`` further samples have been seen.
    """

    def __init__(self, config, vce=True, rng=None):
        self.config = config
        self.front = ChannelFront(config)
        self.rng = noise_stream(config.rng_seed) if rng is None else rng
        self.vce_config = _resolve_vce(vce, config)
        self.tracker = VceTracker(self.vce_config) if self.vce_config else None
        self.lam = 1.0
        self.armed = False
        self.hold = 0
        self.v_ref = None
        self.v_cur = None
        self.mu_base = config.mu
        self.n = -1
        self.events = []

    @property
    def flag(self):
        return self.hold > 0

    @property
    def mu_effective(self):
        mu = self.mu_base
        if self.v_ref and self.v_cur and self.v_ref > 0 and self.v_cur > 0:
            return mu * (self.v_ref / self.v_cur)
        return mu

    def update(self, x):
        """Consume one sample. Returns a :class:`StepResult` or ``None`` during warm-up."""
        x = float(x)
        if not math.isfinite(x):
            raise ValueError(f"non-finite sample {x!r}")
        self.n += 1
        if self.tracker is not None:
            self.tracker.push(x)
        out = self.front.push(x)
        if out is None:
            return None
        sf, ss, sd = out
        t = self.n - 1
        cfg = self.config
        if self.v_ref is None:
            self.v_ref = self.v_cur = ss * ss
            if cfg.normalize_mu and self.v_ref > 0:
                self.mu_base = cfg.mu / self.v_ref

        e = sd - convex_combine(self.lam, sf, ss)
        u = self.rng.standard_normal()
        self.lam = sslms_update(self.lam, e, sf, ss, self.mu_effective, cfg.rho, u)

        state, event = 0, None
        if self.hold > 0:
            state = 1
            self.hold -= 1
            if self.hold == 0:
                self.v_cur = ss * ss if cfg.renormalize == "persistent" else self.v_ref
        elif not self.armed:
            self.armed = self.lam < cfg.arm_level
        elif threshold_state(self.lam, cfg.gamma):
            state = 1
            self.hold = cfg.T_r
            self.armed = False
            self.v_cur = ss * ss
            event = DetectionEvent(t, 0, statistic=self.lam)
            self.events.append(event)
            if self.tracker is not None:
                self.tracker.start(t, _setter(event))
        return StepResult(t, state, self.lam, event)


def _setter(event):
    def done(loc):
        event.location_estimate = loc
    return done


def _resolve_vce(vce, config):
    if vce is True:
        return VceConfig(T_l=config.T_f)
    if not vce:
        return None
    return vce


@dataclass
class AfcdResult:
    events: list
    lam: np.ndarray
    state: np.ndarray
    warmup: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def detect_times(self):
        return [e.detect_time for e in self.events]


def aligned_filters(x, config):
    """Fast, slow and desired outputs on the step time axis ``t``.

    ``sd[t]`` covers ``x[t-T_d] .. x[t+1]``; ``sf[t]`` and ``ss[t]`` end at
    ``x[t - lag]``.
    """
    x = np.asarray(x, dtype=float)
    wf, ws = fast_slow_weights(config.weight_scheme, config.T_f, config.T_s)
    n = len(x)
    lag = config.lag
    sf = np.full(n, np.nan)
    ss = np.full(n, np.nan)
    f = filter_series(x, wf)
    s = filter_series(x, ws)
    sf[lag:] = f[:n - lag]
    ss[lag:] = s[:n - lag]
    sd = np.full(n, np.nan)
    sd[:-1] = filter_series(x, make_desired_weights(config.T_d))[1:]
    return sf, ss, sd


def detect_afcd(x, config, vce=True, rng=None):
    """Run the detector over a whole 1-D series.

    Returns an :class:`AfcdResult` whose events carry location estimates
    (unless ``vce`` is disabled). The result matches feeding the same samples
    to :class:`AfcdDetector`.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("x must be one-dimensional")
    t0 = config.warmup
    n = len(x)
    if n < t0 + 2:
        return AfcdResult([], np.full(n, np.nan), np.zeros(n, np.int8), t0)
    sf, ss, sd = aligned_filters(x, config)
    rng = noise_stream(config.rng_seed) if rng is None else rng
    u = rng.standard_normal(n - 1 - t0)
    lam, state, times = _kernels.afcd_loop(
        sf, ss, sd, u, t0, float(config.mu), float(config.rho), float(config.gamma),
        float(config.arm_level), int(config.T_r), config.renormalize == "persistent", bool(config.normalize_mu),
    )
    events = [DetectionEvent(int(t), 0, statistic=float(lam[t])) for t in times]
    vcfg = _resolve_vce(vce, config)
    if vcfg and events:
        sdiff = sigma_d_series(x, vcfg.T_l)
        for ev in events:
            ev.location_estimate = vce_estimate(sdiff, ev.detect_time, vcfg)
    return AfcdResult(events, lam, state, t0)
