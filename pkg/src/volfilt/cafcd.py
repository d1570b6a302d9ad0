"""
Cooperative detector for multichannel series
============================================

Each channel runs the fast/slow/desired filters of the single-channel
detector. Per step, every channel adapts its own weight starting from the
shared combined weight ``psi`` (combine-then-adapt), and ``psi`` is then
recomputed as a convex combination of the channel weights. Detection,
refractory handling and learning-rate normalisation act on ``psi`` as a
network-level event.
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from . import _kernels
from .afcd import (
    AfcdConfig,
    AfcdResult,
    ChannelFront,
    DetectionEvent,
    _resolve_vce,
    aligned_filters,
    clamp_unit,
    convex_combine,
    noise_stream,
    threshold_state,
)
from .vce import VceTracker, multichannel_location, sigma_d_series, vce_estimate


@dataclass(frozen=True)
class CafcdConfig:
    """Per-channel detector settings plus the combiner weights.

    All channels must share ``gamma``, ``arm_level``, ``renormalize`` and
    ``normalize_mu``. The refractory length
    is the largest ``T_r`` among the channels. ``seed`` seeds the per-channel
    dither streams.
    """

    channels: tuple
    combiner: tuple | None = None
    seed: int = 0

    def __post_init__(self):
        chans = tuple(self.channels)
        if not chans:
            raise ValueError("at least one channel is required")
        object.__setattr__(self, "channels", chans)
        if self.combiner is None:
            object.__setattr__(self, "combiner", tuple([1.0 / len(chans)] * len(chans)))
        g = tuple(float(v) for v in self.combiner)
        object.__setattr__(self, "combiner", g)
        if len(g) != len(chans):
            raise ValueError("combiner length must equal the number of channels")
        if any(v < 0 for v in g) or not math.isclose(sum(g), 1.0, rel_tol=0, abs_tol=1e-12):
            raise ValueError("combiner weights must be nonnegative and sum to 1")
        if len({c.gamma for c in chans}) != 1:
            raise ValueError("all channels must share one threshold gamma")
        if len({c.renormalize for c in chans}) != 1:
            raise ValueError("all channels must share one renormalize mode")
        if len({c.arm_level for c in chans}) != 1:
            raise ValueError("all channels must share one arm_level")
        if len({c.normalize_mu for c in chans}) != 1:
            raise ValueError("all channels must share one normalize_mu setting")

    @classmethod
    def uniform(cls, base, n_channels, seed=None):
        """``n_channels`` copies of ``base`` with uniform combiner weights."""
        seed = base.rng_seed if seed is None else seed
        return cls(tuple([base] * n_channels), None, seed)

    @property
    def n_channels(self):
        return len(self.channels)

    @property
    def gamma(self):
        return self.channels[0].gamma

    @property
    def arm_level(self):
        return self.channels[0].arm_level

    @property
    def T_r(self):
        return max(c.T_r for c in self.channels)

    @property
    def warmup(self):
        return max(c.warmup for c in self.channels)


def combine_lambdas(lambdas, g):
    """Convex combination ``sum(g_c * lam_c)``.

    Products are summed in sorted order so the result does not depend on the
    channel ordering.
    """
    if len(lambdas) != len(g):
        raise ValueError(f"got {len(lambdas)} weights for {len(g)} combiner entries")
    prods = sorted(gc * lc for gc, lc in zip(g, lambdas))
    total = 0.0
    for p in prods:
        total += p
    return min(total, 1.0)


class CafcdDetector:
    """Streaming cooperative detector. See :class:`volfilt.afcd.AfcdDetector`."""

    def __init__(self, config, vce=True, rngs=None):
        self.config = config
        n = config.n_channels
        self.fronts = [ChannelFront(c) for c in config.channels]
        self.rngs = [noise_stream(config.seed, c) for c in range(n)] if rngs is None else list(rngs)
        if len(self.rngs) != n:
            raise ValueError("need one generator per channel")
        self.vce_config = _resolve_vce(vce, config.channels[0])
        self.trackers = [VceTracker(self.vce_config) for _ in range(n)] if self.vce_config else None
        self.lams = [1.0] * n
        self.psi = combine_lambdas(self.lams, config.combiner)
        self.armed = False
        self.hold = 0
        self.v_ref = None
        self.v_cur = None
        self.mu_base = [c.mu for c in config.channels]
        self.n = -1
        self.events = []

    def update(self, xs):
        xs = [float(v) for v in xs]
        cfg = self.config
        if len(xs) != cfg.n_channels:
            raise ValueError(f"expected {cfg.n_channels} channel values, got {len(xs)}")
        if not all(math.isfinite(v) for v in xs):
            raise ValueError("non-finite sample")
        self.n += 1
        if self.trackers is not None:
            for tr, v in zip(self.trackers, xs):
                tr.push(v)
        outs = [f.push(v) for f, v in zip(self.fronts, xs)]
        if any(o is None for o in outs):
            return None
        t = self.n - 1
        if self.v_ref is None:
            self.v_ref = [o[1] * o[1] for o in outs]
            self.v_cur = list(self.v_ref)
            if cfg.channels[0].normalize_mu:
                self.mu_base = [c.mu / v if v > 0 else c.mu for c, v in zip(cfg.channels, self.v_ref)]

        psi = self.psi
        for c, ((sf, ss, sd), ch) in enumerate(zip(outs, cfg.channels)):
            e = sd - convex_combine(psi, sf, ss)
            m = self.mu_base[c]
            if self.v_cur[c] > 0 and self.v_ref[c] > 0:
                m = m * (self.v_ref[c] / self.v_cur[c])
            u = self.rngs[c].standard_normal()
            self.lams[c] = clamp_unit(psi + m * (abs(psi) + ch.rho * u) * e * (sf - ss))
        self.psi = combine_lambdas(self.lams, cfg.combiner)

        state, event = 0, None
        if self.hold > 0:
            state = 1
            self.hold -= 1
            if self.hold == 0:
                if cfg.channels[0].renormalize == "persistent":
                    self.v_cur = [o[1] * o[1] for o in outs]
                else:
                    self.v_cur = list(self.v_ref)
        elif not self.armed:
            self.armed = self.psi < cfg.arm_level
        elif threshold_state(self.psi, cfg.gamma):
            state = 1
            self.hold = cfg.T_r
            self.armed = False
            self.v_cur = [o[1] * o[1] for o in outs]
            event = DetectionEvent(t, -1, statistic=self.psi, channel_locations=[None] * cfg.n_channels)
            self.events.append(event)
            if self.trackers is not None:
                for c, tr in enumerate(self.trackers):
                    tr.start(t, _channel_setter(event, c))
        return t, state, self.psi, event


def _channel_setter(event, c):
    def done(loc):
        event.channel_locations[c] = loc
        if all(v is not None for v in event.channel_locations):
            event.location_estimate = multichannel_location(event.channel_locations)
    return done


def detect_cafcd(x, config, vce=True, rngs=None):
    """Run the cooperative detector over an ``(n_samples, n_channels)`` array."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n, C = x.shape
    if C != config.n_channels:
        raise ValueError(f"expected {config.n_channels} channels, got {C}")
    t0 = config.warmup
    if n < t0 + 2:
        return AfcdResult([], np.full(n, np.nan), np.zeros(n, np.int8), t0)
    sf = np.empty((n, C))
    ss = np.empty((n, C))
    sd = np.empty((n, C))
    for c, ch in enumerate(config.channels):
        sf[:, c], ss[:, c], sd[:, c] = aligned_filters(x[:, c], ch)
    rngs = [noise_stream(config.seed, c) for c in range(C)] if rngs is None else list(rngs)
    u = np.empty((n - 1 - t0, C))
    for c, r in enumerate(rngs):
        u[:, c] = r.standard_normal(n - 1 - t0)
    psi, state, times = _kernels.cafcd_loop(
        sf, ss, sd, u, t0,
        np.array([c.mu for c in config.channels], dtype=float),
        np.array([c.rho for c in config.channels], dtype=float),
        np.array(config.combiner, dtype=float),
        float(config.gamma), float(config.arm_level), int(config.T_r),
        config.channels[0].renormalize == "persistent",
        bool(config.channels[0].normalize_mu),
    )
    events = [DetectionEvent(int(t), -1, statistic=float(psi[t])) for t in times]
    vcfg = _resolve_vce(vce, config.channels[0])
    if vcfg and events:
        sdiffs = [sigma_d_series(x[:, c], vcfg.T_l) for c in range(C)]
        for ev in events:
            locs = [vce_estimate(s, ev.detect_time, vcfg) for s in sdiffs]
            ev.channel_locations = locs
            if all(v is not None for v in locs):
                ev.location_estimate = multichannel_location(locs)
    return AfcdResult(events, psi, state, t0)
