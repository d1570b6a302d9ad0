"""
Detection metrics and learning-rate calibration
===============================================

Matching rule: true changes are visited in time order and each takes the
earliest still-unmatched detection inside ``[tau, tau + match_window]``.

* ``tp_proportion`` = matched changes / true changes
* ``fp_proportion`` = unmatched detections / detections
* latency = ``detect_time - tau`` for matched pairs
* location error = ``|location_estimate - tau|`` for matched pairs that carry an estimate
"""
from __future__ import annotations

from dataclasses import dataclass, field
import logging
import math

import numpy as np

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MatchConfig:
    match_window: int = 300

    def __post_init__(self):
        if not self.match_window > 0:
            raise ValueError("match_window must be positive")


@dataclass
class MetricsReport:
    n_truths: int = 0
    n_detections: int = 0
    n_matched: int = 0
    latencies: list = field(default_factory=list)
    location_errors: list = field(default_factory=list)

    @property
    def n_false(self):
        return self.n_detections - self.n_matched

    @property
    def n_missed(self):
        return self.n_truths - self.n_matched

    @property
    def tp_proportion(self):
        return self.n_matched / self.n_truths if self.n_truths else 0.0

    @property
    def fp_proportion(self):
        return self.n_false / self.n_detections if self.n_detections else 0.0

    @property
    def mean_latency(self):
        return float(np.mean(self.latencies)) if self.latencies else None

    @property
    def median_latency(self):
        return float(np.median(self.latencies)) if self.latencies else None

    @property
    def mean_abs_location_error(self):
        return float(np.mean(self.location_errors)) if self.location_errors else None

    def merge(self, other):
        return MetricsReport(
            self.n_truths + other.n_truths,
            self.n_detections + other.n_detections,
            self.n_matched + other.n_matched,
            self.latencies + other.latencies,
            self.location_errors + other.location_errors,
        )

    def summary(self):
        """Flat dict of the headline numbers (``None`` where undefined)."""
        return {
            "n_truths": self.n_truths,
            "n_detections": self.n_detections,
            "n_matched": self.n_matched,
            "n_false": self.n_false,
            "tp_proportion": self.tp_proportion,
            "fp_proportion": self.fp_proportion,
            "mean_latency": self.mean_latency,
            "median_latency": self.median_latency,
            "mean_abs_location_error": self.mean_abs_location_error,
            "n_located": len(self.location_errors),
        }


def pool(reports):
    out = MetricsReport()
    for r in reports:
        out = out.merge(r)
    return out


def _time(ev):
    return ev.detect_time if hasattr(ev, "detect_time") else int(ev)


def _location(ev):
    return getattr(ev, "location_estimate", None)


def match_detections(events, truths, match_config=MatchConfig()):
    """Score a list of detections against true change times.

    ``events`` may be :class:`~volfilt.afcd.DetectionEvent` objects or plain
    integer times.
    """
    events = sorted(events, key=_time)
    truths = sorted(int(t) for t in truths)
    used = [False] * len(events)
    rep = MetricsReport(n_truths=len(truths), n_detections=len(events))
    j0 = 0
    for tau in truths:
        while j0 < len(events) and _time(events[j0]) < tau:
            j0 += 1
        for j in range(j0, len(events)):
            t = _time(events[j])
            if t > tau + match_config.match_window:
                break
            if not used[j]:
                used[j] = True
                rep.n_matched += 1
                rep.latencies.append(t - tau)
                loc = _location(events[j])
                if loc is not None:
                    rep.location_errors.append(abs(loc - tau))
                break
    return rep


def evaluate(scenarios, detect, match_config=MatchConfig()):
    """Run ``detect(samples) -> events`` on every scenario and pool the reports.

    Returns ``(pooled, per_scenario)``.
    """
    per = []
    for sc in scenarios:
        events = detect(sc.samples)
        per.append(match_detections(events, sc.change_times, match_config))
    return pool(per), per


@dataclass
class CalibrationResult:
    mu: float
    fp_rate: float
    met: bool
    rates: dict

    def as_record(self):
        return {"mu": self.mu, "fp_rate": self.fp_rate, "met": self.met,
                "rates": {repr(k): v for k, v in self.rates.items()}}


def stationary_fp_rate(detector, stationary_generator, n_series):
    """False detections per sample on ``n_series`` stationary surrogates."""
    events = samples = 0
    for i in range(n_series):
        x = stationary_generator(i)
        events += len(detector(x))
        samples += len(x)
    return events / samples


def _sweep(rate_of, target, grid, prefer):
    grid = sorted(float(v) for v in grid)
    if not grid:
        raise ValueError("empty calibration grid")
    if prefer not in ("largest", "smallest"):
        raise ValueError("prefer must be 'largest' or 'smallest'")
    order = grid[::-1] if prefer == "largest" else grid
    rates = {}
    for v in order:
        rates[v] = rate_of(v)
        if rates[v] <= target:
            return CalibrationResult(v, rates[v], True, rates)
    # nothing met the budget: report the best candidate
    best = min(rates, key=lambda k: (rates[k], -k if prefer == "largest" else k))
    log.warning("no grid value met the target false-positive level %.3g; best %.3g at %g",
                target, rates[best], best)
    return CalibrationResult(best, rates[best], False, rates)


def calibrate(detector_factory, stationary_generator, target_fp_rate, grid, n_series=200, prefer="largest"):
    """Pick a grid value whose stationary false-positive rate meets the target.

    ``prefer="largest"`` returns the largest passing value (learning rates);
    ``"smallest"`` returns the smallest (thresholds). When no value passes, the
    one with the lowest rate is returned with ``met=False``.
    """
    return _sweep(lambda v: stationary_fp_rate(detector_factory(v), stationary_generator, n_series),
                  target_fp_rate, grid, prefer)


def calibrate_fp_proportion(detector_factory, scenarios, target, grid, prefer="largest",
                            match_config=MatchConfig()):
    """Like :func:`calibrate`, scored by the pooled FP proportion on labelled scenarios.

    This matches detectors on the share of their detections that are false
    rather than on the false-alarm rate in noise.
    """
    def rate_of(v):
        rep, _ = evaluate(scenarios, detector_factory(v), match_config)
        return rep.fp_proportion
    return _sweep(rate_of, target, grid, prefer)


def calibrate_mu(detector_factory, stationary_generator, target_fp_rate, mu_grid, n_series=200):
    """Largest learning rate in ``mu_grid`` meeting ``target_fp_rate`` (events per sample)."""
    return calibrate(detector_factory, stationary_generator, target_fp_rate, mu_grid, n_series, "largest")


def default_mu_grid(lo=1e-3, hi=10.0, per_decade=8):
    n = int(round(math.log10(hi / lo) * per_decade)) + 1
    return np.geomspace(lo, hi, n)
