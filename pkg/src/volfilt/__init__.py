"""Streaming detection and location of volatility changes."""
from .filters import (
    VolatilityFilter,
    differenced_output,
    filter_series,
    make_triangular_fast_weights,
    make_triangular_slow_weights,
    make_uniform_weights,
)
from .afcd import AfcdConfig, AfcdDetector, AfcdResult, DetectionEvent, detect_afcd
from .cafcd import CafcdConfig, CafcdDetector, detect_cafcd
from .vce import VceConfig, VceTracker, locate, vce_estimate
from .glr import GlrConfig, GlrDetector, detect_glr, detect_glr_channels
from .synth import Scenario, SynthConfig, first_difference, gen_activity_surrogate, gen_piecewise_gaussian, gen_stationary
from .evaluation import (
    MatchConfig,
    MetricsReport,
    calibrate,
    calibrate_fp_proportion,
    calibrate_mu,
    evaluate,
    match_detections,
)

__version__ = "0.1.0"
