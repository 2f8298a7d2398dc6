"""Rate regions of the two-user MIMO asynchronous MAC with faster-than-Nyquist signaling."""

from .alloc import solve_f_alpha, waterfill_spatial
from .channel import MimoChannel, sample_channel
from .gram import GramSet, build_gram_set, cross_svd
from .pulse import PulseShape, autocorr
from .rates import CovariancePair, pentagon, sum_rate
from .region import ScenarioConfig, average_envelope, sumrate_sweep, trace_region

__version__ = "0.1.0"

__all__ = [
    "PulseShape",
    "autocorr",
    "GramSet",
    "build_gram_set",
    "cross_svd",
    "MimoChannel",
    "sample_channel",
    "CovariancePair",
    "pentagon",
    "sum_rate",
    "waterfill_spatial",
    "solve_f_alpha",
    "ScenarioConfig",
    "trace_region",
    "average_envelope",
    "sumrate_sweep",
]
