"""Exact on-grid delay-Doppler equivalents of windowed off-grid channels."""

from .channel import (
    PhysicalChannel,
    PhysicalPath,
    ScattererDensity,
    apply_channel_offgrid,
    eval_modulation_function,
    eval_transfer_function,
)
from .config import ConfigError, RunConfig, builtin_configs
from .ongrid import (
    U_TAPS,
    V_TAPS,
    GridSpec,
    OrientationError,
    SpreadReport,
    TapMatrix,
    TruncationPolicy,
    TruncationWarning,
    compute_taps,
    compute_taps_continuous,
    compute_taps_discrete,
    read_taps,
    reconstruct_spread,
    spread_report,
)
from .signals import SampledSignal, nmse
from .simkernel import (
    EquivalenceReport,
    ModelError,
    apply_ongrid_model,
    apply_windowed_offgrid,
    make_test_signal,
    verify_equivalence,
)
from .windows import (
    QuadratureWarning,
    WindowPair,
    WindowSpec,
    hamming,
    raised_cosine,
    rect,
    window_transform,
)

__version__ = "0.1.0"
