"""Ergodic capacity of active-RIS-aided terahertz links with discrete phase shifts
and beam misalignment."""

from .capacity import (
    CapacityEstimate,
    EmpiricalCdf,
    SelfCheckError,
    capacity_cdf_integral,
    capacity_mc,
    estimate_capacity,
    snr_samples,
)
from .linkmodel import (
    SignalRealization,
    SnrSample,
    effective_rho,
    instantaneous_snr,
    simulate_received_signal,
)
from .params import (
    CONTINUOUS,
    DISABLED,
    ConfigError,
    LinkGains,
    MisalignmentGeometry,
    MisalignmentParams,
    SnrMode,
    SystemConfig,
    absorption_gain,
    derive_misalignment,
    erf,
    implied_kappa,
    link_gains,
    load_config,
    propagation_gain,
)
from .stochastics import (
    ChannelDraw,
    RngStream,
    draw_channel,
    quantize_phase,
    sample_envelopes,
    sample_misalignment,
    sample_phase_errors,
)

__version__ = "0.1.0"
