"""Low-latency digital downconversion for control applications.

Complex-envelope estimation of sampled sinusoids by mixing and short
complex-coefficient filters, plus the analysis machinery (frequency
responses, impulse-energy norms, multirate norms, bandwidth tuning, latency
metrics) and a simulator that checks pipelines against those predictions.
"""

from .analysis import (
    AliasImages,
    FreqGrid,
    NormReport,
    PhaseMetrics,
    alias_map,
    freq_response,
    h2_norm_sq,
    multirate_norm_sq,
    phase_metrics,
    reduce_angle,
    tune_lp_bandwidth,
)
from .core import (
    CarrierConfig,
    ComplexFilter,
    ComplexSeq,
    DdcError,
    Domain,
    DomainError,
    FilterKind,
    FilterState,
    RealSeq,
    SingularityError,
    UsageError,
    apply_filter,
    canonicalize,
    decimate,
    filter_stream,
)
from .filters import (
    NoiseAmplificationWarning,
    amplifies_noise,
    convolve,
    make_2sr,
    make_dc_reject_passband,
    make_dcr,
    make_iq,
    make_lp,
    make_ma,
    to_baseband,
)
from .pipeline import (
    ChainOrder,
    DdcChain,
    DdcOutput,
    group_delay_seconds,
    make_chain,
    mix_down,
    run,
    transient_length,
)
from .presets import (
    BUILTIN_PRESETS,
    Preset,
    get_preset,
    load_preset_file,
    parse_filter_spec,
)
from .simulate import (
    ConstantEnvelope,
    ExperimentReport,
    PhaseRampEnvelope,
    SampledEnvelope,
    SignalSpec,
    StepEnvelope,
    analytic_noise_gain,
    harmonic_bias,
    iq_harmonic_bias,
    noise_gain_study,
    run_experiment,
    synthesize,
)

__version__ = "0.1.0"

__all__ = [
    "AliasImages",
    "BUILTIN_PRESETS",
    "CarrierConfig",
    "ChainOrder",
    "ComplexFilter",
    "ComplexSeq",
    "ConstantEnvelope",
    "DdcChain",
    "DdcError",
    "DdcOutput",
    "Domain",
    "DomainError",
    "ExperimentReport",
    "FilterKind",
    "FilterState",
    "FreqGrid",
    "NoiseAmplificationWarning",
    "NormReport",
    "PhaseMetrics",
    "PhaseRampEnvelope",
    "Preset",
    "RealSeq",
    "SampledEnvelope",
    "SignalSpec",
    "SingularityError",
    "StepEnvelope",
    "UsageError",
    "alias_map",
    "amplifies_noise",
    "analytic_noise_gain",
    "apply_filter",
    "canonicalize",
    "convolve",
    "decimate",
    "filter_stream",
    "freq_response",
    "get_preset",
    "group_delay_seconds",
    "h2_norm_sq",
    "harmonic_bias",
    "iq_harmonic_bias",
    "load_preset_file",
    "make_2sr",
    "make_chain",
    "make_dc_reject_passband",
    "make_dcr",
    "make_iq",
    "make_lp",
    "make_ma",
    "mix_down",
    "multirate_norm_sq",
    "noise_gain_study",
    "parse_filter_spec",
    "phase_metrics",
    "reduce_angle",
    "run",
    "run_experiment",
    "synthesize",
    "to_baseband",
    "transient_length",
    "tune_lp_bandwidth",
]
