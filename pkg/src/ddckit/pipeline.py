"""The full downconversion chain: optional passband pre-filter, digital mixer,
envelope filter, optional extra low-pass, and decimation in either order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import analysis
from .core import (
    CarrierConfig,
    ComplexFilter,
    ComplexSeq,
    Domain,
    FilterState,
    RealSeq,
    UsageError,
    decimate,
    filter_stream,
)
from .filters import make_lp, to_baseband

# Residual below this fraction of a unit impulse counts as settled.
_SETTLE_EPS = 1e-12


class ChainOrder(Enum):
    """Where decimation sits relative to the extra low-pass filter."""

    FILTER_THEN_DECIMATE = "filter-then-decimate"
    DECIMATE_THEN_FILTER = "decimate-then-filter"


@dataclass(frozen=True)
class DdcChain:
    """An immutable downconversion pipeline description.

    Stages run in order: ``pre_mixer`` (passband, on the raw ADC stream),
    mixer, ``ddc`` (the envelope filter), then either low-pass and decimate or
    decimate and low-pass.  When filtering after decimation the ``lowpass``
    stage runs at the decimated rate and must be built for the longer sample
    period; :func:`make_chain` does that bookkeeping.
    """

    carrier: CarrierConfig
    ddc: ComplexFilter
    lowpass: ComplexFilter | None = None
    pre_mixer: ComplexFilter | None = None
    decimation: int = 1
    decimation_phase: int = 0
    order: ChainOrder = ChainOrder.FILTER_THEN_DECIMATE

    def __post_init__(self) -> None:
        if self.ddc.domain is not Domain.BASEBAND:
            raise UsageError("the DDC filter must be a baseband filter")
        if self.lowpass is not None and self.lowpass.domain is not Domain.BASEBAND:
            raise UsageError("the low-pass stage must be a baseband filter")
        if self.pre_mixer is not None and self.pre_mixer.domain is not Domain.PASSBAND:
            raise UsageError("the pre-mixer stage must be a passband filter")
        if not isinstance(self.decimation, int) or self.decimation < 1:
            raise UsageError("decimation must be a positive integer")
        if not (0 <= self.decimation_phase < self.decimation):
            raise UsageError("decimation phase out of range")
        if self.order is ChainOrder.DECIMATE_THEN_FILTER and self.lowpass is None:
            raise UsageError("decimate-then-filter needs a low-pass stage")

    @property
    def output_period(self) -> float:
        return self.carrier.sample_period * self.decimation

    def baseband_stages(self) -> list[ComplexFilter]:
        """All filter stages mapped to the baseband, in processing order.

        This is the chain's effective LTI filter for noise purposes: mixing
        commutes with the passband pre-filter once the latter is transformed.
        """
        stages: list[ComplexFilter] = []
        if self.pre_mixer is not None:
            stages.append(to_baseband(self.pre_mixer, self.carrier))
        stages.append(self.ddc)
        if self.lowpass is not None and self.order is ChainOrder.FILTER_THEN_DECIMATE:
            stages.append(self.lowpass)
        return stages


def make_chain(
    carrier: CarrierConfig,
    ddc: ComplexFilter,
    lp_bandwidth: float | None = None,
    pre_mixer: ComplexFilter | None = None,
    decimation: int = 1,
    decimation_phase: int = 0,
    order: ChainOrder = ChainOrder.FILTER_THEN_DECIMATE,
) -> DdcChain:
    """Build a chain, constructing the low-pass stage at the rate implied by
    the filter/decimation order.

    ``lp_bandwidth`` is in rad/s.  With ``DECIMATE_THEN_FILTER`` the low-pass
    runs at the decimated rate, so its pole is ``exp(-bw * decimation * h)``.
    """
    lowpass = None
    if lp_bandwidth is not None:
        period = carrier.sample_period
        if order is ChainOrder.DECIMATE_THEN_FILTER:
            period *= decimation
        lowpass = make_lp(lp_bandwidth, period)
    return DdcChain(
        carrier=carrier,
        ddc=ddc,
        lowpass=lowpass,
        pre_mixer=pre_mixer,
        decimation=decimation,
        decimation_phase=decimation_phase,
        order=order,
    )


def mix_down(y: RealSeq | ComplexSeq, carrier: CarrierConfig) -> ComplexSeq:
    """Multiply by ``2*exp(-1j*phase_step*k)`` with k the absolute sample index.

    The mixer phasor is periodic in the carrier block, so it is read from a
    block-length table; this keeps the phase exact for arbitrarily large
    indices and places the conjugate image of a constant envelope exactly on
    the double-frequency line.
    """
    table = carrier.mixer_phases()
    k = (y.start + np.arange(len(y.values))) % carrier.samples
    return ComplexSeq(2.0 * np.asarray(y.values) * table[k], start=y.start)


@dataclass(frozen=True)
class DdcOutput:
    """Chain output plus its timing metadata.

    ``group_delay`` is the sum of per-stage group delays at zero baseband
    frequency, in seconds.  ``decimation_delay`` is the extra effective delay
    of holding the output over a controller period (half the output period)
    and is reported separately because it is a property of the consumer's
    sampling, not of the filters.
    """

    seq: ComplexSeq
    sample_period: float
    group_delay: float
    decimation_delay: float


def _settling_horizon(pole: complex | None) -> int:
    if pole is None or pole == 0:
        return 0
    return int(math.ceil(math.log(_SETTLE_EPS) / math.log(abs(pole))))


def transient_length(chain: DdcChain) -> int:
    """Number of leading output-affecting samples ruined by zero initial
    conditions, in input-rate samples.

    FIR stages contribute their memory (taps minus one); stages with a pole
    contribute the horizon where the geometric settling falls below 1e-12,
    scaled back to the input rate when the stage runs after decimation.
    """
    total = 0
    if chain.pre_mixer is not None:
        total += len(chain.pre_mixer.taps) - 1
        total += _settling_horizon(chain.pre_mixer.pole)
    total += len(chain.ddc.taps) - 1
    total += _settling_horizon(chain.ddc.pole)
    if chain.lowpass is not None:
        stage = len(chain.lowpass.taps) - 1 + _settling_horizon(chain.lowpass.pole)
        if chain.order is ChainOrder.DECIMATE_THEN_FILTER:
            stage *= chain.decimation
        total += stage
    return total


def group_delay_seconds(chain: DdcChain) -> float:
    """Sum of stage group delays at zero baseband frequency, in seconds."""
    h = chain.carrier.sample_period
    total = 0.0
    if chain.pre_mixer is not None:
        bb = to_baseband(chain.pre_mixer, chain.carrier)
        total += analysis.phase_metrics(bb, 0.0, h).group_delay
    total += analysis.phase_metrics(chain.ddc, 0.0, h).group_delay
    if chain.lowpass is not None:
        period = h
        if chain.order is ChainOrder.DECIMATE_THEN_FILTER:
            period *= chain.decimation
        total += analysis.phase_metrics(chain.lowpass, 0.0, period).group_delay
    return total


def run(chain: DdcChain, y: RealSeq) -> DdcOutput:
    """Push a block of ADC samples through the chain.

    The input must at least cover the chain transient.  Output sample j sits
    at absolute input index ``y.start + decimation_phase + j*decimation``.
    """
    if len(y) < max(1, transient_length(chain)):
        raise UsageError(
            f"input of {len(y)} samples is shorter than the chain transient "
            f"({transient_length(chain)} samples)"
        )
    x: RealSeq | ComplexSeq = y
    if chain.pre_mixer is not None:
        x = filter_stream(chain.pre_mixer, FilterState(chain.pre_mixer), x)
    z = mix_down(x, chain.carrier)
    z = filter_stream(chain.ddc, FilterState(chain.ddc), z)
    if chain.order is ChainOrder.FILTER_THEN_DECIMATE:
        if chain.lowpass is not None:
            z = filter_stream(chain.lowpass, FilterState(chain.lowpass), z)
        z = decimate(z, chain.decimation, chain.decimation_phase)
    else:
        z = decimate(z, chain.decimation, chain.decimation_phase)
        z = filter_stream(chain.lowpass, FilterState(chain.lowpass), z)
    return DdcOutput(
        seq=z,
        sample_period=chain.output_period,
        group_delay=group_delay_seconds(chain),
        decimation_delay=0.5 * chain.output_period,
    )
