"""Core types: carrier configuration, sample sequences, and streaming complex filters.

Everything downstream (filter constructors, chain composition, analysis) is
built on the small set of types defined here.  All arithmetic is double
precision; filters have complex coefficients and are evaluated in direct form
via :func:`scipy.signal.lfilter`, with explicit state objects so that block
processing is exactly equivalent to one-shot processing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.signal import lfilter


class DdcError(Exception):
    """Base class for errors raised by this package."""


class UsageError(DdcError):
    """Caller misuse: invalid arguments, mismatched state, malformed config."""


class DomainError(DdcError):
    """Mathematically undefined or out-of-domain request (unstable filter,
    unachievable tuning target, evaluation at a response zero)."""


class SingularityError(DomainError):
    """A construction is singular for the given carrier ratio."""


@dataclass(frozen=True)
class CarrierConfig:
    """Sampling grid for a sinusoidal carrier: ``periods`` carrier cycles per
    block of ``samples`` ADC samples.

    The ratio periods/samples fixes the per-sample phase advance of the
    carrier, ``phase_step = 2*pi*periods/samples``, computed from the integer
    ratio so that filter zeros land exactly on the harmonic grid.  The IQ
    special case is ``CarrierConfig(1, 4)``.

    Parameters
    ----------
    periods : int
        Carrier periods per block (> 0).
    samples : int
        Samples per block (> 2*periods: the carrier must be below Nyquist).
    sample_rate : float
        ADC sample rate in Hz.
    """

    periods: int
    samples: int
    sample_rate: float = 1.0

    def __post_init__(self) -> None:
        if not isinstance(self.periods, int) or not isinstance(self.samples, int):
            raise UsageError("carrier ratio must be a pair of integers")
        if self.periods <= 0 or self.samples <= 0:
            raise UsageError("carrier ratio requires positive integers")
        if 2 * self.periods >= self.samples:
            raise UsageError(
                f"carrier ratio {self.periods}/{self.samples} is at or above "
                "Nyquist (need periods/samples < 1/2)"
            )
        if not (math.isfinite(self.sample_rate) and self.sample_rate > 0):
            raise UsageError("sample_rate must be positive and finite")

    @property
    def phase_step(self) -> float:
        """Carrier phase advance per sample, in radians."""
        return 2.0 * math.pi * self.periods / self.samples

    @property
    def sample_period(self) -> float:
        """Sample period in seconds."""
        return 1.0 / self.sample_rate

    @property
    def carrier_freq(self) -> float:
        """Carrier frequency in Hz."""
        return self.sample_rate * self.periods / self.samples

    @property
    def is_coprime(self) -> bool:
        """True when the ratio is fully reduced; required for the complete
        harmonic-rejection properties of block-length filters."""
        return math.gcd(self.periods, self.samples) == 1

    def mixer_phases(self) -> np.ndarray:
        """One block of mixer phasors ``exp(-1j*phase_step*k)``, k = 0..samples-1.

        The phasors are periodic in the block length, so a lookup into this
        table by ``k % samples`` gives the exact mixer value for any absolute
        sample index (no phase accumulation error at large k).
        """
        table = np.exp(-1j * self.phase_step * np.arange(self.samples))
        table.setflags(write=False)
        return table


def _validated_samples(values, dtype: type, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=dtype)
    if arr.ndim != 1:
        raise UsageError(f"{what} must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise UsageError(f"{what} must contain only finite values")
    if arr is values or arr.base is not None:
        arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class RealSeq:
    """Real-valued sample sequence with an absolute start index.

    ``start`` is the absolute index of ``values[0]`` in units of the sample
    period; the mixer is time-varying, so block processing must carry this
    index to keep the mixer phase reproducible across blocks.
    """

    values: np.ndarray
    start: int = 0

    def __post_init__(self) -> None:
        if np.iscomplexobj(self.values):
            raise UsageError("RealSeq requires real-valued samples")
        object.__setattr__(
            self, "values", _validated_samples(self.values, np.float64, "RealSeq")
        )

    def __len__(self) -> int:
        return len(self.values)

    @property
    def end(self) -> int:
        return self.start + len(self.values)


@dataclass(frozen=True)
class ComplexSeq:
    """Complex-valued sample sequence with an absolute start index."""

    values: np.ndarray
    start: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "values", _validated_samples(self.values, np.complex128, "ComplexSeq")
        )

    def __len__(self) -> int:
        return len(self.values)

    @property
    def end(self) -> int:
        return self.start + len(self.values)


class Domain(Enum):
    """Whether a filter acts on the raw ADC stream or after the mixer."""

    PASSBAND = "passband"
    BASEBAND = "baseband"


class FilterKind(Enum):
    FIR = "fir"
    FIRST_ORDER_IIR = "first-order-iir"


@dataclass(frozen=True)
class ComplexFilter:
    """Causal filter with complex coefficients: an FIR tap vector over an
    optional single stable pole.

    Transfer function ``B(z) / (1 - pole*z^-1)`` with
    ``B(z) = taps[0] + taps[1] z^-1 + ...``.  ``pole=None`` is plain FIR; a
    single tap with a pole is the classic first-order low-pass; two taps over
    a pole covers the passband DC-reject form ``(1 - z^-1)/(1 - p z^-1)``.
    """

    taps: np.ndarray
    pole: complex | None = None
    domain: Domain = Domain.BASEBAND

    def __post_init__(self) -> None:
        taps = np.atleast_1d(np.asarray(self.taps, dtype=np.complex128))
        if taps.ndim != 1 or len(taps) < 1:
            raise UsageError("filter needs at least one tap")
        if not np.all(np.isfinite(taps)):
            raise UsageError("filter taps must be finite")
        if taps is self.taps or taps.base is not None:
            taps = taps.copy()
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)
        if self.pole is not None:
            pole = complex(self.pole)
            if not (math.isfinite(pole.real) and math.isfinite(pole.imag)):
                raise UsageError("pole must be finite")
            if abs(pole) >= 1.0:
                raise UsageError(f"pole magnitude {abs(pole):.6g} >= 1 (unstable)")
            object.__setattr__(self, "pole", pole)

    @property
    def kind(self) -> FilterKind:
        return FilterKind.FIR if self.pole is None else FilterKind.FIRST_ORDER_IIR

    @property
    def is_fir(self) -> bool:
        return self.pole is None

    def response(self, theta) -> np.ndarray:
        """Frequency response at normalized angular frequency ``theta`` (rad/sample)."""
        theta = np.asarray(theta, dtype=np.float64)
        w = np.exp(-1j * theta)
        num = np.polynomial.polynomial.polyval(w, self.taps)
        if self.pole is None:
            return num
        return num / (1.0 - self.pole * w)

    def impulse(self, count: int) -> np.ndarray:
        """First ``count`` samples of the impulse response."""
        x = np.zeros(count, dtype=np.complex128)
        if count > 0:
            x[0] = 1.0
        return apply_filter(self, ComplexSeq(x)).values

    @property
    def dc_gain(self) -> complex:
        return complex(self.response(0.0))


class FilterState:
    """Mutable per-stream state for one filter: the numerator delay line plus
    the pole accumulator when the filter has one.

    Single-owner: one state must not be shared between concurrent runs.
    Processing a sequence in blocks through the same state gives exactly the
    one-shot result (bitwise for the FIR part: the per-sample tap summation
    order is fixed and independent of block boundaries).
    """

    def __init__(self, filt: ComplexFilter) -> None:
        self.filter = filt
        self._delay = np.zeros(len(filt.taps) - 1, dtype=np.complex128)
        self._carry = (
            None if filt.pole is None else np.zeros(1, dtype=np.complex128)
        )

    def reset(self) -> None:
        self._delay[:] = 0.0
        if self._carry is not None:
            self._carry[:] = 0.0


def filter_stream(
    filt: ComplexFilter, state: FilterState, x: RealSeq | ComplexSeq
) -> ComplexSeq:
    """Run one block of samples through ``filt``, updating ``state`` in place.

    Output sample k is ``sum_m taps[m] * x[k-m]`` (taps summed in ascending
    order, every sample, so results are bit-reproducible across block splits
    and input delays), fed through ``y[k] = pole*y[k-1] + v[k]`` when the
    filter has a pole.  Initial conditions are whatever ``state`` holds (all
    zeros after reset).  Output start index equals input start index.
    """
    if state.filter is not filt:
        raise UsageError("filter state belongs to a different filter")
    values = np.asarray(x.values, dtype=np.complex128)
    count = len(values)
    if count == 0:
        return ComplexSeq(values, x.start)
    taps = filt.taps
    length = len(taps)
    if length == 1:
        v = taps[0] * values
    else:
        history = np.concatenate([state._delay, values])
        v = taps[0] * history[length - 1 :]
        for m in range(1, length):
            v += taps[m] * history[length - 1 - m : length - 1 - m + count]
        state._delay = history[count:].copy()
    if filt.pole is not None:
        v, state._carry = lfilter(
            np.ones(1, dtype=np.complex128),
            np.array([1.0, -filt.pole], dtype=np.complex128),
            v,
            zi=state._carry,
        )
    return ComplexSeq(v, x.start)


def apply_filter(filt: ComplexFilter, x: RealSeq | ComplexSeq) -> ComplexSeq:
    """One-shot filtering from zero initial conditions."""
    return filter_stream(filt, FilterState(filt), x)


def decimate(x: RealSeq | ComplexSeq, factor: int, phase: int = 0) -> RealSeq | ComplexSeq:
    """Keep every ``factor``-th sample starting at ``phase``.

    Output sample j is input sample ``phase + j*factor``; the output sample
    period is ``factor`` times the input one.  The returned sequence is
    re-indexed from zero: absolute timing of output sample j is
    ``(x.start + phase + j*factor)`` input periods.
    """
    if not isinstance(factor, int) or factor < 1:
        raise UsageError("decimation factor must be a positive integer")
    if not isinstance(phase, int) or not (0 <= phase < factor):
        raise UsageError(f"decimation phase must lie in [0, {factor})")
    return type(x)(x.values[phase::factor], start=0)


def canonicalize(filt: ComplexFilter) -> tuple[ComplexFilter, int]:
    """Strip exact-zero leading/trailing FIR taps.

    Returns the stripped filter and the number of leading zeros removed (the
    integer delay by which the stripped filter's response differs from the
    original).  Filters with a pole are returned unchanged.
    """
    if filt.pole is not None:
        return filt, 0
    nonzero = np.flatnonzero(filt.taps != 0)
    if len(nonzero) == 0:
        return ComplexFilter(np.zeros(1), domain=filt.domain), 0
    first, last = int(nonzero[0]), int(nonzero[-1])
    if first == 0 and last == len(filt.taps) - 1:
        return filt, 0
    return ComplexFilter(filt.taps[first : last + 1], domain=filt.domain), first
