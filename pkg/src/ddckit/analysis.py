"""Frequency responses, impulse-energy (H2) norms, bandwidth tuning, and
latency metrics for complex-coefficient filters and cascades.

The squared H2 norm used throughout is the impulse-response energy
``sum_k |g_k|^2``; for a white unit-variance input it equals the output
variance, which is what ties these numbers to the simulator's Monte-Carlo
noise gains.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

import numpy as np
from scipy.signal import lfilter

from .core import (
    CarrierConfig,
    ComplexFilter,
    DomainError,
    UsageError,
)

FilterOrCascade = Union[ComplexFilter, Sequence[ComplexFilter]]

# Relative tail threshold for truncated impulse sums.
_TAIL_REL = 1e-14
# Tail bound above this fraction of the value means degraded precision.
_DEGRADED_REL = 1e-10
_IMPULSE_BLOCK = 4096
_MAX_IMPULSE_SAMPLES = 1 << 23


@dataclass(frozen=True)
class FreqGrid:
    """Strictly increasing normalized angular frequencies in (-pi, pi]."""

    thetas: np.ndarray
    sample_rate: float | None = None

    def __post_init__(self) -> None:
        thetas = np.asarray(self.thetas, dtype=np.float64)
        if thetas.ndim != 1 or len(thetas) == 0:
            raise UsageError("frequency grid must be a non-empty 1-d array")
        if np.any(np.diff(thetas) <= 0):
            raise UsageError("frequency grid must be strictly increasing")
        if thetas[0] <= -math.pi or thetas[-1] > math.pi:
            raise UsageError("frequency grid must lie within (-pi, pi]")
        thetas.setflags(write=False)
        object.__setattr__(self, "thetas", thetas)

    @classmethod
    def regular(cls, points: int, sample_rate: float | None = None) -> "FreqGrid":
        """Uniform grid of ``points`` frequencies covering (-pi, pi]."""
        if points < 1:
            raise UsageError("grid needs at least one point")
        step = 2.0 * math.pi / points
        thetas = -math.pi + step * np.arange(1, points + 1)
        return cls(thetas, sample_rate)

    @property
    def freq_hz(self) -> np.ndarray | None:
        """Grid as baseband offset frequencies in Hz (None without a rate)."""
        if self.sample_rate is None:
            return None
        return self.thetas * self.sample_rate / (2.0 * math.pi)

    def __len__(self) -> int:
        return len(self.thetas)


@dataclass(frozen=True)
class NormReport:
    """Squared-H2-norm result together with how it was obtained.

    ``method`` is one of ``closed-form``, ``impulse-sum`` (with a geometric
    tail bound on the truncation), or ``monte-carlo`` (with a standard error).
    """

    value: float
    method: str
    tail_bound: float | None = None
    stderr: float | None = None

    def __post_init__(self) -> None:
        if not (self.value >= 0.0):
            raise DomainError("squared norm must be non-negative")

    @property
    def value_db(self) -> float:
        return 10.0 * math.log10(self.value) if self.value > 0 else -math.inf

    @property
    def degraded(self) -> bool:
        """True when the truncation tail is not negligible next to the value."""
        if self.tail_bound is None:
            return False
        return self.tail_bound >= _DEGRADED_REL * max(self.value, np.finfo(float).tiny)


def _as_stages(obj: FilterOrCascade) -> list[ComplexFilter]:
    if isinstance(obj, ComplexFilter):
        return [obj]
    stages = list(obj)
    if not stages or not all(isinstance(s, ComplexFilter) for s in stages):
        raise UsageError("expected a ComplexFilter or a sequence of them")
    return stages


def _thetas(grid) -> np.ndarray:
    if isinstance(grid, FreqGrid):
        return grid.thetas
    return np.asarray(grid, dtype=np.float64)


def freq_response(obj: FilterOrCascade, grid) -> np.ndarray:
    """Evaluate the (cascade) frequency response on a grid.

    Complex-coefficient filters are not conjugate-symmetric across zero
    frequency, so positive and negative frequencies carry distinct
    information; grids here always span both sides.
    """
    thetas = _thetas(grid)
    resp = np.ones_like(thetas, dtype=np.complex128)
    for stage in _as_stages(obj):
        resp = resp * stage.response(thetas)
    return resp


def _materialize(stages: list[ComplexFilter]) -> tuple[np.ndarray, list[complex]]:
    """Collapse a cascade to one FIR numerator and the list of poles."""
    taps = np.ones(1, dtype=np.complex128)
    poles: list[complex] = []
    for stage in stages:
        taps = np.convolve(taps, stage.taps)
        if stage.pole is not None:
            if abs(stage.pole) >= 1.0:
                raise DomainError("cascade contains an unstable stage")
            poles.append(stage.pole)
    return taps, poles


def _one_pole_energy(taps: np.ndarray, pole: complex) -> float:
    """Exact impulse energy of ``B(z)/(1 - pole z^-1)``.

    Beyond the numerator support the impulse response is a pure geometric
    sequence, so the tail sums in closed form.
    """
    length = len(taps)
    impulse = np.zeros(length, dtype=np.complex128)
    impulse[0] = 1.0
    g = lfilter(taps, np.array([1.0, -pole]), impulse)
    q = abs(pole) ** 2
    head = float(np.sum(np.abs(g) ** 2))
    tail = float(np.abs(g[-1]) ** 2) * q / (1.0 - q)
    return head + tail


def _impulse_sum(taps: np.ndarray, poles: list[complex]) -> tuple[float, float]:
    """Truncated impulse energy for two or more poles, with a geometric tail
    bound computed from the slowest pole."""
    den = np.ones(1, dtype=np.complex128)
    for p in poles:
        den = np.convolve(den, np.array([1.0, -p]))
    rho = max(abs(p) for p in poles)
    log_rho = math.log(rho) if rho > 0 else -math.inf

    acc = 0.0
    tail = math.inf
    zi = np.zeros(max(len(taps), len(den)) - 1, dtype=np.complex128)
    produced = 0
    first = True
    while produced < _MAX_IMPULSE_SAMPLES:
        x = np.zeros(_IMPULSE_BLOCK, dtype=np.complex128)
        if first:
            x[0] = 1.0
            first = False
        y, zi = lfilter(taps, den, x, zi=zi)
        mag2 = np.abs(y) ** 2
        acc += float(np.sum(mag2))
        k = np.arange(produced, produced + _IMPULSE_BLOCK)
        produced += _IMPULSE_BLOCK
        if produced <= len(taps):
            continue
        nz = mag2 > 0
        if not np.any(nz):
            tail = 0.0
            break
        # |g_k| <= c * rho^k within the block; extrapolate that envelope.
        log_c2 = float(np.max(np.log(mag2[nz]) - 2.0 * k[nz] * log_rho))
        log_tail = log_c2 + 2.0 * produced * log_rho - math.log1p(-rho * rho)
        tail = math.exp(log_tail)
        if tail < _TAIL_REL * acc:
            break
    return acc, tail


def h2_norm_sq(obj: FilterOrCascade) -> NormReport:
    """Squared H2 norm (impulse energy) of a filter or cascade.

    Pure-FIR cascades and cascades with a single pole are exact closed forms;
    more poles fall back to a truncated impulse sum whose geometric tail bound
    is reported in the result.
    """
    taps, poles = _materialize(_as_stages(obj))
    if not poles:
        return NormReport(float(np.sum(np.abs(taps) ** 2)), "closed-form")
    if len(poles) == 1:
        return NormReport(_one_pole_energy(taps, poles[0]), "closed-form")
    value, tail = _impulse_sum(taps, poles)
    return NormReport(value, "impulse-sum", tail_bound=tail)


def _upsample_taps(taps: np.ndarray, factor: int) -> np.ndarray:
    up = np.zeros((len(taps) - 1) * factor + 1, dtype=np.complex128)
    up[::factor] = taps
    return up


def multirate_norm_sq(
    inner: FilterOrCascade, outer_lowrate: ComplexFilter, factor: int
) -> NormReport:
    """Squared H2 norm of low-rate filtering applied after decimation.

    Decimating the output of ``inner`` by ``factor`` and then filtering by
    ``outer_lowrate`` has the same output variance under white input as the
    single-rate cascade of ``inner`` with ``outer_lowrate(z^factor)`` (the
    noble identity), which is what this computes.
    """
    if not isinstance(factor, int) or factor < 1:
        raise UsageError("decimation factor must be a positive integer")
    stages = _as_stages(inner)
    if factor == 1:
        return h2_norm_sq(stages + [outer_lowrate])

    inner_taps, inner_poles = _materialize(stages)
    truncation = 0.0
    if inner_poles:
        # Flatten the inner stage to a long FIR; the discarded tail is small
        # and tracked so the caller can see the truncation is negligible.
        rho = max(abs(p) for p in inner_poles)
        horizon = len(inner_taps) + max(
            64, int(math.ceil(math.log(1e-18) / math.log(rho)))
        )
        g, _ = _impulse_response_of(inner_taps, inner_poles, horizon)
        cutoff = float(np.abs(g[-1]) ** 2) * (rho * rho) / (1.0 - rho * rho)
        gain = float(np.sum(np.abs(outer_lowrate.taps)))
        if outer_lowrate.pole is not None:
            gain /= 1.0 - abs(outer_lowrate.pole)
        truncation = cutoff * gain * gain
        inner_taps = g

    up = _upsample_taps(outer_lowrate.taps, factor)
    combined = np.convolve(inner_taps, up)
    if outer_lowrate.pole is None:
        value = float(np.sum(np.abs(combined) ** 2))
    else:
        pole = outer_lowrate.pole
        length = len(combined)
        padded = np.concatenate(
            [combined, np.zeros(factor, dtype=np.complex128)]
        )
        g = np.empty_like(padded)
        # Polyphase: each residue class modulo the factor is an independent
        # first-order recursion in the low-rate pole.
        for r in range(factor):
            g[r::factor] = lfilter(
                np.ones(1), np.array([1.0, -pole]), padded[r::factor]
            )
        q = abs(pole) ** 2
        head = float(np.sum(np.abs(g[:length]) ** 2))
        tail = float(np.sum(np.abs(g[length : length + factor]) ** 2)) / (1.0 - q)
        value = head + tail
    if truncation > 0.0:
        return NormReport(value, "impulse-sum", tail_bound=truncation)
    return NormReport(value, "closed-form")


def _impulse_response_of(
    taps: np.ndarray, poles: list[complex], count: int
) -> tuple[np.ndarray, np.ndarray]:
    den = np.ones(1, dtype=np.complex128)
    for p in poles:
        den = np.convolve(den, np.array([1.0, -p]))
    x = np.zeros(count, dtype=np.complex128)
    x[0] = 1.0
    zi = np.zeros(max(len(taps), len(den)) - 1, dtype=np.complex128)
    y, zf = lfilter(taps, den, x, zi=zi)
    return y, zf


def tune_lp_bandwidth(
    ddc_filter: FilterOrCascade, target_db: float, sample_period: float
) -> float:
    """Find the first-order low-pass bandwidth (rad/s) that brings the
    cascade's noise gain to ``target_db``.

    The impulse energy of ``ddc_filter * lowpass`` is strictly increasing in
    the bandwidth, so a bisection on bandwidth*period over [1e-9, 50] brackets
    any achievable target; the result matches the target within 1e-6 relative.
    """
    from .filters import make_lp

    if not (sample_period > 0 and math.isfinite(sample_period)):
        raise UsageError("sample period must be positive")
    stages = _as_stages(ddc_filter)
    target = 10.0 ** (target_db / 10.0)

    def gain(x: float) -> float:
        return h2_norm_sq(stages + [make_lp(x / sample_period, sample_period)]).value

    x_lo, x_hi = 1e-9, 50.0
    lo, hi = gain(x_lo), gain(x_hi)
    if not (lo < target < hi):
        lo_db = 10.0 * math.log10(lo)
        hi_db = 10.0 * math.log10(hi)
        raise DomainError(
            f"target {target_db:.4g} dB is outside the achievable range "
            f"({lo_db:.4g} dB, {hi_db:.4g} dB) for this filter"
        )
    for _ in range(200):
        x_mid = math.exp(0.5 * (math.log(x_lo) + math.log(x_hi)))
        g = gain(x_mid)
        if abs(g - target) <= 1e-6 * target:
            return x_mid / sample_period
        if g < target:
            x_lo = x_mid
        else:
            x_hi = x_mid
    raise DomainError("bandwidth bisection failed to converge")


class PhaseMetrics(NamedTuple):
    phase: float
    """Unwrapped response phase at the requested frequency, radians."""
    group_delay: float
    """Group delay at the requested frequency, seconds."""


def phase_metrics(
    obj: FilterOrCascade, omega: float, sample_period: float
) -> PhaseMetrics:
    """Phase (continuously unwrapped from zero frequency) and group delay.

    Group delay is a central finite difference of the response phase, which
    works uniformly for FIR, IIR, and cascades; the evaluation frequency must
    not sit on a response zero.
    """
    stages = _as_stages(obj)
    theta = omega * sample_period
    center = complex(freq_response(stages, np.array([theta]))[0])
    if abs(center) <= 1e-9:
        raise DomainError("phase is undefined at a response zero")

    steps = max(8, int(math.ceil(abs(theta) / 0.01)))
    path = np.linspace(0.0, theta, steps + 1)
    phase = float(np.unwrap(np.angle(freq_response(stages, path)))[-1])

    dtheta = 1e-6
    around = freq_response(stages, np.array([theta - dtheta, theta + dtheta]))
    delay_samples = -float(np.angle(around[1] * np.conj(around[0]))) / (2.0 * dtheta)
    return PhaseMetrics(phase=phase, group_delay=delay_samples * sample_period)


def reduce_angle(theta: float) -> float:
    """Reduce an angle to the principal interval (-pi, pi]."""
    return math.pi - (math.pi - theta) % (2.0 * math.pi)


class AliasImages(NamedTuple):
    pos: float
    """Baseband frequency of the +harmonic line after mixing, in (-pi, pi]."""
    neg: float
    """Baseband frequency of the -harmonic line after mixing, in (-pi, pi]."""


def alias_map(order: int, carrier: CarrierConfig) -> AliasImages:
    """Baseband landing frequencies of a real tone at ``order`` times the
    carrier after sampling and mixing.

    A real harmonic contributes two lines at +/- order times the carrier;
    mixing shifts both down by one carrier step, so they land at
    ``(order - 1)*step`` and ``(-order - 1)*step`` reduced modulo the sample
    rate.  For the quarter-rate (IQ) carrier every odd order has one image on
    zero frequency, which is exactly why IQ sampling biases precision
    applications; coprime ratios spread the images onto nonzero grid points
    that block-length averaging nulls.
    """
    if not isinstance(order, int) or order < 1:
        raise UsageError("harmonic order must be a positive integer")
    step = carrier.phase_step
    return AliasImages(
        pos=reduce_angle((order - 1) * step),
        neg=reduce_angle((-order - 1) * step),
    )
