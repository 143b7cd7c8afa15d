"""Frequency responses, H2 norms (incl. multirate), tuning, phase metrics."""

import math

import numpy as np
import pytest
from scipy.signal import lfilter

import ddckit as dk


def _brute_energy(stages, count=20000):
    """Independent oracle: direct time-domain impulse simulation."""
    x = np.zeros(count, dtype=complex)
    x[0] = 1.0
    for stage in stages:
        den = [1.0] if stage.pole is None else [1.0, -stage.pole]
        x = lfilter(stage.taps, den, x)
    return float(np.sum(np.abs(x) ** 2))


# ---------------------------------------------------------------- FreqGrid

def test_regular_grid_covers_half_open_interval():
    grid = dk.FreqGrid.regular(8)
    assert len(grid) == 8
    assert grid.thetas[-1] == pytest.approx(math.pi)
    assert grid.thetas[0] > -math.pi
    assert 0.0 in grid.thetas  # even point counts include zero frequency


def test_grid_maps_to_hz():
    grid = dk.FreqGrid.regular(4, sample_rate=100.0)
    assert grid.freq_hz == pytest.approx(grid.thetas * 100 / (2 * math.pi))
    assert dk.FreqGrid.regular(4).freq_hz is None


def test_grid_validation():
    with pytest.raises(dk.UsageError):
        dk.FreqGrid(np.array([]))
    with pytest.raises(dk.UsageError):
        dk.FreqGrid(np.array([0.2, 0.1]))
    with pytest.raises(dk.UsageError):
        dk.FreqGrid(np.array([-math.pi]))  # open at -pi
    with pytest.raises(dk.UsageError):
        dk.FreqGrid(np.array([3.5]))


# ----------------------------------------------------------- freq_response

def test_freq_response_ma11_values():
    f = dk.make_ma(11)
    assert abs(dk.freq_response(f, np.array([0.0]))[0] - 1.0) < 1e-15
    assert abs(dk.freq_response(f, np.array([2 * math.pi / 11]))[0]) < 1e-15


def test_freq_response_2sr_is_not_conjugate_symmetric():
    carrier = dk.CarrierConfig(2, 17)
    with pytest.warns(dk.NoiseAmplificationWarning):
        f = dk.make_2sr(carrier)
    assert abs(f.response(dk.reduce_angle(-2 * carrier.phase_step))) < 1e-12
    theta = 0.9
    assert abs(f.response(theta)) != pytest.approx(abs(f.response(-theta)), rel=1e-3)


def test_freq_response_of_cascade_is_product():
    carrier = dk.CarrierConfig(7, 33)
    stages = [dk.make_2sr(carrier), dk.make_dcr(carrier)]
    thetas = np.linspace(-3, 3, 11)
    prod = stages[0].response(thetas) * stages[1].response(thetas)
    assert np.allclose(dk.freq_response(stages, thetas), prod, rtol=1e-15)


def test_freq_response_lp_magnitude_formula():
    f = dk.make_lp(0.35, 1.0)
    a = f.pole.real
    for theta in (0.0, 0.7, math.pi):
        expected = (1 - a) ** 2 / (1 - 2 * a * math.cos(theta) + a * a)
        assert abs(dk.freq_response(f, np.array([theta]))[0]) ** 2 == pytest.approx(
            expected, rel=1e-12
        )


# -------------------------------------------------------------- h2_norm_sq

def test_norm_of_moving_averages_match_published_rejections():
    r11 = dk.h2_norm_sq(dk.make_ma(11))
    r33 = dk.h2_norm_sq(dk.make_ma(33))
    assert r11.value == pytest.approx(1 / 11, rel=1e-15)
    assert r33.value == pytest.approx(1 / 33, rel=1e-15)
    assert r11.value_db == pytest.approx(-10.41, abs=5e-3)
    assert r33.value_db == pytest.approx(-15.19, abs=5e-3)
    assert r11.method == "closed-form"


def test_norm_of_quarter_rate_reconstruction():
    assert dk.h2_norm_sq(dk.make_2sr(dk.CarrierConfig(1, 4))).value == pytest.approx(
        0.5, rel=1e-15
    )


def test_norm_single_pole_closed_form_vs_brute_force():
    carrier = dk.CarrierConfig(7, 33)
    stages = [dk.make_ma(5), dk.make_lp(0.03 * 2 * math.pi, 1.0)]
    report = dk.h2_norm_sq(stages)
    assert report.method == "closed-form"
    assert report.value == pytest.approx(_brute_energy(stages), rel=1e-12)


def test_norm_two_poles_uses_impulse_sum_with_tight_tail():
    stages = [dk.make_lp(0.5, 1.0), dk.make_lp(0.125, 1.0)]
    report = dk.h2_norm_sq(stages)
    assert report.method == "impulse-sum"
    assert report.value == pytest.approx(_brute_energy(stages), rel=1e-12)
    assert not report.degraded


def test_norm_report_db():
    assert dk.h2_norm_sq(dk.make_ma(10)).value_db == pytest.approx(-10.0)


# ------------------------------------------------------- multirate_norm_sq

def test_multirate_factor_one_degenerates_to_cascade():
    f = dk.make_ma(4)
    lp = dk.make_lp(0.2, 1.0)
    assert dk.multirate_norm_sq(f, lp, 1).value == pytest.approx(
        dk.h2_norm_sq([f, lp]).value, rel=1e-14
    )


def test_multirate_identity_outer_gives_inner_norm():
    f = dk.make_ma(6)
    identity = dk.ComplexFilter(np.ones(1))
    for factor in (1, 2, 6, 7):
        assert dk.multirate_norm_sq(f, identity, factor).value == pytest.approx(
            1 / 6, rel=1e-15
        )


def test_multirate_closed_form_vs_brute_force_upsampled_convolution():
    f = dk.make_ma(4)
    pole = 0.7
    outer = dk.ComplexFilter(np.array([1 - pole]), pole=pole)
    report = dk.multirate_norm_sq(f, outer, 4)
    # Oracle: impulse of the upsampled cascade simulated over 1e4 samples.
    x = np.zeros(10**4)
    x[0] = 1.0
    h = lfilter(f.taps, [1.0], x)
    den = np.zeros(5)
    den[0], den[4] = 1.0, -pole
    g = lfilter([1 - pole], den, h)
    assert report.value == pytest.approx(float(np.sum(np.abs(g) ** 2)), rel=1e-13)
    assert report.method == "closed-form"


def test_multirate_with_inner_pole_falls_back_to_impulse_sum():
    carrier = dk.CarrierConfig(7, 33)
    inner = [dk.to_baseband(dk.make_dc_reject_passband(15 / 16), carrier),
             dk.make_2sr(carrier)]
    pole = 0.6
    outer = dk.ComplexFilter(np.array([1 - pole]), pole=pole)
    report = dk.multirate_norm_sq(inner, outer, 4)
    x = np.zeros(3 * 10**4, dtype=complex)
    x[0] = 1.0
    y = lfilter(inner[0].taps, [1.0, -inner[0].pole], x)
    y = lfilter(inner[1].taps, [1.0], y)
    den = np.zeros(5, dtype=complex)
    den[0], den[4] = 1.0, -pole
    y = lfilter([1 - pole], den, y)
    assert report.value == pytest.approx(float(np.sum(np.abs(y) ** 2)), rel=1e-12)
    assert report.tail_bound is not None and not report.degraded


def test_multirate_validates_factor():
    with pytest.raises(dk.UsageError):
        dk.multirate_norm_sq(dk.make_ma(4), dk.make_ma(1), 0)


# ------------------------------------------------------- tune_lp_bandwidth

def test_tune_recovers_known_bandwidth_through_identity():
    # With no envelope filter, the norm is (1-a)/(1+a); invert it for a=e^-0.1.
    target = 10 * math.log10((1 - math.exp(-0.1)) / (1 + math.exp(-0.1)))
    identity = dk.ComplexFilter(np.ones(1))
    bandwidth = dk.tune_lp_bandwidth(identity, target, 1.0)
    assert bandwidth == pytest.approx(0.1, rel=1e-4)


def test_tune_middle_group_bandwidths():
    target = -15.2
    w1 = dk.tune_lp_bandwidth(dk.make_2sr(dk.CarrierConfig(7, 33)), target, 1.0)
    w2 = dk.tune_lp_bandwidth(dk.make_ma(11), target, 1.0)
    assert w1 / (2 * math.pi) == pytest.approx(0.01, rel=0.3)
    assert w2 / (2 * math.pi) == pytest.approx(0.01, rel=0.3)


def test_tune_hits_target_within_tolerance():
    stages = [dk.make_ma(11)]
    bandwidth = dk.tune_lp_bandwidth(stages, -20.0, 1.0)
    achieved = dk.h2_norm_sq(stages + [dk.make_lp(bandwidth, 1.0)]).value
    assert achieved == pytest.approx(10 ** (-2.0), rel=1e-6)


def test_tune_near_floor_gives_wide_open_lowpass():
    floor_db = 10 * math.log10(1 / 11)
    bandwidth = dk.tune_lp_bandwidth(dk.make_ma(11), floor_db - 1e-3, 1.0)
    assert bandwidth > 2.0  # pole ~ exp(-2), low-pass nearly an identity


def test_tune_unachievable_target_raises_domain_error():
    with pytest.raises(dk.DomainError, match="achievable"):
        dk.tune_lp_bandwidth(dk.make_ma(11), -5.0, 1.0)
    with pytest.raises(dk.DomainError, match="achievable"):
        dk.tune_lp_bandwidth(dk.make_ma(11), -150.0, 1.0)


@pytest.mark.parametrize(
    "ddc",
    [
        dk.make_ma(11),
        dk.make_ma(33),
        dk.make_2sr(dk.CarrierConfig(7, 33)),
        dk.convolve(
            dk.make_2sr(dk.CarrierConfig(7, 33)), dk.make_dcr(dk.CarrierConfig(7, 33))
        ),
    ],
    ids=["ma11", "ma33", "2sr", "2sr+dcr"],
)
def test_tune_monotonicity_premise(ddc):
    values = [
        dk.h2_norm_sq([ddc, dk.make_lp(x, 1.0)]).value
        for x in np.geomspace(1e-6, 20, 50)
    ]
    assert np.all(np.diff(values) > 0)


# ----------------------------------------------------------- phase_metrics

def test_group_delay_of_symmetric_fir_is_half_span():
    for length in (4, 11, 14, 33):
        metrics = dk.phase_metrics(dk.make_ma(length), 1e-3, 1.0)
        assert metrics.group_delay == pytest.approx((length - 1) / 2, abs=1e-6)


def test_group_delay_of_pure_delay():
    delay = dk.ComplexFilter(np.array([0, 0, 0, 1.0]))
    for omega in (0.3, 1.1, 2.5):
        assert dk.phase_metrics(delay, omega, 1.0).group_delay == pytest.approx(
            3.0, abs=1e-6
        )


def test_group_delay_quarter_rate_reconstruction():
    f = dk.make_2sr(dk.CarrierConfig(1, 4))
    assert dk.phase_metrics(f, 0.0, 1.0).group_delay == pytest.approx(0.5, abs=1e-9)


def test_phase_is_unwrapped_continuously():
    f = dk.make_ma(11)
    # Linear phase: -5*theta, well past -pi at theta = 0.5 where wrapping
    # would otherwise fold it.
    metrics = dk.phase_metrics(f, 0.5, 1.0)
    assert metrics.phase == pytest.approx(-2.5, abs=1e-9)


def test_phase_metrics_rejects_response_zero():
    with pytest.raises(dk.DomainError):
        dk.phase_metrics(dk.make_ma(11), 2 * math.pi / 11, 1.0)


def test_phase_metrics_scales_with_sample_period():
    h = 1e-8
    metrics = dk.phase_metrics(dk.make_ma(11), 1e5, h)
    assert metrics.group_delay == pytest.approx(5 * h, rel=1e-6)


# --------------------------------------------------------------- alias_map

def test_alias_map_fundamental():
    carrier = dk.CarrierConfig(7, 33)
    images = dk.alias_map(1, carrier)
    assert images.pos == pytest.approx(0.0, abs=1e-15)
    assert images.neg == pytest.approx(
        dk.reduce_angle(-2 * carrier.phase_step), abs=1e-12
    )


def test_alias_map_iq_third_harmonic_hits_zero():
    images = dk.alias_map(3, dk.CarrierConfig(1, 4))
    assert abs(images.pos) == pytest.approx(math.pi)
    assert images.neg == pytest.approx(0.0, abs=1e-12)


def test_alias_map_images_fall_on_block_zeros():
    carrier = dk.CarrierConfig(7, 33)
    ma = dk.make_ma(33)
    for order in (2, 3, 5, 8):
        images = dk.alias_map(order, carrier)
        if (order - 1) * carrier.periods % carrier.samples:
            assert abs(ma.response(images.pos)) < 1e-12
        if (order + 1) * carrier.periods % carrier.samples:
            assert abs(ma.response(images.neg)) < 1e-12


def test_alias_map_validates_order():
    with pytest.raises(dk.UsageError):
        dk.alias_map(0, dk.CarrierConfig(1, 4))


def test_reduce_angle_principal_interval():
    assert dk.reduce_angle(math.pi) == pytest.approx(math.pi)
    assert dk.reduce_angle(-math.pi) == pytest.approx(math.pi)
    assert dk.reduce_angle(3 * math.pi / 2) == pytest.approx(-math.pi / 2)
    assert dk.reduce_angle(0.0) == 0.0


# ------------------------------------------------------------- invariants

def _constructed_filters():
    carrier = dk.CarrierConfig(7, 33)
    quarter = dk.CarrierConfig(1, 4)
    return [
        [dk.make_ma(11)],
        [dk.make_ma(33)],
        [dk.make_2sr(carrier)],
        [dk.make_dcr(carrier)],
        [dk.make_iq(quarter)],
        [dk.make_lp(-math.log(0.9), 1.0)],
        [dk.make_lp(0.00628, 1.0)],  # pole ~ 0.99374
        [dk.to_baseband(dk.make_dc_reject_passband(15 / 16), carrier)],
        [dk.make_2sr(carrier), dk.make_dcr(carrier)],
        [dk.make_ma(14), dk.make_lp(0.0628, 1.0)],
        [dk.to_baseband(dk.make_dc_reject_passband(0.9), carrier),
         dk.make_2sr(carrier), dk.make_lp(0.1, 1.0)],
    ]


@pytest.mark.parametrize("stages", _constructed_filters())
def test_parseval_consistency(stages):
    # Uniform sampling over a full period integrates analytic |G|^2 almost
    # exactly, so the grid mean must agree with the impulse energy.
    grid = dk.FreqGrid.regular(2**16)
    mean_power = float(np.mean(np.abs(dk.freq_response(stages, grid)) ** 2))
    assert mean_power == pytest.approx(dk.h2_norm_sq(stages).value, rel=1e-6)


@pytest.mark.parametrize("stages", _constructed_filters())
def test_norm_product_bound(stages):
    grid = dk.FreqGrid.regular(1 << 14)
    total = dk.h2_norm_sq(stages).value
    head, tail = stages[:1], stages[1:]
    if not tail:
        return
    sup_sq = float(np.max(np.abs(dk.freq_response(tail, grid)) ** 2))
    # The dense-grid sup can undershoot the true sup, never by much.
    assert total <= dk.h2_norm_sq(head).value * sup_sq * (1 + 1e-6)


def test_small_bandwidth_asymptote():
    x = 1e-4  # bandwidth times sample period
    for f in (dk.make_ma(11), dk.make_2sr(dk.CarrierConfig(7, 33))):
        combined = dk.h2_norm_sq([f, dk.make_lp(x, 1.0)]).value
        assert combined == pytest.approx(x / 2, rel=0.01)


@pytest.mark.parametrize("stages", _constructed_filters())
def test_freq_response_matches_fft_of_impulse(stages):
    # Independent oracle: DFT of a long truncated impulse response.
    size = 1 << 13
    impulse = np.zeros(size, dtype=complex)
    impulse[0] = 1.0
    x = dk.ComplexSeq(impulse)
    for stage in stages:
        x = dk.apply_filter(stage, x)
    spectrum = np.fft.fft(x.values)
    thetas = 2 * math.pi * np.fft.fftfreq(size)
    direct = dk.freq_response(stages, thetas)
    # Truncation leaves a geometric tail; the slowest pole here decays it
    # far below the tolerance over 2^13 samples.
    assert np.allclose(direct, spectrum, rtol=0, atol=1e-9)


def test_multirate_and_single_rate_agree_exactly_for_identity_outer():
    f = dk.make_ma(8)
    identity = dk.ComplexFilter(np.ones(1))
    multi = dk.multirate_norm_sq(f, identity, 8).value
    single = dk.h2_norm_sq([f, identity]).value
    assert multi == pytest.approx(single, rel=1e-15)
