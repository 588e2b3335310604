"""Tests for segment periodograms and quantile-based PSD estimates."""
import numpy as np
import pytest

from robust_psd import mc, spectrum, taper, theory


def make_periodograms(n=1000, n_seg=255, fs=2.0, seed=7, window="hann", overlap=0.5):
    rng = np.random.default_rng(seed)
    sig = spectrum.Signal(samples=rng.standard_normal(n), fs=fs)
    plan = taper.plan_segments(n, n_seg, overlap)
    tp = taper.normalize_energy(taper.make_taper(window, n_seg))
    return spectrum.modified_periodograms(sig, plan, tp)


# ---------------------------------------------------------------- quantiles


def test_sample_quantile_frozen_values():
    assert spectrum.sample_quantile(np.array([3.0, 1.0, 2.0]), 0.5) == 2.0
    four = np.array([4.0, 1.0, 3.0, 2.0])
    assert spectrum.sample_quantile(four, 0.5) == 2.5
    assert spectrum.sample_quantile(four, 0.6) == pytest.approx(2.8, abs=1e-15)
    assert spectrum.sample_quantile(four, 0.0) == 1.0
    assert spectrum.sample_quantile(four, 1.0) == 4.0
    assert spectrum.sample_quantile(np.array([5.0]), 0.3) == 5.0


def test_sample_quantile_matches_numpy_linear():
    rng = np.random.default_rng(11)
    for size in (1, 2, 3, 5, 17, 101):
        values = rng.exponential(size=size)
        for q in (0.0, 0.1, 0.25, 0.5, 1 - 1 / np.e, 0.75, 0.9, 1.0):
            assert spectrum.sample_quantile(values, q) == pytest.approx(
                float(np.quantile(values, q, method="linear")), rel=1e-13
            )


def test_sample_quantile_domain():
    with pytest.raises(ValueError):
        spectrum.sample_quantile(np.ones((2, 2)), 0.5)
    with pytest.raises(ValueError):
        spectrum.sample_quantile(np.array([]), 0.5)
    with pytest.raises(ValueError):
        spectrum.sample_quantile(np.array([1.0, np.nan]), 0.5)
    for q in (-0.1, 1.1, np.nan):
        with pytest.raises(ValueError):
            spectrum.sample_quantile(np.array([1.0, 2.0]), q)


def test_quantiles_by_bin_matches_columns():
    rng = np.random.default_rng(3)
    values = rng.exponential(size=(7, 12))
    for q in (0.0, 0.3, 0.5, 0.9, 1.0):
        expected = np.array(
            [spectrum.sample_quantile(values[:, j], q) for j in range(12)]
        )
        np.testing.assert_allclose(
            spectrum.quantiles_by_bin(values, q), expected, rtol=1e-13
        )


def test_quantiles_by_bin_invariances():
    rng = np.random.default_rng(4)
    values = rng.exponential(size=(9, 6))
    base = spectrum.quantiles_by_bin(values, 0.37)
    # permuting the segments must not change a per-bin order statistic
    perm = rng.permutation(9)
    np.testing.assert_array_equal(
        spectrum.quantiles_by_bin(values[perm], 0.37), base
    )
    # positive scaling commutes with the quantile
    np.testing.assert_allclose(
        spectrum.quantiles_by_bin(2.5 * values, 0.37), 2.5 * base, rtol=1e-13
    )


def test_quantiles_by_bin_domain():
    with pytest.raises(ValueError):
        spectrum.quantiles_by_bin(np.ones(4), 0.5)
    with pytest.raises(ValueError):
        spectrum.quantiles_by_bin(np.ones((2, 3)), 1.5)


# ---------------------------------------------------------------- containers


def test_signal_validation():
    sig = spectrum.Signal(samples=np.array([1.0, 2.0, 3.0]), fs=2.0)
    assert len(sig) == 3 and sig.fs == 2.0
    assert not sig.samples.flags.writeable
    with pytest.raises(ValueError):
        spectrum.Signal(samples=np.array([1.0]), fs=1.0)
    with pytest.raises(ValueError, match="index 1"):
        spectrum.Signal(samples=np.array([0.0, np.inf, 1.0]), fs=1.0)
    for fs in (0.0, -1.0, np.nan):
        with pytest.raises(ValueError):
            spectrum.Signal(samples=np.zeros(4), fs=fs)


def test_periodogram_set_validation():
    good = dict(
        values=np.ones((2, 3)), freqs=np.arange(3.0), fs=1.0, k=2, edof=4.0
    )
    spectrum.PeriodogramSet(**good)
    with pytest.raises(ValueError):
        spectrum.PeriodogramSet(**{**good, "values": np.ones(3)})
    with pytest.raises(ValueError):
        spectrum.PeriodogramSet(**{**good, "k": 3})
    with pytest.raises(ValueError):
        spectrum.PeriodogramSet(**{**good, "freqs": np.arange(2.0)})
    with pytest.raises(ValueError):
        spectrum.PeriodogramSet(**{**good, "values": -np.ones((2, 3))})
    for edof in (0.0, 4.5, -1.0):
        with pytest.raises(ValueError):
            spectrum.PeriodogramSet(**{**good, "edof": edof})


# ------------------------------------------------------------- periodograms


def test_modified_periodograms_shape_and_freqs():
    ps = make_periodograms(n=4096, n_seg=256, fs=2.0)
    assert ps.values.shape == (ps.k, 129)
    assert ps.k == 31
    np.testing.assert_allclose(ps.freqs, np.arange(129) * (2.0 / 256), rtol=1e-15)
    assert ps.freqs[-1] == pytest.approx(1.0)  # fs/2 for even segment length


def test_modified_periodograms_white_noise_level():
    # interior level of tapered white noise is sigma^2 / fs regardless of taper
    sig = mc.gen_white_noise(2**16, 1.5, mc.derive_stream_seed(5, 0, 0, 0), fs=2.0)
    est = spectrum.estimate_psd(sig.samples, 2.0, mean=True)
    level = est.psd[1:-1].mean()
    assert level == pytest.approx(1.5**2 / 2.0, rel=0.02)


def test_modified_periodograms_detrend_constant_signal():
    sig = spectrum.Signal(samples=np.full(512, 3.0), fs=1.0)
    plan = taper.plan_segments(512, 64, 0.5)
    tp = taper.normalize_energy(taper.make_taper("hann", 64))
    with_dc = spectrum.modified_periodograms(sig, plan, tp, detrend=False)
    assert with_dc.values[:, 0].min() > 1.0
    without = spectrum.modified_periodograms(sig, plan, tp, detrend=True)
    assert np.max(without.values) == pytest.approx(0.0, abs=1e-24)


def test_periodogram_parseval_single_rect_segment():
    # with a unit-energy rectangular taper and one segment the two-sided
    # periodogram integrates (sums) to the sample energy over fs
    rng = np.random.default_rng(7)
    n, fs = 64, 2.5
    x = rng.standard_normal(n)
    sig = spectrum.Signal(samples=x, fs=fs)
    plan = taper.plan_segments(n, n, 0.0)
    tp = taper.normalize_energy(taper.make_taper("rectangular", n))
    v = spectrum.modified_periodograms(sig, plan, tp).values[0]
    assembled = v[0] + v[-1] + 2.0 * v[1:-1].sum()
    assert assembled == pytest.approx(np.sum(x**2) / fs, rel=1e-12)


def test_modified_periodograms_match_manual_dft():
    rng = np.random.default_rng(9)
    n, fs = 8, 1.5
    y = rng.standard_normal(n)
    sig = spectrum.Signal(samples=y, fs=fs)
    plan = taper.plan_segments(n, n, 0.0)
    tp = taper.normalize_energy(taper.make_taper("hann", n))
    ps = spectrum.modified_periodograms(sig, plan, tp)
    w = tp.coefficients * y
    t = np.arange(n)
    manual = [
        abs(np.sum(w * np.exp(-2j * np.pi * j * t / n))) ** 2 / fs
        for j in range(n // 2 + 1)
    ]
    np.testing.assert_allclose(ps.values[0], manual, atol=1e-14)


def test_sine_lands_in_expected_bin():
    fs = 8.0
    t = np.arange(2048) / fs
    x = np.sin(2 * np.pi * 2.0 * t)
    est = spectrum.estimate_psd(x, fs, mean=True)
    assert int(np.argmax(est.psd)) == int(round(2.0 * 256 / fs))


def test_modified_periodograms_errors():
    rng = np.random.default_rng(0)
    sig = spectrum.Signal(samples=rng.standard_normal(64), fs=1.0)
    plan = taper.plan_segments(64, 16, 0.5)
    raw = taper.make_taper("hann", 16)
    with pytest.raises(ValueError, match="normalized"):
        spectrum.modified_periodograms(sig, plan, raw)
    wrong_len = taper.normalize_energy(taper.make_taper("hann", 8))
    with pytest.raises(ValueError, match="length"):
        spectrum.modified_periodograms(sig, plan, wrong_len)
    short = spectrum.Signal(samples=rng.standard_normal(10), fs=1.0)
    tp = taper.normalize_energy(raw)
    with pytest.raises(ValueError, match="samples"):
        spectrum.modified_periodograms(short, plan, tp)


# ---------------------------------------------------------------- estimates


def test_wosa_mean_fields_and_values():
    ps = make_periodograms()
    est = spectrum.wosa_mean(ps)
    np.testing.assert_allclose(est.psd, ps.values.mean(axis=0), rtol=1e-15)
    assert est.method == "mean"
    assert est.q is None and est.bias_method is None
    assert est.bias_factor == 1.0
    assert est.effective_k == float(ps.k)
    assert est.edof == ps.edof


def test_wp_estimate_single_segment_is_identity():
    # K=1: the quantile is the lone periodogram and the bias factor is 1
    rng = np.random.default_rng(9)
    sig = spectrum.Signal(samples=rng.standard_normal(8), fs=1.5)
    plan = taper.plan_segments(8, 8, 0.0)
    tp = taper.normalize_energy(taper.make_taper("hann", 8))
    ps = spectrum.modified_periodograms(sig, plan, tp)
    est = spectrum.wp_estimate(ps, 0.5)
    assert est.bias_factor == 1.0
    np.testing.assert_array_equal(est.psd, ps.values[0])


def test_wp_estimate_limit_method_scaling():
    ps = make_periodograms()
    est = spectrum.wp_estimate(ps, 0.5, bias_method="limit")
    raw = spectrum.quantiles_by_bin(ps.values, 0.5)
    np.testing.assert_allclose(est.psd * np.log(2.0), raw, rtol=1e-13)
    assert est.bias_factor == pytest.approx(np.log(2.0), rel=1e-15)


def test_wp_estimate_effective_k_rounding():
    ps = make_periodograms()  # edof/2 = 5.7264...
    rounded = spectrum.wp_estimate(ps, 0.5, bias_method="harmonic")
    assert rounded.effective_k == float(theory.round_half_away(ps.edof / 2.0))
    unrounded = spectrum.wp_estimate(ps, 0.5, bias_method="digamma")
    assert unrounded.effective_k == ps.edof / 2.0
    raw_k = spectrum.wp_estimate(ps, 0.5, use_edof=False)
    assert raw_k.effective_k == float(ps.k)


def test_wp_estimate_errors():
    ps = make_periodograms()
    with pytest.raises(ValueError, match="bias method"):
        spectrum.wp_estimate(ps, 0.5, bias_method="bogus")
    with pytest.raises(ValueError):
        spectrum.wp_estimate(ps, 1.2)
    # the alternating-series factor only exists at the median
    with pytest.raises(ValueError):
        spectrum.wp_estimate(ps, 0.6, bias_method="allen")


def test_estimate_psd_frozen_end_to_end():
    sig = mc.gen_white_noise(4096, 1.0, mc.derive_stream_seed(42, 0, 0, 0))
    est = spectrum.estimate_psd(sig.samples, 1.0)
    assert est.k == 31
    assert est.edof == pytest.approx(58.83673469387755, rel=1e-12)
    assert est.effective_k == 29.0
    assert est.bias_factor == pytest.approx(0.710091471024731, rel=1e-12)
    bias_db = 10 * np.log10(est.psd[1:-1].mean())
    assert bias_db == pytest.approx(0.08108700336543237, abs=1e-9)
    assert abs(bias_db) < 0.5
    assert est.psd[7] == pytest.approx(1.8441875874982785, rel=1e-9)


def test_estimate_psd_mean_ignores_quantile_settings():
    rng = np.random.default_rng(12)
    x = rng.standard_normal(2048)
    a = spectrum.estimate_psd(x, 1.0, mean=True)
    b = spectrum.estimate_psd(x, 1.0, mean=True, quantile=0.9, bias_method="limit")
    np.testing.assert_array_equal(a.psd, b.psd)
    assert a.method == b.method == "mean"


def test_one_sided_even_segment_length():
    ps = make_periodograms(n=4096, n_seg=256, fs=2.0)
    est = spectrum.wosa_mean(ps)
    folded = spectrum.one_sided(est)
    assert isinstance(folded, spectrum.PsdEstimate)
    np.testing.assert_allclose(folded.psd[1:-1], 2.0 * est.psd[1:-1], rtol=1e-15)
    assert folded.psd[0] == est.psd[0]
    assert folded.psd[-1] == est.psd[-1]  # Nyquist present: not doubled
    np.testing.assert_array_equal(folded.freqs, est.freqs)


def test_one_sided_odd_segment_length():
    ps = make_periodograms(n=1000, n_seg=255, fs=2.0)
    est = spectrum.wosa_mean(ps)
    assert est.freqs[-1] < est.fs / 2.0  # no Nyquist bin on the odd grid
    folded = spectrum.one_sided(est)
    np.testing.assert_allclose(folded.psd[1:], 2.0 * est.psd[1:], rtol=1e-15)
    assert folded.psd[0] == est.psd[0]
