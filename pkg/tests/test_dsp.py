import numpy as np
import pytest

from cvqkdsim.dsp import (ComplexSymbolBlock, FirFilter, SampledSignal,
                          convolve, downsample, frequency_response,
                          generate_symbols, rrc_filter, super_gaussian_lpf,
                          truncate_taps, truncated_rrc, upsample)


class TestGenerateSymbols:
    def test_mean_power_tracks_target(self):
        block = generate_symbols(100_000, 6.0, seed=1)
        assert block.mean_power == pytest.approx(6.0, rel=0.02)

    def test_zero_mean(self):
        block = generate_symbols(100_000, 6.0, seed=1)
        assert abs(np.mean(block.symbols)) < 0.05

    def test_quadrature_split(self):
        block = generate_symbols(200_000, 4.0, seed=2)
        assert np.var(block.symbols.real) == pytest.approx(2.0, rel=0.03)
        assert np.var(block.symbols.imag) == pytest.approx(2.0, rel=0.03)

    def test_deterministic_for_fixed_seed(self):
        one = generate_symbols(1, 6.0, seed=7)
        two = generate_symbols(1, 6.0, seed=7)
        assert one.symbols[0] == two.symbols[0]

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            generate_symbols(0, 6.0, seed=0)
        with pytest.raises(ValueError):
            generate_symbols(10, 0.0, seed=0)
        with pytest.raises(ValueError):
            generate_symbols(10, -1.0, seed=0)


class TestResampling:
    def test_upsample_zero_stuffing(self):
        out = upsample(ComplexSymbolBlock(np.array([1.0 + 0j])), sps=4)
        np.testing.assert_array_equal(out.samples, [1, 0, 0, 0])

    def test_upsample_two_symbols(self):
        out = upsample(ComplexSymbolBlock(np.array([2.0, 3.0])), sps=2)
        np.testing.assert_array_equal(out.samples, [2, 0, 3, 0])

    def test_upsample_identity(self):
        out = upsample(ComplexSymbolBlock(np.array([5.0 + 1j])), sps=1)
        np.testing.assert_array_equal(out.samples, [5.0 + 1j])

    def test_upsample_rejects_bad_sps(self):
        with pytest.raises(ValueError):
            upsample(ComplexSymbolBlock(np.array([1.0])), sps=0)

    def test_downsample_phase_zero(self):
        block = downsample(SampledSignal(np.array([1.0, 2.0, 3.0, 4.0])), 4, 0)
        np.testing.assert_array_equal(block.symbols, [1.0])

    def test_downsample_phase_one(self):
        block = downsample(SampledSignal(np.array([1.0, 2.0, 3.0, 4.0])), 2, 1)
        np.testing.assert_array_equal(block.symbols, [2.0, 4.0])

    def test_round_trip(self):
        orig = generate_symbols(64, 2.0, seed=3)
        back = downsample(upsample(orig, 4), 4, 0)
        np.testing.assert_array_equal(back.symbols, orig.symbols)

    def test_downsample_rejects_bad_phase(self):
        with pytest.raises(ValueError):
            downsample(SampledSignal(np.array([1.0, 2.0])), 2, 2)
        with pytest.raises(ValueError):
            downsample(SampledSignal(np.array([1.0, 2.0])), 2, -1)


class TestConvolve:
    def test_impulse_response(self):
        out = convolve(SampledSignal(np.array([1.0, 0.0, 0.0])),
                       FirFilter(np.array([2.0, 5.0])))
        np.testing.assert_allclose(out.samples, [2.0, 5.0, 0.0, 0.0], atol=1e-12)

    def test_identity_filter(self):
        out = convolve(SampledSignal(np.array([3.0 + 1j])), FirFilter(np.array([1.0])))
        np.testing.assert_allclose(out.samples, [3.0 + 1j], atol=1e-12)

    def test_commutativity(self):
        rng = np.random.default_rng(0)
        sig = rng.normal(size=17)
        taps = rng.normal(size=9)
        left = convolve(SampledSignal(sig), FirFilter(taps)).samples
        right = convolve(SampledSignal(taps), FirFilter(sig)).samples
        np.testing.assert_allclose(left, right, atol=1e-12)

    def test_empty_input(self):
        out = convolve(SampledSignal(np.zeros(0)), FirFilter(np.array([1.0, 2.0])))
        assert len(out) == 0

    def test_linearity(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            n = rng.integers(2, 64)
            m = rng.integers(1, 64)
            s1, s2 = rng.normal(size=n), rng.normal(size=n)
            h = FirFilter(rng.normal(size=m))
            alpha, beta = rng.normal(), rng.normal()
            combined = convolve(SampledSignal(alpha * s1 + beta * s2), h).samples
            separate = (alpha * convolve(SampledSignal(s1), h).samples
                        + beta * convolve(SampledSignal(s2), h).samples)
            np.testing.assert_allclose(combined, separate, atol=1e-10)

    def test_parseval_on_impulse(self):
        rng = np.random.default_rng(2)
        taps = rng.normal(size=33)
        impulse = np.zeros(1)
        impulse[0] = 1.0
        out = convolve(SampledSignal(impulse), FirFilter(taps)).samples
        assert np.sum(np.abs(out) ** 2) == pytest.approx(np.sum(taps**2), abs=1e-12)


def _cascade_isi(h: FirFilter, sps: int) -> tuple[float, float]:
    z = np.convolve(h.taps, h.taps)
    delay = int(np.argmax(np.abs(z)))
    c0_sq = z[delay] ** 2
    isi = sum(z[delay + j * sps] ** 2
              for j in range(-len(z) // sps - 1, len(z) // sps + 1)
              if j != 0 and 0 <= delay + j * sps < len(z))
    return c0_sq, isi


class TestRrcFilter:
    def test_unit_energy(self):
        for rolloff in (0.1, 0.2, 0.5, 1.0):
            h = rrc_filter(rolloff, 50, 4)
            assert np.sum(h.taps**2) == pytest.approx(1.0, abs=1e-9)

    def test_symmetry(self):
        h = rrc_filter(0.2, 50, 4)
        np.testing.assert_allclose(h.taps, h.taps[::-1], atol=1e-12)

    @pytest.mark.parametrize("rolloff", [0.1, 0.2, 0.5])
    def test_matched_cascade_is_nyquist(self, rolloff):
        h = rrc_filter(rolloff, 50, 4)
        c0_sq, isi = _cascade_isi(h, 4)
        assert c0_sq > 0.999
        assert isi < 1e-3

    def test_expected_length(self):
        assert len(rrc_filter(0.2, 50, 4)) == 201

    def test_rejects_bad_rolloff(self):
        for rolloff in (0.0, -0.2, 1.5):
            with pytest.raises(ValueError):
                rrc_filter(rolloff, 10, 4)

    def test_truncation_keeps_unit_energy(self):
        short = truncated_rrc(11)
        assert np.sum(short.taps**2) == pytest.approx(1.0, abs=1e-12)
        assert len(short) == 11

    def test_truncate_taps_bounds(self):
        h = rrc_filter(0.2, 10, 4)
        with pytest.raises(ValueError):
            truncate_taps(h, len(h) + 1)


class TestSuperGaussianLpf:
    def test_half_power_at_design_bandwidth(self):
        h = super_gaussian_lpf(order=4, bandwidth_norm=0.75, num_taps=257, sps=4)
        power = np.abs(frequency_response(h, 0.75, 4)[0]) ** 2
        assert 0.48 <= power <= 0.52

    def test_unit_dc_gain(self):
        h = super_gaussian_lpf()
        assert abs(frequency_response(h, 0.0, 4)[0]) == pytest.approx(1.0, abs=1e-3)

    def test_stopband_rejection(self):
        h = super_gaussian_lpf(order=4, bandwidth_norm=0.75, num_taps=257, sps=4)
        level_db = 20 * np.log10(abs(frequency_response(h, 1.5, 4)[0]))
        assert level_db < -24.0
        # the analytic target at 1.5R is essentially minus infinity
        analytic_db = 20 * np.log10(np.exp(-(np.log(2) / 2) * 2.0**8))
        assert analytic_db < -700.0

    def test_symmetric_taps(self):
        h = super_gaussian_lpf()
        np.testing.assert_allclose(h.taps, h.taps[::-1], atol=1e-12)

    def test_rejects_even_length(self):
        with pytest.raises(ValueError):
            super_gaussian_lpf(num_taps=256)


class TestTypeInvariants:
    def test_fir_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            FirFilter(np.array([1.0, np.nan]))

    def test_fir_normalized_flag_enforced(self):
        with pytest.raises(ValueError):
            FirFilter(np.array([2.0, 1.0]), normalized=True)

    def test_signal_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            SampledSignal(np.array([1.0, np.inf]))

    def test_signal_rejects_bad_sps(self):
        with pytest.raises(ValueError):
            SampledSignal(np.array([1.0]), sps=0)
