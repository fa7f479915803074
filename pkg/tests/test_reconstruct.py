import numpy as np
import pytest
from scipy import signal as sps

from subnyq import (
    IllPosedError,
    NoiseModel,
    SamplingPattern,
    SpectralIndexSet,
    SpectralSupport,
    apply_noise,
    coset_decompose,
    design_filter,
    pseudo_inverse,
    reconstruct_frequency,
    reconstruct_time,
    sfs_pattern_search,
    spectral_index_from_support,
    synthesize,
)

FMAX = 5.0
T = 1.0 / FMAX
L = 32
M = 1024


@pytest.fixture(scope="module")
def clean_signal(three_band_spec):
    return synthesize(three_band_spec, T, M)


@pytest.fixture(scope="module")
def cells(three_band_spec):
    return spectral_index_from_support(three_band_spec.support(), L)


@pytest.fixture(scope="module")
def sfs_pattern(cells):
    return sfs_pattern_search(L, 12, cells, T=T).pattern


@pytest.fixture(scope="module")
def narrow_filter():
    return design_filter(L, 383)


class TestSpectralIndex:
    def test_two_band_example(self):
        F = SpectralSupport(((1.2, 2.2), (4.1, 4.5)), 5.0)
        k = spectral_index_from_support(F, 5)
        assert k.k == (1, 2, 4)
        assert k.q == 3

    def test_three_band_example(self, three_band_spec):
        k = spectral_index_from_support(three_band_spec.support(), 32)
        assert k.k == (4, 5, 6, 7, 8, 15, 16, 17, 24, 25, 26)
        assert k.q == 11

    def test_empty_support(self):
        k = spectral_index_from_support(SpectralSupport((), 5.0), 8)
        assert k.k == ()

    def test_band_ending_at_fmax_clamped(self):
        F = SpectralSupport(((3.0, 5.0),), 5.0)
        k = spectral_index_from_support(F, 5)
        assert k.k == (3, 4)

    def test_upper_edge_on_boundary_not_overcovered(self):
        # [1,2) with 5 unit cells touches only cell 1
        F = SpectralSupport(((1.0, 2.0),), 5.0)
        assert spectral_index_from_support(F, 5).k == (1,)

    def test_monotone_in_band_growth(self):
        small = SpectralSupport(((1.1, 1.9),), 8.0)
        large = SpectralSupport(((0.9, 2.3),), 8.0)
        ks = spectral_index_from_support(small, 16).k
        kl = spectral_index_from_support(large, 16).k
        assert set(ks) <= set(kl)

    def test_doubling_L_preserves_coverage(self, three_band_spec):
        F = three_band_spec.support()
        for L1 in (8, 16, 32):
            k1 = spectral_index_from_support(F, L1)
            k2 = spectral_index_from_support(F, 2 * L1)
            cover1 = {(c * F.f_max / L1, (c + 1) * F.f_max / L1) for c in k1.k}
            # every fine cell lies inside some coarse covered cell
            for c in k2.k:
                lo = c * F.f_max / (2 * L1)
                hi = (c + 1) * F.f_max / (2 * L1)
                assert any(a - 1e-12 <= lo and hi <= b + 1e-12 for a, b in cover1)


class TestDesignFilter:
    def test_ripples_and_dc_gain(self):
        filt = design_filter(32, 383)
        hr = filt.taps * np.exp(-1j * np.pi * np.arange(383) / 32)
        assert abs(np.sum(hr.real) - 1.0) <= 0.02
        assert filt.achieved_passband_ripple <= 0.02 * 1.1
        assert filt.achieved_stopband_ripple <= 0.008 * 1.1
        assert filt.meets_spec

    def test_passband_center_at_half_cutoff(self):
        filt = design_filter(16, 255)
        w = np.array([0.0, 1.0 / 32, 1.0 / 16])  # lower edge, center, upper edge
        _, H = sps.freqz(filt.taps, worN=w * 2 * np.pi)
        assert abs(H[1]) == pytest.approx(1.0, abs=0.03)
        assert abs(H[0]) == pytest.approx(0.5, abs=0.1)
        assert abs(H[2]) == pytest.approx(0.5, abs=0.1)

    def test_inside_transition_is_dead_at_edges(self):
        filt = design_filter(16, 513, stopband_ripple=1e-3, transition="inside")
        w = np.array([0.0, 1.0 / 32, 1.0 / 16])
        _, H = sps.freqz(filt.taps, worN=w * 2 * np.pi)
        assert abs(H[1]) == pytest.approx(1.0, abs=0.03)
        assert abs(H[0]) <= 2e-3
        assert abs(H[2]) <= 2e-3

    def test_unachievable_target_flags_best_effort(self):
        filt = design_filter(8, 9, passband_ripple=1e-4, stopband_ripple=1e-4)
        assert not filt.meets_spec

    def test_too_few_taps_rejected(self):
        with pytest.raises(ValueError):
            design_filter(8, 2)


class TestPseudoInverse:
    def test_square_inverse(self):
        rng = np.random.default_rng(1)
        A = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        assert np.allclose(A @ pseudo_inverse(A), np.eye(6), atol=1e-10)

    def test_tall_left_inverse(self):
        rng = np.random.default_rng(2)
        A = rng.standard_normal((8, 3)) + 1j * rng.standard_normal((8, 3))
        assert np.allclose(pseudo_inverse(A) @ A, np.eye(3), atol=1e-10)

    def test_rank_one_ones(self):
        A = np.ones((2, 2))
        assert np.allclose(pseudo_inverse(A), np.full((2, 2), 0.25))

    def test_moore_penrose_identities(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            m = int(rng.integers(1, 65))
            n = int(rng.integers(1, 65))
            A = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
            P = pseudo_inverse(A)
            s = np.linalg.norm(A)
            assert np.linalg.norm(A @ P @ A - A) <= 1e-9 * s
            assert np.linalg.norm(P @ A @ P - P) <= 1e-9 * np.linalg.norm(P)
            assert np.linalg.norm((A @ P) - (A @ P).conj().T) <= 1e-9
            assert np.linalg.norm((P @ A) - (P @ A).conj().T) <= 1e-9


class TestReconstructTime:
    def test_noiseless_quality(self, clean_signal, cells, sfs_pattern, narrow_filter):
        streams = coset_decompose(clean_signal, sfs_pattern)
        rep = reconstruct_time(streams, cells, narrow_filter, reference=clean_signal)
        assert rep.rmse <= 0.03
        assert np.isfinite(rep.cond)

    def test_quantizer_sensitivity_scales_with_cond(
        self, clean_signal, cells, sfs_pattern, narrow_filter
    ):
        noisy = apply_noise(clean_signal, NoiseModel.quantizer(8, 1.2))
        rep_good = reconstruct_time(
            coset_decompose(noisy, sfs_pattern), cells, narrow_filter, reference=clean_signal
        )
        bunch = SamplingPattern(L, tuple(range(1, 13)), T)
        rep_bad = reconstruct_time(
            coset_decompose(noisy, bunch), cells, narrow_filter, reference=clean_signal
        )
        assert rep_good.rmse <= 0.05
        assert rep_bad.cond == pytest.approx(128.0, rel=0.02)
        assert rep_bad.rmse >= 5.0 * rep_good.rmse

    def test_zero_input_zero_output(self, cells, sfs_pattern, narrow_filter):
        from subnyq import TimeSeries

        zero = TimeSeries(np.zeros(M, dtype=complex), T)
        rep = reconstruct_time(
            coset_decompose(zero, sfs_pattern), cells, narrow_filter, reference=zero
        )
        assert np.allclose(rep.x_rec.samples, 0.0)
        assert rep.rmse == 0.0

    def test_linearity(self, three_band_spec, cells, sfs_pattern, narrow_filter):
        from subnyq import MultibandSignalSpec

        spec_a = MultibandSignalSpec(three_band_spec.bands[:1], FMAX)
        spec_b = MultibandSignalSpec(three_band_spec.bands[1:], FMAX)
        xa = synthesize(spec_a, T, M)
        xb = synthesize(spec_b, T, M)
        ra = reconstruct_time(coset_decompose(xa, sfs_pattern), cells, narrow_filter)
        rb = reconstruct_time(coset_decompose(xb, sfs_pattern), cells, narrow_filter)
        from subnyq import TimeSeries

        xs = TimeSeries(xa.samples + xb.samples, T)
        rs = reconstruct_time(coset_decompose(xs, sfs_pattern), cells, narrow_filter)
        assert np.allclose(
            rs.x_rec.samples, ra.x_rec.samples + rb.x_rec.samples, atol=1e-10
        )

    def test_rank_deficient_combination_rejected(self, narrow_filter):
        pat = SamplingPattern(16, (1, 5, 7, 11, 15), 1.0)
        k = SpectralIndexSet((3, 4, 5, 10, 11), 16)
        from subnyq import TimeSeries

        x = TimeSeries(np.ones(160, dtype=complex), 1.0)
        filt = design_filter(16, 129)
        with pytest.raises(IllPosedError):
            reconstruct_time(coset_decompose(x, pat), k, filt)

    def test_too_many_cells_rejected(self, narrow_filter):
        from subnyq import TimeSeries

        pat = SamplingPattern(8, (0, 3), 1.0)
        x = TimeSeries(np.ones(64, dtype=complex), 1.0)
        with pytest.raises(IllPosedError):
            reconstruct_time(
                coset_decompose(x, pat), SpectralIndexSet((0, 1, 2), 8), design_filter(8, 65)
            )


class TestReconstructFrequency:
    def test_full_pattern_exact_slicing(self, clean_signal):
        pat = SamplingPattern(L, tuple(range(L)), T)
        streams = coset_decompose(clean_signal, pat)
        fr = reconstruct_frequency(streams, SpectralIndexSet(tuple(range(L)), L))
        X = np.fft.fft(clean_signal.samples)
        nb = M // L
        for row, cell in enumerate(fr.k.k):
            assert np.allclose(fr.cell_spectra[row], X[cell * nb : (cell + 1) * nb], atol=1e-8)

    def test_single_cell_matches_dft_slice(self):
        fmax = 8.0
        from subnyq import BandSpec, MultibandSignalSpec

        spec = MultibandSignalSpec((BandSpec(1.0, 0.8, 16.0, 4.5),), fmax)
        x = synthesize(spec, 1 / fmax, 256)
        k = spectral_index_from_support(spec.support(), 8)
        pat = sfs_pattern_search(8, 3, k, T=1 / fmax).pattern
        fr = reconstruct_frequency(coset_decompose(x, pat), k)
        X = np.fft.fft(x.samples)
        nb = 256 // 8
        for row, cell in enumerate(k.k):
            ref = X[cell * nb : (cell + 1) * nb]
            err = np.linalg.norm(fr.cell_spectra[row] - ref) / np.linalg.norm(ref)
            assert err < 0.05

    def test_against_time_domain(self, clean_signal, cells, sfs_pattern, narrow_filter):
        streams = coset_decompose(clean_signal, sfs_pattern)
        fr = reconstruct_frequency(streams, cells)
        rep = reconstruct_time(streams, cells, narrow_filter, reference=clean_signal)
        # compare recovered spectra on high-energy bins away from cell edges,
        # where the interpolation filter transition does not bite
        full_freq = fr.assemble_full_spectrum(M)
        full_time = np.fft.fft(rep.x_rec.samples)
        nb = M // L
        edge = max(int(np.ceil(narrow_filter.transition_width * M / 2)), 1)
        mask = np.zeros(M, dtype=bool)
        for cell in cells.k:
            mask[cell * nb + edge : (cell + 1) * nb - edge] = True
        mask &= np.abs(full_freq) > 0.05 * np.abs(full_freq).max()
        assert mask.sum() > 50
        rel = np.abs(full_time[mask] - full_freq[mask]) / np.abs(full_freq[mask])
        assert float(np.median(rel)) < 0.05
