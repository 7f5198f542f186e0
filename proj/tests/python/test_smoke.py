import math

import numpy as np
import pytest

import nvcharge


def test_stationary_population():
    assert round(nvcharge.stationary_population(0.5, 11.0), 4) == 0.9565


def test_trace_simulation_and_fit():
    params = nvcharge.TelegraphParams(0.5, 11.0, 2.0e4, 1.0e3)
    trace = nvcharge.simulate_trace(params, 200.0, 0.01, seed=5)
    assert len(trace) == 20000
    assert trace.counts.dtype == np.int64
    again = nvcharge.simulate_trace(params, 200.0, 0.01, seed=5)
    assert np.array_equal(trace.counts, again.counts)
    fit = nvcharge.fit_trace(trace)
    assert fit.converged
    assert abs(fit.params.k_rec - 11.0) < 4 * fit.sigma.k_rec


def test_count_distribution_is_normalized():
    params = nvcharge.TelegraphParams(0.5, 11.0, 2.0e4, 1.0e3)
    p = nvcharge.count_distribution(params, 0.01)
    assert p.sum() == pytest.approx(1.0, abs=1e-6)
    assert np.all(p >= 0)


def test_invalid_parameters_raise():
    with pytest.raises(nvcharge.InvalidParameter):
        nvcharge.TelegraphParams(-1.0, 11.0, 2.0e4, 1.0e3)
    with pytest.raises(nvcharge.NvchargeError):
        nvcharge.stationary_population(0.0, 0.0)
    with pytest.raises(nvcharge.DomainError):
        nvcharge.screening_length(0.0, nvcharge.ScreeningParams())


def test_power_laws():
    powers = [50e-9 * i for i in range(1, 9)]
    rates = [7.4e7 * p for p in powers]
    sigmas = [0.1 * r for r in rates]
    cmp = nvcharge.compare_recombination_models(powers, rates, sigmas)
    assert cmp.selected == "linear"
    k = [nvcharge.ionization_law(p, 2e13, 4.5e-6) for p in powers]
    fit = nvcharge.fit_ionization(powers, k, [0.05 * x for x in k], saturation_power=4.5e-6)
    assert fit.saturation_fixed
    assert fit.a == pytest.approx(2e13, rel=1e-9)


def test_dopant_rate_is_linear_at_low_power():
    low = nvcharge.recombination_rate(1e-9)
    assert low > 0
    assert nvcharge.recombination_rate(2e-9) / low == pytest.approx(2.0, rel=1e-3)
    assert nvcharge.recombination_rate(0.0) == 0.0


def test_ple_round_trip():
    peaks = [nvcharge.LorentzPeak(0.0, 1e9, 2e4)]
    scans = nvcharge.simulate_ple_repetitions(-5e9, 5e9, 101, 0.05, 148e-9, peaks, 1e3,
                                              0.5 / 148e-9, 11.0, 20, seed=3)
    avg = nvcharge.average_spectra(scans)
    assert avg.n_repetitions == 20
    fit = nvcharge.fit_multi_lorentz(avg, 1)
    assert fit.peaks[0].fwhm == pytest.approx(1e9, rel=0.1)
    assert fit.peaks[0].area == pytest.approx(math.pi / 2 * fit.peaks[0].amplitude * fit.peaks[0].fwhm)
    shifted = nvcharge.PLESpectrum(list(avg.detunings + 1.0e6), list(avg.intensities))
    with pytest.raises(nvcharge.AlignmentError):
        nvcharge.average_spectra([avg, shifted])


def test_screening_plateau():
    params = nvcharge.ScreeningParams()
    r = nvcharge.field_insensitive_range(params, 0.5)
    assert r.n_lo < r.n_max < r.n_hi
    assert math.log10(r.n_hi / r.n_lo) > 2
    assert nvcharge.screening_length(64e16, params) / nvcharge.screening_length(1e16, params) == \
        pytest.approx(0.5, rel=1e-12)
