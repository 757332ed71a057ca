""" Tests for the least-squares fitters and their recovery of synthetic truth. """
from typing import Callable

import numpy as np
import pytest

from smpd.common import FitError
from smpd.common.config import load_config
from smpd.common.constants import TWO_PI
from smpd.common.types.squid_model import SquidModelKind
from smpd.common.types.thermal_branch import ThermalBranch
from smpd.core.occupation import bose_einstein
from smpd.calib.fit import FitResult, fit_4wm_map, fit_exponential_decay, fit_line, fit_lorentzian, \
    fit_squid_tuning, fit_thermal_model
from smpd.calib.tuning import FourWaveMixingSurface, SquidTuningModel, reflection_magnitude, synthetic_map


DEFAULTS = load_config(environ={})
TRIALS = 200

CENTER = 7.72e9
FREQUENCY = CENTER + np.linspace(-1e6, 1e6, 201)
# Coupling and internal rates of a 170 kHz wide dip.
KAPPA_C = TWO_PI * 120e3
KAPPA_I = TWO_PI * 50e3

TEMPERATURES = np.linspace(0.010, 0.090, 9)


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def _coverage(trial: Callable[[np.random.Generator], FitResult], truth: dict[str, float]) -> dict[str, float]:
    """ Share of seeded trials with the truth within 3σ, per parameter. """
    hits = {name: 0 for name in truth}
    for seed in range(TRIALS):
        result = trial(_rng(seed))
        for name, value in truth.items():
            if result.success and result.within(name, value):
                hits[name] += 1
    return {name: count / TRIALS for name, count in hits.items()}


def _dip(rng: np.random.Generator, noise: float = 0.01) -> np.ndarray:
    clean = reflection_magnitude(FREQUENCY, CENTER, KAPPA_I, KAPPA_C)
    return clean + rng.normal(0.0, noise, size=clean.shape)


def _rates(rng: np.random.Generator, omega: float, rate_0: float, k: float) -> tuple[list, np.ndarray]:
    truth = np.array([rate_0 + k * bose_einstein(omega, t) for t in TEMPERATURES])
    sigma = 0.05 * truth
    rates = truth + rng.normal(0.0, sigma)
    return list(zip(TEMPERATURES, rates)), sigma


def _decay_counts(rng: np.random.Generator, amplitude: float = 1000.0) -> tuple[np.ndarray, np.ndarray]:
    times = (np.arange(160) + 0.5) * 50e-6
    expected = amplitude * np.exp(-times / 1.24e-3) + 5.0
    return times, rng.poisson(expected).astype(np.float64)


class TestFitResult:
    """ Tests for the FitResult container. """

    def test_lookup(self):
        """ Values and derived quantities share one namespace. """
        result = FitResult(values={'rate': 800.0}, errors={'rate': 10.0, 'lifetime': 1e-5},
                           residual_norm=1.0, success=True, n_iterations=3, derived={'lifetime': 1.25e-3})
        assert result['rate'] == 800.0
        assert result['lifetime'] == 1.25e-3
        assert 'lifetime' in result
        assert 'area' not in result
        assert result.within('rate', 825.0)
        assert not result.within('rate', 850.0)
        assert np.isnan(result.error('area'))


class TestLorentzian:
    """ Tests for the resonance fit. """

    def test_noiseless(self):
        """ Noise-free data is recovered to solver tolerance. """
        result = fit_lorentzian(FREQUENCY, reflection_magnitude(FREQUENCY, CENTER, KAPPA_I, KAPPA_C))

        assert result.success
        assert result['center'] == pytest.approx(CENTER, abs=1.0)
        assert result['fwhm'] == pytest.approx(170e3, rel=1e-6)
        assert result['baseline'] == pytest.approx(1.0, rel=1e-6)
        assert result['kappa'] == pytest.approx(KAPPA_C + KAPPA_I, rel=1e-6)
        assert result['kappa_c'] == pytest.approx(KAPPA_C, rel=1e-4)
        assert result['kappa_i'] == pytest.approx(KAPPA_I, rel=1e-4)

    def test_undercoupled(self):
        """ The larger rate is internal for an undercoupled resonator. """
        result = fit_lorentzian(FREQUENCY, reflection_magnitude(FREQUENCY, CENTER, KAPPA_I, KAPPA_C),
                                overcoupled=False)
        assert result['kappa_i'] == pytest.approx(KAPPA_C, rel=1e-4)

    def test_noisy(self):
        """ 1% noise recovers the center within 1 kHz. """
        result = fit_lorentzian(FREQUENCY, _dip(_rng(7)))

        assert result.success
        assert abs(result['center'] - CENTER) < 1e3
        assert result['fwhm'] == pytest.approx(170e3, rel=0.03)

    def test_unsorted_with_sigma(self):
        """ Sample order does not matter, known uncertainties are absolute. """
        rng = _rng(3)
        order = rng.permutation(len(FREQUENCY))
        magnitude = _dip(rng)
        result = fit_lorentzian(FREQUENCY[order], magnitude[order], sigma=np.full(len(FREQUENCY), 0.01))
        reference = fit_lorentzian(FREQUENCY, magnitude)

        assert result['center'] == pytest.approx(reference['center'], abs=1.0)
        assert result.error('center') > 0

    def test_degenerate(self):
        """ Flat data or a too narrow span fail without raising. """
        assert not fit_lorentzian(FREQUENCY, np.ones_like(FREQUENCY)).success

        narrow = CENTER + np.linspace(-20e3, 20e3, 41)
        assert not fit_lorentzian(narrow, reflection_magnitude(narrow, CENTER, KAPPA_I, KAPPA_C)).success

    def test_invalid(self):
        """ Unusable input raises FitError. """
        with pytest.raises(FitError):
            fit_lorentzian(FREQUENCY[:7], np.ones(7))
        with pytest.raises(FitError):
            fit_lorentzian(FREQUENCY, np.ones(10))
        with pytest.raises(FitError):
            fit_lorentzian(FREQUENCY, np.full(len(FREQUENCY), np.nan))
        with pytest.raises(FitError):
            fit_lorentzian(FREQUENCY, np.ones_like(FREQUENCY), sigma=np.zeros_like(FREQUENCY))

    @pytest.mark.slow
    def test_recovery(self):
        """ Truth within 3σ in at least 95% of the trials. """
        truth = {'center': CENTER, 'fwhm': 170e3}
        coverage = _coverage(lambda rng: fit_lorentzian(FREQUENCY, _dip(rng)), truth)
        for name, share in coverage.items():
            assert share >= 0.95, name


class TestSquidTuning:
    """ Tests for the tuning curve fits. """

    phi = np.linspace(-0.5, 0.5, 41)

    def test_sinusoid(self):
        """ Amplitude within 1%, extrema and junction ratio derived. """
        mean, amplitude = TWO_PI * 7.5e9, TWO_PI * 0.3e9
        omega = mean + amplitude * np.cos(TWO_PI * (self.phi - 0.03))
        omega = omega + _rng(1).normal(0.0, 1e-3 * amplitude, size=omega.shape)

        result = fit_squid_tuning(self.phi, omega)

        assert result.success
        assert result['amplitude'] == pytest.approx(amplitude, rel=0.01)
        assert result['flux_offset'] == pytest.approx(0.03, abs=1e-3)
        assert result['omega_max'] == pytest.approx(mean + amplitude, rel=1e-4)
        model = SquidTuningModel.from_sinusoid(result['mean'], result['amplitude'])
        assert result['asymmetry'] == pytest.approx(model.asymmetry)
        assert result['junction_ratio'] > 1.0

    def test_exact(self):
        """ ω_max within 0.1% from noisy samples of the exact model. """
        truth = SquidTuningModel(omega_max=TWO_PI * 8.0e9, asymmetry=0.3, flux_offset=-0.05)
        omega = truth.frequency(self.phi)
        omega = omega + _rng(2).normal(0.0, 1e-4 * truth.omega_max, size=omega.shape)

        result = fit_squid_tuning(self.phi, omega, kind=SquidModelKind.SQUID_EXACT)

        assert result.success
        assert result['omega_max'] == pytest.approx(truth.omega_max, rel=1e-3)
        assert result['asymmetry'] == pytest.approx(0.3, abs=0.01)
        assert result['flux_offset'] == pytest.approx(-0.05, abs=1e-3)

    def test_fixed_asymmetry(self):
        """ A fixed asymmetry is reported without uncertainty. """
        truth = SquidTuningModel(omega_max=TWO_PI * 8.0e9, asymmetry=0.875)
        result = fit_squid_tuning(self.phi, truth.frequency(self.phi), kind=SquidModelKind.SQUID_EXACT,
                                  fixed_asymmetry=0.875)

        assert result['asymmetry'] == 0.875
        assert result.error('asymmetry') == 0.0
        assert result['junction_ratio'] == pytest.approx(15.0)
        assert result['omega_max'] == pytest.approx(truth.omega_max, rel=1e-9)

    def test_invalid(self):
        """ Too few or mismatched samples raise FitError. """
        with pytest.raises(FitError):
            fit_squid_tuning(self.phi[:3], self.phi[:3])
        with pytest.raises(FitError):
            fit_squid_tuning(self.phi, self.phi[:10])

    @pytest.mark.slow
    def test_recovery(self):
        """ Sinusoid and exact model cover the truth in at least 95% of the trials. """
        mean, amplitude = TWO_PI * 7.5e9, TWO_PI * 0.3e9

        def _sinusoid(rng: np.random.Generator) -> FitResult:
            omega = mean + amplitude * np.cos(TWO_PI * (self.phi - 0.03))
            return fit_squid_tuning(self.phi, omega + rng.normal(0.0, 1e-3 * amplitude, size=omega.shape))

        coverage = _coverage(_sinusoid, {'mean': mean, 'amplitude': amplitude, 'flux_offset': 0.03})
        for name, share in coverage.items():
            assert share >= 0.95, name

        truth = SquidTuningModel(omega_max=TWO_PI * 8.0e9, asymmetry=0.3)

        def _exact(rng: np.random.Generator) -> FitResult:
            omega = truth.frequency(self.phi)
            omega = omega + rng.normal(0.0, 1e-4 * truth.omega_max, size=omega.shape)
            return fit_squid_tuning(self.phi, omega, kind=SquidModelKind.SQUID_EXACT)

        coverage = _coverage(_exact, {'omega_max': truth.omega_max, 'asymmetry': 0.3})
        for name, share in coverage.items():
            assert share >= 0.95, name


class TestFourWaveMixingMap:
    """ Tests for the conversion map fit. """

    device = DEFAULTS.device
    surface = FourWaveMixingSurface.from_device(device, DEFAULTS.tuning)

    def _axes(self, points: int) -> tuple[np.ndarray, np.ndarray]:
        omega_p = self.surface.omega_4wm + np.linspace(-TWO_PI * 3e6, TWO_PI * 3e6, points)
        omega = self.device.omega_b + np.linspace(-TWO_PI * 300e3, TWO_PI * 300e3, points)
        return omega_p, omega

    def test_noiseless(self):
        """ The linewidths and the cooperativity of a clean map. """
        omega_p, omega = self._axes(21)
        result = fit_4wm_map(synthetic_map(self.surface, omega_p, omega, amplitude=0.8, baseline=0.01))

        assert result.success
        assert result['cooperativity'] == pytest.approx(1.0, rel=1e-3)
        assert result['kappa_b'] == pytest.approx(self.device.kappa_b, rel=1e-3)
        assert result['kappa_w'] == pytest.approx(self.device.kappa_w, rel=1e-3)
        assert result['omega_b'] == pytest.approx(self.device.omega_b, rel=1e-10)
        assert result['amplitude'] == pytest.approx(0.8, rel=1e-3)

    def test_amplitude_scaling(self):
        """ A free amplitude makes the fit invariant under scaling of the map. """
        omega_p, omega = self._axes(21)
        surface = FourWaveMixingSurface.from_device(self.device, DEFAULTS.tuning.with_cooperativity(self.device, 2.5))
        fwm_map = synthetic_map(surface, omega_p, omega, amplitude=0.6, baseline=0.02, noise=0.02, rng=_rng(4))

        result = fit_4wm_map(fwm_map)
        scaled = fit_4wm_map(fwm_map.scaled(0.5))

        assert scaled['cooperativity'] == pytest.approx(result['cooperativity'], rel=1e-6)
        assert scaled['kappa_b'] == pytest.approx(result['kappa_b'], rel=1e-6)
        assert scaled['amplitude'] == pytest.approx(0.5 * result['amplitude'], rel=1e-6)

    def test_no_ridge(self):
        """ Pure noise fails without raising. """
        omega_p, omega = self._axes(11)
        flat = synthetic_map(self.surface, omega_p, omega, amplitude=0.0, baseline=0.1)
        assert not fit_4wm_map(flat).success

    def test_invalid(self):
        """ Too small grids raise FitError. """
        omega_p, omega = self._axes(4)
        with pytest.raises(FitError):
            fit_4wm_map(synthetic_map(self.surface, omega_p, omega))

    @pytest.mark.slow
    def test_recovery(self):
        """ Cooperativity and linewidths within 3σ in at least 95% of the trials. """
        omega_p, omega = self._axes(21)

        def _trial(rng: np.random.Generator) -> FitResult:
            return fit_4wm_map(synthetic_map(self.surface, omega_p, omega, amplitude=0.8, baseline=0.01,
                                             noise=0.02, rng=rng))

        truth = {'cooperativity': 1.0, 'kappa_b': self.device.kappa_b, 'kappa_w': self.device.kappa_w}
        coverage = _coverage(_trial, truth)
        for name, share in coverage.items():
            assert share >= 0.95, name


class TestLine:
    """ Tests for the linear fit. """

    def test_exact_line(self):
        """ A line without noise. """
        result = fit_line([0.0, 1.0, 2.0, 3.0], [1.0, 3.0, 5.0, 7.0])
        assert result.success
        assert result['intercept'] == pytest.approx(1.0)
        assert result['slope'] == pytest.approx(2.0)
        assert result.error('slope') == pytest.approx(0.0, abs=1e-9)

    def test_weights(self):
        """ Known uncertainties are absolute. """
        result = fit_line([0.0, 1.0, 2.0], [0.0, 1.0, 2.0], sigma=[0.1, 0.1, 0.1])
        assert result.error('intercept') > 0.05

    def test_degenerate(self):
        """ A constant abscissa fails, too few points raise. """
        assert not fit_line([1.0, 1.0, 1.0], [1.0, 2.0, 3.0]).success
        with pytest.raises(FitError):
            fit_line([1.0, 2.0], [1.0, 2.0])
        with pytest.raises(FitError):
            fit_line([1.0, 2.0, 3.0], [1.0, 2.0, 3.0], sigma=[0.1, 0.0, 0.1])


class TestThermalModel:
    """ Tests for the rate versus temperature fits. """

    def test_thermal_branch(self):
        """ (31 s⁻¹, 2·10⁵ s⁻¹) recovered within 10% from 5% noise. """
        points, sigma = _rates(_rng(11), DEFAULTS.device.omega_b, 31.0, 2e5)
        result = fit_thermal_model(points, ThermalBranch.THERMAL, DEFAULTS.device.omega_b, sigma)

        assert result.success
        assert result['rate_0'] == pytest.approx(31.0, rel=0.1)
        assert result['k'] == pytest.approx(2e5, rel=0.1)
        assert result.message == 'thermal'

    def test_qubit_branch(self):
        """ (7 s⁻¹, 2.2·10⁴ s⁻¹) recovered within 10% from 5% noise. """
        points, sigma = _rates(_rng(12), DEFAULTS.device.omega_q, 7.0, 2.2e4)
        result = fit_thermal_model(points, ThermalBranch.QUBIT, DEFAULTS.device.omega_q, sigma)

        assert result['rate_0'] == pytest.approx(7.0, rel=0.1)
        assert result['k'] == pytest.approx(2.2e4, rel=0.1)

    def test_too_few_points(self):
        """ At least four temperatures are required. """
        with pytest.raises(FitError):
            fit_thermal_model([(0.01, 31.0), (0.05, 100.0), (0.09, 3000.0)], ThermalBranch.THERMAL,
                              DEFAULTS.device.omega_b)

    @pytest.mark.slow
    def test_recovery(self):
        """ Both branches cover the truth in at least 95% of the trials. """
        for branch, omega, rate_0, k in ((ThermalBranch.THERMAL, DEFAULTS.device.omega_b, 31.0, 2e5),
                                         (ThermalBranch.QUBIT, DEFAULTS.device.omega_q, 7.0, 2.2e4)):

            def _trial(rng: np.random.Generator) -> FitResult:
                points, sigma = _rates(rng, omega, rate_0, k)
                return fit_thermal_model(points, branch, omega, sigma)

            coverage = _coverage(_trial, {'rate_0': rate_0, 'k': k})
            for name, share in coverage.items():
                assert share >= 0.95, f'{branch} {name}'


class TestExponentialDecay:
    """ Tests for the fluorescence decay fit. """

    def test_lifetime(self):
        """ Γ_R⁻¹ = 1.24 ms within 5% from Poisson counts. """
        times, counts = _decay_counts(_rng(21))
        result = fit_exponential_decay(times, counts)

        assert result.success
        assert result['lifetime'] == pytest.approx(1.24e-3, rel=0.05)
        assert result['background'] == pytest.approx(5.0, rel=0.2)
        assert result['area'] == pytest.approx(1000.0 * 1.24e-3, rel=0.05)
        assert result.error('area') > 0

    def test_invalid(self):
        """ Too few bins or negative counts raise FitError. """
        with pytest.raises(FitError):
            fit_exponential_decay(np.arange(5.0), np.ones(5))
        with pytest.raises(FitError):
            fit_exponential_decay(np.arange(8.0), -np.ones(8))
        with pytest.raises(FitError):
            fit_exponential_decay(np.arange(8.0), np.ones(7))

    @pytest.mark.slow
    def test_recovery(self):
        """ Rate and background cover the truth in at least 95% of the trials. """
        coverage = _coverage(lambda rng: fit_exponential_decay(*_decay_counts(rng, amplitude=200.0)),
                             {'rate': 1.0 / 1.24e-3, 'background': 5.0})
        for name, share in coverage.items():
            assert share >= 0.95, name
