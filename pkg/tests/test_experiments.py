""" Tests for the measurement protocols. """
import math

from dataclasses import replace

import numpy as np
import pytest

from smpd.common import DomainError
from smpd.common.config import load_config
from smpd.common.types.click_cause import ClickCause
from smpd.calib.fit import FitResult, fit_exponential_decay
from smpd.calib.ramsey import photon_flux_from_ramsey, ramsey_from_flux
from smpd.core.merit import eta_smpd
from smpd.sim.cycles import predicted_click_rate, run_cycles
from smpd.sim.experiments import DETUNED_PUMP, budget_from_statistics, dark_count_budget, efficiency_sweep, \
    measure_efficiency, protocol_configs, run_fluorescence, spin_efficiency, traces_by_protocol
from smpd.sim.trace import SignalSource, aggregate


DEFAULTS = load_config(environ={})
# Readout fidelity of the efficiency measurement.
CALIBRATED = DEFAULTS.with_changes(device=replace(DEFAULTS.device, f_ro=0.936))
SPIN = SignalSource.spin(gamma_r=1.0 / 1.24e-3, eta_reso=0.6, eta_loss=0.85, pulse_period=8e-3)


class TestEfficiency:
    """ Tests for the efficiency measurement. """

    def test_measured_efficiency(self):
        """ η_SMPD = 0.80 ± 0.03 with the calibrated readout. """
        config = CALIBRATED.with_changes(signal=SignalSource.coherent(1000.0), duration=30.0, rng_seed=31)
        assert measure_efficiency(config, 1000.0) == pytest.approx(0.80, abs=0.03)

    def test_ramsey_calibrated_flux(self):
        """ A flux calibrated from noisy Ramsey shifts gives the efficiency within 0.03. """
        device = CALIBRATED.device
        rng = np.random.Generator(np.random.Philox(8))
        delta_q, gamma_q = ramsey_from_flux(1000.0, device)
        delta_q *= 1.0 + 0.01 * rng.standard_normal()
        gamma_q *= 1.0 + 0.01 * rng.standard_normal()
        flux = photon_flux_from_ramsey(delta_q, gamma_q, device)
        assert flux == pytest.approx(1000.0, rel=0.03)

        config = CALIBRATED.with_changes(signal=SignalSource.coherent(1000.0), duration=30.0, rng_seed=32)
        truth = eta_smpd(device, config.tuning, config.timing, device.omega_b).total
        assert measure_efficiency(config, flux) == pytest.approx(truth, abs=0.03)

    def test_invalid(self):
        """ A coherent signal and a positive flux are required. """
        with pytest.raises(DomainError):
            measure_efficiency(DEFAULTS, 1000.0)
        config = DEFAULTS.with_changes(signal=SignalSource.coherent(1000.0))
        with pytest.raises(DomainError) as e:
            measure_efficiency(config, 0.0)
        assert e.value.field == 'flux'

    def test_sweep(self):
        """ The measured efficiency follows the Lorentzian of the bandwidth. """
        config = CALIBRATED.with_changes(duration=10.0, rng_seed=33)
        kappa_d = config.tuning.kappa_d
        offsets = [-kappa_d, -0.5 * kappa_d, 0.0, 0.5 * kappa_d, kappa_d]
        points = efficiency_sweep(config, offsets, 1000.0)

        assert len(points) == 5
        peak = eta_smpd(config.device, config.tuning, config.timing, config.device.omega_b).total
        for point, offset in zip(points, offsets):
            expected = peak / (1.0 + 4.0 * (offset / kappa_d) ** 2)
            assert point.omega == pytest.approx(config.device.omega_b + offset)
            assert point.error > 0
            assert abs(point.efficiency - expected) <= 4.0 * point.error + 0.01 * expected

        with pytest.raises(DomainError):
            efficiency_sweep(config, offsets, -1.0)


class TestFluorescence:
    """ Tests for the single spin fluorescence protocol. """

    def test_histogram(self):
        """ 50 µs bins over the 8 ms pulse period. """
        config = DEFAULTS.with_changes(signal=SPIN, rng_seed=41)
        histogram = run_fluorescence(config, n_repetitions=200, bin_width=50e-6)

        assert len(histogram.rows()) == 160
        assert histogram.rows()[0][0] == pytest.approx(25e-6)
        assert histogram.n_repetitions == 200
        # Photons arrive shortly after the pulse.
        assert histogram.counts[:20].sum() > histogram.counts[-20:].sum()

    def test_invalid(self):
        """ A spin source and bins longer than a cycle are required. """
        with pytest.raises(DomainError):
            run_fluorescence(DEFAULTS, n_repetitions=10, bin_width=50e-6)
        config = DEFAULTS.with_changes(signal=SPIN)
        with pytest.raises(DomainError) as e:
            run_fluorescence(config, n_repetitions=10, bin_width=10e-6)
        assert e.value.field == 'bin_width'
        with pytest.raises(DomainError):
            run_fluorescence(config, n_repetitions=0, bin_width=50e-6)

    @pytest.mark.slow
    def test_spin_lifetime_and_efficiency(self):
        """ Γ_R⁻¹ within 5% and η_reso·η_loss·η_SMPD within 0.04. """
        config = DEFAULTS.with_changes(signal=SPIN, rng_seed=42)
        histogram = run_fluorescence(config, n_repetitions=40_000, bin_width=50e-6)
        fit = fit_exponential_decay(histogram.times, histogram.counts)

        assert fit.success
        assert fit['lifetime'] == pytest.approx(1.24e-3, rel=0.05)
        # Dark clicks make the flat background.
        assert fit['background'] == pytest.approx(predicted_click_rate(DEFAULTS) * 40_000 * 8e-3 / 160, rel=0.2)
        assert spin_efficiency(fit, histogram) == pytest.approx(0.51 * 0.743443, abs=0.04)

    def test_spin_efficiency_needs_fit(self):
        """ A failed fit gives no efficiency. """
        config = DEFAULTS.with_changes(signal=SPIN, rng_seed=43)
        histogram = run_fluorescence(config, n_repetitions=10, bin_width=50e-6)
        failed = FitResult(values={'rate': math.nan}, errors={}, residual_norm=math.nan, success=False,
                           n_iterations=0)
        with pytest.raises(DomainError):
            spin_efficiency(failed, histogram)


class TestDarkCounts:
    """ Tests for the dark count protocols. """

    def test_protocol_configs(self):
        """ Pump off, detuned by 20 MHz and tuned, all without signal. """
        config = DEFAULTS.with_changes(signal=SignalSource.coherent(1000.0))
        protocols = protocol_configs(config)

        assert list(protocols) == ['off', 'detuned', 'tuned']
        assert not protocols['off'].tuning.pump_on
        assert protocols['detuned'].tuning.delta_p == DETUNED_PUMP
        assert protocols['tuned'].tuning.delta_p == 0.0
        assert all(p.signal == SignalSource.none() for p in protocols.values())

    def test_bandwidth_kept(self):
        """ The formula bandwidth is fixed for all protocols. """
        config = DEFAULTS.with_changes(tuning=replace(DEFAULTS.tuning, kappa_d=None))
        for protocol in protocol_configs(config).values():
            assert protocol.tuning.kappa_d is not None

    def test_analytic_rates(self):
        """ The analytic protocol rates are 8, 10 and 31 s⁻¹. """
        protocols = protocol_configs(DEFAULTS)
        assert predicted_click_rate(protocols['off']) == pytest.approx(8.0, rel=0.05)
        assert predicted_click_rate(protocols['detuned']) == pytest.approx(10.0, rel=0.05)
        assert predicted_click_rate(protocols['tuned']) == pytest.approx(31.0, rel=0.05)

    def test_simulated_rates(self):
        """ Every protocol within three Poisson standard deviations of its analytic rate. """
        config = DEFAULTS.with_changes(duration=60.0, rng_seed=51)
        traces = traces_by_protocol(config)
        protocols = protocol_configs(config)

        for name, trace in traces.items():
            expected = predicted_click_rate(protocols[name])
            assert abs(trace.rate() - expected) <= 3.0 * math.sqrt(expected / 60.0), name

        assert traces['off'].counts_by_cause()[ClickCause.PUMP_HEATING] == 0

    def test_warm_tuned_rate(self):
        """ 3614 s⁻¹ ± 10% at 90 mK. """
        config = DEFAULTS.with_changes(noise=DEFAULTS.noise.at_temperature(0.09), duration=5.0, rng_seed=52)
        rate = traces_by_protocol(config)['tuned'].rate()
        assert rate == pytest.approx(3614.0, rel=0.1)

    def test_budget(self):
        """ The per-cause rates of a dark run. """
        config = DEFAULTS.with_changes(duration=60.0, rng_seed=53)
        budget = dark_count_budget(config)

        assert set(budget.as_dict()) == {'alpha_q', 'alpha_p', 'alpha_th', 'alpha_ro', 'total'}
        assert budget.total == pytest.approx(
            budget.alpha_q + budget.alpha_p + budget.alpha_th + budget.alpha_ro
            + budget.statistics.rate(ClickCause.SIGNAL))
        assert budget.alpha_th == pytest.approx(21.15, abs=4.0 * math.sqrt(21.15 / 60.0))
        assert budget.alpha_q == pytest.approx(8.126, abs=4.0 * math.sqrt(8.126 / 60.0))
        assert budget.alpha_p == pytest.approx(2.0, abs=4.0 * math.sqrt(2.0 / 60.0))

        with pytest.raises(DomainError):
            dark_count_budget(DEFAULTS.with_changes(signal=SignalSource.coherent(10.0)))

    def test_budget_from_statistics(self):
        """ Budgets of aggregated traces. """
        config = DEFAULTS.with_changes(duration=5.0)
        traces = [config.derived(i) for i in range(3)]
        statistics = aggregate(run_cycles(c) for c in traces)
        budget = budget_from_statistics(statistics)

        assert budget.statistics.total_cycles == statistics.total_cycles
        assert budget.total == pytest.approx(statistics.total_clicks / statistics.total_wall_time)
