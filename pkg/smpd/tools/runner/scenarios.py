"""
The scenarios of the smpd runner.

Each scenario reproduces one measurement of the detector: it builds the
configuration, runs the calibration models, fitters or the cycle
simulation, and returns the computed values with the curves behind them.
run_scenario compares the values with the packaged targets and writes the
files.
"""
from __future__ import annotations

import logging
import math

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np

from smpd import __version__
from smpd.common import DomainError, ScenarioError, SmpdError
from smpd.common.config import ParameterSet, apply_overrides, build_config, load_parameters
from smpd.common.types.click_cause import ClickCause
from smpd.common.types.scenario_kind import ScenarioKind
from smpd.common.types.squid_model import SquidModelKind
from smpd.common.types.thermal_branch import ThermalBranch
from smpd.common.units import from_internal, to_internal
from smpd.calib.fit import fit_4wm_map, fit_exponential_decay, fit_line, fit_lorentzian, fit_squid_tuning, \
    fit_thermal_model
from smpd.calib.pump import calibrate_pump
from smpd.calib.ramsey import photon_flux_from_ramsey, ramsey_from_flux
from smpd.calib.tuning import FourWaveMixingMap, FourWaveMixingSurface, PurcellCouplingModel, SquidTuningModel, \
    asymmetry_from_ratio, omega_4wm, purcell_frequency, reflection_magnitude, synthetic_map
from smpd.core.merit import alpha_q_detected, alpha_q_rate, buffer_linewidth_for_bandwidth, dark_budget, eta_smpd, \
    detection_bandwidth, qubit_rate_coefficient, sensitivity, temperature_from_occupation, thermal_occupation
from smpd.core.params import TuningState
from smpd.sim.cycles import duty_cycle_estimate, run_cycles
from smpd.sim.experiments import budget_from_statistics, efficiency_sweep, measure_efficiency, protocol_configs, \
    run_fluorescence, spin_efficiency, traces_by_protocol
from smpd.sim.trace import ClickTrace, SignalSource, SimulationConfig, derive_seed

from .optimize import brute_force_optimum, grid_distance, optimize_sensitivity
from .report import Check, ScenarioTargets, evaluate_all, load_targets, render_summary, write_csv, \
    write_summary_json


@dataclass(frozen=True)
class Scenario:
    """ One run of the runner. """

    kind: ScenarioKind
    # Parameter values applied after the parameter file and the scenario's own overrides.
    overrides: dict[str, Any] = field(default_factory=dict)
    output_dir: Path = Path('.')
    seed: int = 0
    config_path: Optional[Path] = None


@dataclass(frozen=True)
class Curve:
    """ Table written as one CSV file. """

    header: tuple[str, ...]
    rows: list[tuple[Any, ...]]


@dataclass
class ScenarioResult:
    """ Computed values and curves of a scenario. """

    values: dict[str, float] = field(default_factory=dict)
    # Measurement time of rates, for Poisson tolerances.
    exposure: dict[str, float] = field(default_factory=dict)
    curves: dict[str, Curve] = field(default_factory=dict)
    traces: dict[str, ClickTrace] = field(default_factory=dict)
    metadata: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class ScenarioReport:
    """ Result, checks and written files of run_scenario. """

    result: ScenarioResult
    checks: list[Check]
    files: list[Path]
    summary: str


@dataclass(frozen=True)
class _Context:
    params: ParameterSet
    config: SimulationConfig
    inputs: dict[str, Any]
    seed: int

    def input(self, name: str) -> Any:
        try:
            return self.inputs[name]
        except KeyError as e:
            raise ScenarioError(f'Scenario input {name} is missing in the targets file!') from e

    def rng(self, *keys: int) -> np.random.Generator:
        """ Independent generator for the step identified by keys. """
        return np.random.Generator(np.random.Philox(derive_seed(self.seed, *keys)))


def _mk(temperature: float) -> str:
    return f'{temperature:g}mk'


# Tuning curves, Purcell coupling and the buffer resonance.

def _tuning_curves(ctx: _Context) -> ScenarioResult:
    device = ctx.config.device
    result = ScenarioResult()

    omega_max = to_internal(ctx.input('buffer_omega_max_ghz'), 'ghz')
    omega_min = to_internal(ctx.input('buffer_omega_min_ghz'), 'ghz')
    asymmetry = asymmetry_from_ratio(ctx.input('buffer_junction_ratio'))
    participation = SquidTuningModel.participation_for_range(omega_max, omega_min, asymmetry)
    exact = SquidTuningModel(omega_max=omega_max, asymmetry=asymmetry, participation=participation)
    sinusoid = replace(exact, model_kind=SquidModelKind.SINUSOIDAL)

    phi = np.linspace(-1.0, 1.0, 201)
    omega_exact = exact.frequency(phi)
    omega_sinusoid = sinusoid.frequency(phi)
    result.curves['buffer_tuning'] = Curve(
        ('phi_b_phi0', 'omega_exact_ghz', 'omega_sinusoid_ghz'),
        [(float(p), from_internal(e, 'ghz'), from_internal(s, 'ghz'))
         for p, e, s in zip(phi, omega_exact, omega_sinusoid)])

    result.values['buffer_tuning_range_mhz'] = from_internal(exact.tuning_range, 'mhz')
    deviation = float(np.max(np.abs(omega_exact - omega_sinusoid)))
    result.values['sinusoid_deviation_pct'] = 100.0 * deviation / exact.tuning_range

    noise = to_internal(ctx.input('flux_noise_khz'), 'khz')
    samples = omega_exact + ctx.rng(0).normal(0.0, noise, size=len(phi))
    fit = fit_squid_tuning(phi, samples, SquidModelKind.SQUID_EXACT, participation=participation)
    if not fit.success:
        logging.warning('Tuning curve fit did not converge: %s', fit.message)
    result.values['buffer_junction_ratio'] = fit.derived.get('junction_ratio', math.nan)

    purcell = SquidTuningModel(omega_max=device.omega_pb, asymmetry=0.0)
    coupling = PurcellCouplingModel.calibrated(
        to_internal(ctx.input('kappa_bc_max_mhz'), 'mhz'), device.kappa_pb, device.kappa_b_i)
    phi_pb = np.linspace(-0.45, 0.45, 91)
    omega_pb = purcell_frequency(phi_pb, purcell)
    kappa_bc = coupling.kappa_bc(omega_pb - device.omega_b)
    result.curves['purcell_tuning'] = Curve(
        ('phi_pb_phi0', 'omega_pb_ghz', 'detuning_mhz', 'kappa_bc_khz'),
        [(float(p), from_internal(w, 'ghz'), from_internal(w - device.omega_b, 'mhz'), from_internal(k, 'khz'))
         for p, w, k in zip(phi_pb, omega_pb, kappa_bc)])

    result.values['purcell_omega_max_ghz'] = from_internal(float(np.max(omega_pb)), 'ghz')
    result.values['purcell_omega_min_ghz'] = from_internal(float(np.min(omega_pb)), 'ghz')
    result.values['kappa_bc_max_mhz'] = from_internal(coupling.kappa_bc_max, 'mhz')
    result.values['kappa_bc_10khz_detuning_mhz'] = from_internal(
        coupling.detuning_for_kappa_bc(to_internal(10.0, 'khz')), 'mhz')

    center = from_internal(device.omega_b, 'hz')
    span = from_internal(to_internal(ctx.input('reflection_span_mhz'), 'mhz'), 'hz')
    frequency = np.linspace(center - span, center + span, int(ctx.input('reflection_samples')))
    magnitude = reflection_magnitude(frequency, center, device.kappa_b_i, device.kappa_b_c)
    measured = magnitude + ctx.rng(1).normal(0.0, ctx.input('reflection_noise'), size=len(frequency))
    reflection = fit_lorentzian(frequency, measured, overcoupled=True)
    if not reflection.success:
        logging.warning('Reflection fit did not converge: %s', reflection.message)
    result.curves['reflection'] = Curve(
        ('frequency_offset_khz', 'magnitude', 'model'),
        [((f - center) / 1e3, float(m), float(r)) for f, m, r in zip(frequency, measured, magnitude)])

    result.values['buffer_kappa_b_khz'] = reflection['fwhm'] / 1e3
    result.values['buffer_kappa_b_i_per_s'] = reflection.derived.get('kappa_i', math.nan)
    return result


# Four-wave mixing map and pump calibration.

def _fwm_map(ctx: _Context) -> ScenarioResult:
    device, tuning = ctx.config.device, ctx.config.tuning
    result = ScenarioResult()

    points = int(ctx.input('grid_points'))
    omega = device.omega_b + np.linspace(-1.0, 1.0, points) * to_internal(ctx.input('signal_span_khz'), 'khz')
    omega_p = omega_4wm(device) + np.linspace(-1.0, 1.0, points) * to_internal(ctx.input('pump_span_mhz'), 'mhz')
    amplitude = ctx.input('detection_amplitude')
    baseline = ctx.input('baseline')
    noise = ctx.input('noise')

    def _measure(cooperativity: float, rng: np.random.Generator) -> FourWaveMixingMap:
        surface = replace(FourWaveMixingSurface.from_device(device, tuning), cooperativity=cooperativity)
        return synthetic_map(surface, omega_p, omega, amplitude=amplitude, baseline=baseline, noise=noise, rng=rng)

    fwm_map = _measure(tuning.cooperativity, ctx.rng(0))
    result.curves['fwm_map'] = Curve(
        ('pump_offset_mhz', 'signal_offset_khz', 'excited_prob'),
        [(from_internal(float(p) - omega_4wm(device), 'mhz'), from_internal(float(w) - device.omega_b, 'khz'),
          float(fwm_map.excited_prob[i, j]))
         for i, p in enumerate(omega_p) for j, w in enumerate(omega)])

    fit = fit_4wm_map(fwm_map)
    if not fit.success:
        logging.warning('Four-wave mixing map fit did not converge: %s', fit.message)
    result.values['cooperativity'] = fit['cooperativity']
    result.values['kappa_b_khz'] = from_internal(fit['kappa_b'], 'khz')
    result.values['kappa_w_mhz'] = from_internal(fit['kappa_w'], 'mhz')

    calls = [0]

    def _oracle(xi: float) -> float:
        calls[0] += 1
        measured = fit_4wm_map(_measure(TuningState.cooperativity_of(device, xi), ctx.rng(1, calls[0])))
        return measured['cooperativity'] if measured.success else math.nan

    start = TuningState.xi0_of(device, ctx.input('pump_start_cooperativity'))
    calibration = calibrate_pump(_oracle, start, tolerance=ctx.input('pump_tolerance'),
                                 noise=ctx.input('pump_noise'))
    result.curves['pump_calibration'] = Curve(
        ('step', 'xi', 'cooperativity', 'gain'),
        [(i, s.xi, s.cooperativity, s.gain) for i, s in enumerate(calibration.log)])
    result.values['pump_calibrated_cooperativity'] = TuningState.cooperativity_of(device, calibration.xi)
    result.values['pump_calibration_steps'] = float(calibration.steps)
    result.metadata['pump_converged'] = calibration.converged
    return result


# Dark count rates against temperature and bandwidth.

def _qubit_coefficient(config: SimulationConfig) -> float:
    """ Observed qubit dark count rate per unit population. """
    device, timing = config.device, config.timing
    return alpha_q_detected(0.25, timing, device.t1, device.f_ro) / 0.25


def _dark_vs_temperature(ctx: _Context) -> ScenarioResult:
    config = ctx.config
    device = config.device
    protocols = protocol_configs(config)
    result = ScenarioResult()

    rows = []
    off_rates = []
    tuned_rates = []
    temperatures = [to_internal(t, 'mk') for t in ctx.input('temperatures_mk')]
    for i, temperature in enumerate(temperatures):
        rates = {}
        for j, name in enumerate(('off', 'tuned')):
            protocol = protocols[name]
            protocol = replace(protocol, noise=protocol.noise.at_temperature(temperature)).derived(i, j)
            rates[name] = run_cycles(protocol).rate()
        off_rates.append(rates['off'])
        tuned_rates.append(rates['tuned'])
        logging.info('T = %.3g mK: pump off %.4g/s, tuned %.4g/s', temperature * 1e3, rates['off'], rates['tuned'])

    # The tuned rate without the temperature dependence of the qubit.
    thermal_rates = [tuned - (off - off_rates[0]) for tuned, off in zip(tuned_rates, off_rates)]
    for temperature, off, tuned, thermal in zip(temperatures, off_rates, tuned_rates, thermal_rates):
        noise = config.noise.at_temperature(temperature)
        rows.append((from_internal(temperature, 'mk'), off, tuned, thermal,
                     thermal_occupation(noise, device.omega_b)))
    result.curves['dark_vs_temperature'] = Curve(
        ('temperature_mk', 'rate_off_per_s', 'rate_tuned_per_s', 'rate_thermal_branch_per_s', 'n_th_b'), rows)

    qubit = fit_thermal_model(list(zip(temperatures, off_rates)), ThermalBranch.QUBIT, device.omega_q)
    thermal = fit_thermal_model(list(zip(temperatures, thermal_rates)), ThermalBranch.THERMAL, device.omega_b)

    result.values['qubit_rate_0'] = qubit['rate_0']
    result.values['qubit_k'] = qubit['k']
    published = ctx.input('published')
    result.values['qubit_rate_0_vs_published'] = qubit['rate_0'] / published['qubit_rate_0']
    result.values['qubit_k_vs_published'] = qubit['k'] / published['qubit_k']
    result.values['thermal_rate_0'] = thermal['rate_0']
    result.values['thermal_k'] = thermal['k']

    coefficient = _qubit_coefficient(config)
    result.values['qubit_rate_0_model'] = (coefficient * device.p_th_q
                                           + device.p_false_positive / config.timing.cycle_duration)
    result.values['qubit_k_model'] = coefficient
    return result


def bandwidth_config(config: SimulationConfig, kappa_d: float, kappa_bc_max: float) -> SimulationConfig:
    """
    Configuration with the bandwidth kappa_d set through the buffer linewidth.

    The buffer coupling rate is tuned with the Purcell filter: the filter
    frequency ω_b - Δ gives the coupling rate κ_b - κ_b,i.
    """
    device = config.device
    kappa_b = buffer_linewidth_for_bandwidth(kappa_d, device.kappa_w)
    device = device.with_kappa_b(kappa_b)

    coupling = PurcellCouplingModel.calibrated(kappa_bc_max, device.kappa_pb, device.kappa_b_i)
    delta = coupling.detuning_for_kappa_bc(device.kappa_b_c)
    purcell = SquidTuningModel(omega_max=device.omega_pb, asymmetry=0.0)
    phi_pb = purcell.flux_for_frequency(device.omega_b - delta)

    tuning = replace(config.tuning, kappa_d=None, phi_pb=phi_pb)
    return replace(config, device=device, tuning=tuning)


def _dark_vs_bandwidth(ctx: _Context) -> ScenarioResult:
    config = ctx.config
    kappa_bc_max = to_internal(ctx.input('kappa_bc_max_mhz'), 'mhz')
    result = ScenarioResult()

    bandwidths = [to_internal(k, 'khz') for k in ctx.input('kappa_d_khz')]
    rates = []
    errors = []
    efficiencies = []
    rows = []
    for i, kappa_d in enumerate(bandwidths):
        tuned = protocol_configs(bandwidth_config(config, kappa_d, kappa_bc_max))['tuned'].derived(i)
        trace = run_cycles(tuned)
        rate = trace.rate()
        error = math.sqrt(max(len(trace), 1)) / trace.total_wall_time
        rates.append(rate)
        errors.append(error)
        device = tuned.device
        # On resonance, the internal losses of the buffer cost κ_b,i/κ_b.
        efficiency = eta_smpd(device, tuned.tuning, tuned.timing, device.omega_b, with_internal_losses=True).total
        lossless = eta_smpd(device, tuned.tuning, tuned.timing, device.omega_b).total
        efficiencies.append(efficiency)
        rows.append((from_internal(kappa_d, 'khz'), from_internal(device.kappa_b, 'khz'),
                     from_internal(device.kappa_b_c, 'khz'), tuned.tuning.phi_pb, rate, error, efficiency, lossless))
        logging.info('κ_d/2π = %.4g kHz: %.4g ± %.2g clicks/s, η = %.3g',
                     from_internal(kappa_d, 'khz'), rate, error, efficiency)

    result.curves['dark_vs_bandwidth'] = Curve(
        ('kappa_d_khz', 'kappa_b_khz', 'kappa_b_c_khz', 'phi_pb_phi0', 'rate_per_s', 'rate_error_per_s',
         'eta_smpd', 'eta_smpd_lossless'), rows)

    result.values['eta_smpd_decreasing_steps'] = float(np.sum(np.diff(efficiencies) <= 0.0))
    result.values['eta_smpd_narrowest_vs_lossless'] = efficiencies[0] / rows[0][-1]
    result.values['eta_smpd_widest_vs_lossless'] = efficiencies[-1] / rows[-1][-1]

    line = fit_line(bandwidths, rates, errors)
    result.values['slope'] = line['slope']
    result.values['intercept'] = line['intercept']
    published = ctx.input('published')
    result.values['slope_vs_published'] = line['slope'] / published['slope']
    result.values['intercept_vs_published'] = line['intercept'] / published['intercept']

    budget = dark_budget(config.device, config.tuning, config.timing, config.noise, config.with_internal_losses)
    result.values['slope_model'] = thermal_occupation(config.noise, config.device.omega_b) * budget.eta_smpd / 4.0
    result.values['alpha_err_model'] = budget.alpha_err
    return result


# Efficiency against signal frequency and calibrated flux.

def _efficiency_sweep(ctx: _Context) -> ScenarioResult:
    config = ctx.config
    device = config.device
    flux = ctx.input('flux_photons_per_s')
    low, high, count = ctx.input('offsets_per_kappa_d')
    result = ScenarioResult()

    peaks = []
    for i, bandwidth in enumerate(ctx.input('kappa_d_khz')):
        kappa_d = to_internal(bandwidth, 'khz')
        swept = replace(config, tuning=replace(config.tuning, kappa_d=kappa_d)).derived(i)
        offsets = np.linspace(low, high, int(count)) * kappa_d
        points = efficiency_sweep(swept, offsets, flux)

        frequency = [from_internal(p.omega, 'hz') for p in points]
        efficiency = [p.efficiency for p in points]
        fit = fit_lorentzian(frequency, efficiency, sigma=[max(p.error, 1e-6) for p in points])
        if not fit.success:
            logging.warning('Efficiency fit of %g kHz did not converge: %s', bandwidth, fit.message)
        peaks.append(fit['amplitude'] + fit['baseline'])
        result.values[f'fwhm_{bandwidth:g}_khz'] = fit['fwhm'] / 1e3

        result.curves[f'efficiency_{bandwidth:g}khz'] = Curve(
            ('frequency_offset_khz', 'efficiency', 'error'),
            [(from_internal(p.omega - device.omega_b, 'khz'), p.efficiency, p.error) for p in points])

        if i == 0:
            far = efficiency_sweep(swept.derived(99), [10.0 * kappa_d], 10.0 * flux)
            result.values['eta_far_detuned'] = far[0].efficiency

    result.values['eta_peak'] = float(np.mean(peaks))

    # Efficiency against the flux seen in the Ramsey fringes.
    rng = ctx.rng(1)
    delta_q, gamma_q = ramsey_from_flux(flux, device)
    noise = ctx.input('ramsey_noise')
    delta_q *= 1.0 + rng.normal(0.0, noise)
    gamma_q *= 1.0 + rng.normal(0.0, noise)
    calibrated_flux = photon_flux_from_ramsey(delta_q, gamma_q, device)

    kappa_d = to_internal(ctx.input('kappa_d_khz')[0], 'khz')
    calibrated = replace(
        config,
        tuning=replace(config.tuning, kappa_d=kappa_d),
        signal=SignalSource.coherent(flux, device.omega_b),
        duration=ctx.input('calibration_duration_s')
    ).derived(2)
    result.values['eta_ramsey_calibrated'] = measure_efficiency(calibrated, calibrated_flux)
    result.metadata['ramsey_flux_per_s'] = calibrated_flux
    return result


# Click traces of the dark count protocols.

def _click_traces(ctx: _Context) -> ScenarioResult:
    config = ctx.config
    result = ScenarioResult()

    rows = []
    traces = traces_by_protocol(config)
    for name, trace in traces.items():
        result.values[f'rate_{name}'] = trace.rate()
        result.exposure[f'rate_{name}'] = trace.total_wall_time
        result.traces[f'trace_{name}'] = trace
        rows.append((name, from_internal(config.noise.cryostat_temperature, 'mk'), len(trace),
                     trace.total_wall_time, trace.rate()))

    tuned = protocol_configs(config)['tuned']
    for i, temperature in enumerate(ctx.input('temperatures_mk')):
        warm = replace(tuned, noise=tuned.noise.at_temperature(to_internal(temperature, 'mk'))).derived(10, i)
        trace = run_cycles(warm)
        result.values[f'rate_tuned_{_mk(temperature)}'] = trace.rate()
        result.traces[f'trace_tuned_{_mk(temperature)}'] = trace
        rows.append(('tuned', temperature, len(trace), trace.total_wall_time, trace.rate()))

    result.curves['dark_rates'] = Curve(('protocol', 'temperature_mk', 'clicks', 'wall_time_s', 'rate_per_s'), rows)

    tuned_trace = traces['tuned']
    result.values['duty_cycle'] = duty_cycle_estimate(tuned_trace)

    budget = budget_from_statistics(tuned_trace.statistics())
    for name, value in budget.as_dict().items():
        if name in ('alpha_q', 'alpha_p', 'alpha_th'):
            result.values[name] = value
            result.exposure[name] = tuned_trace.total_wall_time

    result.curves['budget'] = Curve(
        ('cause', 'clicks', 'rate_per_s'),
        [(str(cause), budget.statistics.count(cause), budget.statistics.rate(cause)) for cause in ClickCause])
    return result


# Single spin fluorescence.

def _fluorescence(ctx: _Context) -> ScenarioResult:
    config = ctx.config
    result = ScenarioResult()

    histogram = run_fluorescence(config, int(ctx.input('n_repetitions')), to_internal(ctx.input('bin_width_us'), 'us'))
    result.curves['fluorescence'] = Curve(('t_bin_s', 'counts'), histogram.rows())

    fit = fit_exponential_decay(histogram.times, histogram.counts)
    if not fit.success:
        logging.warning('Fluorescence fit did not converge: %s', fit.message)
    result.values['lifetime_ms'] = fit.derived.get('lifetime', math.nan) * 1e3
    result.values['eta'] = spin_efficiency(fit, histogram)
    result.metadata['background_counts_per_bin'] = fit['background']
    return result


# Efficiency, dark counts and sensitivity of the operating point.

def _sensitivity_report(ctx: _Context) -> ScenarioResult:
    config = ctx.config
    device, tuning, timing, noise = config.device, config.tuning, config.timing, config.noise
    result = ScenarioResult()

    budget = dark_budget(device, tuning, timing, noise, config.with_internal_losses)
    eta = ctx.input('measured_eta')
    alpha_q = ctx.input('measured_alpha_q')
    alpha_p = ctx.input('measured_alpha_p')
    alpha_th = ctx.input('measured_alpha_th')

    k_q = qubit_rate_coefficient(timing, device.t1)
    k_th = budget.kappa_d * eta / 4.0

    result.values.update({
        'eta_smpd': budget.eta_smpd,
        'sensitivity_model': budget.sensitivity,
        'sensitivity_measured': sensitivity(eta, alpha_q + alpha_p + alpha_th, device.omega_b),
        'alpha_q_model': budget.alpha_q,
        'alpha_th_model': budget.alpha_th,
        'alpha_q_stated_formula': alpha_q_rate(device.p_th_q, timing, device.t1),
        'k_q': k_q,
        'k_th': k_th,
        'field_temperature_mk': from_internal(temperature_from_occupation(device.omega_b, alpha_th / k_th), 'mk'),
        'qubit_temperature_mk': from_internal(temperature_from_occupation(device.omega_q, alpha_q / k_q), 'mk'),
        'kappa_d_formula_khz': from_internal(detection_bandwidth(device.kappa_b, device.kappa_w), 'khz'),
    })

    factors = [
        ('eta_omega', budget.eta_omega), ('eta_4wm', budget.eta_4wm), ('eta_q', budget.eta_q),
        ('f_ro', budget.f_ro), ('eta_cycle', budget.eta_cycle), ('eta_smpd', budget.eta_smpd),
        ('alpha_q', budget.alpha_q), ('alpha_p', budget.alpha_p), ('alpha_th', budget.alpha_th),
        ('alpha_ro', budget.alpha_ro), ('alpha_total', budget.alpha_total), ('sensitivity', budget.sensitivity),
    ]
    result.curves['budget'] = Curve(('quantity', 'value'), factors)
    return result


# Sensitivity optimization.

def _optimize(ctx: _Context) -> ScenarioResult:
    config = ctx.config
    kappa_bounds = tuple(to_internal(k, 'khz') for k in ctx.input('kappa_d_khz'))
    t_bounds = tuple(to_internal(t, 'us') for t in ctx.input('t_d_us'))
    linewidth = to_internal(ctx.input('source_linewidth_khz'), 'khz')
    if len(kappa_bounds) != 2 or len(t_bounds) != 2:
        raise DomainError('Bounds must be [low, high] pairs!', field='bounds')
    result = ScenarioResult()

    optimum = optimize_sensitivity(config, (kappa_bounds[0], kappa_bounds[1]), (t_bounds[0], t_bounds[1]),
                                   source_linewidth=linewidth, grid=int(ctx.input('grid_points')))
    oracle = brute_force_optimum(config, (kappa_bounds[0], kappa_bounds[1]), (t_bounds[0], t_bounds[1]),
                                 source_linewidth=linewidth)

    result.curves['tradeoff'] = Curve(
        ('kappa_d_khz', 't_d_us', 'sensitivity_w_per_sqrt_hz'),
        [(from_internal(k, 'khz'), t * 1e6, s) for k, t, s in optimum.rows()])

    result.values.update({
        'kappa_d_opt_khz': from_internal(optimum.kappa_d, 'khz'),
        't_d_opt_us': optimum.t_d * 1e6,
        'sensitivity_opt': optimum.sensitivity,
        'sensitivity_operating': optimum.operating_sensitivity,
        'sensitivity_gain': optimum.gain,
        'oracle_cells': grid_distance(optimum, oracle),
    })
    return result


_RUNNERS: dict[ScenarioKind, Callable[[_Context], ScenarioResult]] = {
    ScenarioKind.TUNING_CURVES: _tuning_curves,
    ScenarioKind.FWM_MAP: _fwm_map,
    ScenarioKind.DARK_VS_TEMPERATURE: _dark_vs_temperature,
    ScenarioKind.DARK_VS_BANDWIDTH: _dark_vs_bandwidth,
    ScenarioKind.EFFICIENCY_SWEEP: _efficiency_sweep,
    ScenarioKind.CLICK_TRACES: _click_traces,
    ScenarioKind.FLUORESCENCE: _fluorescence,
    ScenarioKind.SENSITIVITY_REPORT: _sensitivity_report,
    ScenarioKind.OPTIMIZE: _optimize,
}


def scenario_parameters(
    scenario: Scenario,
    targets: ScenarioTargets,
    environ: Optional[dict[str, str]] = None
) -> ParameterSet:
    """
    Parameters of a scenario, later entries winning: measured defaults,
    parameter file with its bases, environment, the scenario's overrides
    from the targets file, the scenario overrides and the seed.
    """
    params = load_parameters(scenario.config_path, environ)
    params = apply_overrides(params, targets.overrides)
    params = apply_overrides(params, scenario.overrides)
    return apply_overrides(params, {'rng_seed': scenario.seed})


def compute_scenario(
    scenario: Scenario,
    targets: ScenarioTargets,
    environ: Optional[dict[str, str]] = None
) -> ScenarioResult:
    """ Run a scenario without comparing or writing anything. """
    params = scenario_parameters(scenario, targets, environ)
    config = build_config(params)
    ctx = _Context(params=params, config=config, inputs=targets.inputs, seed=scenario.seed)

    logging.info('Running scenario %s with seed %d.', scenario.kind, scenario.seed)
    try:
        result = _RUNNERS[scenario.kind](ctx)
    except ScenarioError:
        raise
    except (SmpdError, ValueError) as e:
        raise ScenarioError(f'Scenario {scenario.kind} failed: {e}') from e

    result.metadata.update({
        'version': __version__,
        'parameters': params.as_dict(),
    })
    return result


def _write_files(output_dir: Path, result: ScenarioResult) -> list[Path]:
    files = []
    for name, curve in sorted(result.curves.items()):
        path = output_dir / f'{name}.csv'
        write_csv(path, curve.header, curve.rows)
        files.append(path)
    for name, trace in sorted(result.traces.items()):
        path = output_dir / f'{name}.csv'
        trace.to_csv(path)
        files.append(path)
    return files


def run_scenario(
    scenario: Scenario,
    environ: Optional[dict[str, str]] = None,
    targets_path: Optional[Path] = None
) -> ScenarioReport:
    """
    Run a scenario and write its files to scenario.output_dir: one CSV per
    curve and trace, summary.json and summary.txt.

    Failures of the models, fitters or the simulation are raised as
    ScenarioError naming the scenario.
    """
    all_targets = load_targets(targets_path)
    targets = all_targets.get(str(scenario.kind), None)
    if targets is None:
        raise ScenarioError(f'No targets for scenario {scenario.kind}!')

    result = compute_scenario(scenario, targets, environ)
    checks = evaluate_all(targets.targets, result.values, result.exposure)

    output_dir = Path(scenario.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    files = _write_files(output_dir, result)

    summary_json = output_dir / 'summary.json'
    write_summary_json(summary_json, str(scenario.kind), scenario.seed, checks, result.values, result.exposure,
                       result.metadata)
    files.append(summary_json)

    parameters = str(scenario.config_path) if scenario.config_path else None
    summary = render_summary(str(scenario.kind), scenario.seed, checks, [f.name for f in files], parameters)
    summary_txt = output_dir / 'summary.txt'
    summary_txt.write_text(summary, encoding='utf-8')
    files.append(summary_txt)

    return ScenarioReport(result=result, checks=checks, files=files, summary=summary)


def scenario_names() -> Sequence[str]:
    """ Names of all scenario kinds. """
    return [str(kind) for kind in ScenarioKind]
