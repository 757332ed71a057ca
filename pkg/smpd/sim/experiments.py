"""
Measurement protocols on top of run_cycles: efficiency against a calibrated
flux, single spin fluorescence and the dark count budget.
"""
from __future__ import annotations

import logging
import math

from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np
import numpy.typing as npt

from smpd.common import DomainError
from smpd.common.constants import TWO_PI
from smpd.common.types.click_cause import ClickCause
from smpd.common.types.signal_kind import SignalKind
from smpd.calib.fit import FitResult
from smpd.core.merit import detector_bandwidth

from .cycles import run_cycles
from .trace import ClickTrace, SignalSource, SimulationConfig, TraceStatistics


# Pump detuning of the "detuned" dark count protocol.
DETUNED_PUMP = TWO_PI * 20e6


def _dark_config(config: SimulationConfig) -> SimulationConfig:
    return replace(config, signal=replace(SignalSource.none(), background_rate=config.signal.background_rate))


def measure_efficiency(config: SimulationConfig, flux_calibration: float) -> float:
    """
    Efficiency (signal click rate - dark rate)/flux.

    The dark rate is measured with the same config without signal and an
    independent seed. flux_calibration is the flux believed to reach the
    detector, e.g. from photon_flux_from_ramsey.
    """
    if not flux_calibration > 0:
        raise DomainError(f'Calibrated flux must be positive, but is {flux_calibration}!', field='flux')
    if config.signal.kind != SignalKind.COHERENT:
        raise DomainError('Efficiency measurement needs a coherent signal!', field='signal_kind')

    on = run_cycles(config)
    off = run_cycles(_dark_config(config).derived(1))
    efficiency = (on.rate() - off.rate()) / flux_calibration

    logging.debug('Efficiency: on %.6g/s, off %.6g/s -> %.4f', on.rate(), off.rate(), efficiency)
    return efficiency


@dataclass(frozen=True)
class EfficiencyPoint:
    """ One point of an efficiency sweep. """

    omega: float
    efficiency: float
    # Poisson standard deviation of the efficiency.
    error: float


def efficiency_sweep(
    config: SimulationConfig,
    offsets: Iterable[float],
    flux: float
) -> list[EfficiencyPoint]:
    """
    Measured efficiency for signal frequencies ω_b + offset.

    The dark rate is measured once and shared by all points; every point uses
    its own derived seed.
    """
    if not flux > 0:
        raise DomainError(f'Photon flux must be positive, but is {flux}!', field='flux')

    dark = run_cycles(_dark_config(config).derived(0))
    dark_rate = dark.rate()
    points = []
    for i, offset in enumerate(offsets):
        omega = config.device.omega_b + offset
        signal = replace(SignalSource.coherent(flux, omega), background_rate=config.signal.background_rate)
        trace = run_cycles(replace(config, signal=signal).derived(1, i))
        efficiency = (trace.rate() - dark_rate) / flux
        error = math.sqrt(len(trace) / trace.total_wall_time ** 2 + len(dark) / dark.total_wall_time ** 2) / flux
        points.append(EfficiencyPoint(omega=omega, efficiency=efficiency, error=error))

    logging.info('Efficiency sweep over %d frequencies done.', len(points))
    return points


@dataclass(frozen=True)
class FluorescenceHistogram:
    """ Clicks binned by the time since the last π pulse. """

    # Bin centers in s.
    times: npt.NDArray[np.float64]
    counts: npt.NDArray[np.int64]
    bin_width: float
    n_repetitions: int

    def rows(self) -> list[tuple[float, int]]:
        """ (t_bin_s, counts) rows. """
        return [(float(t), int(c)) for t, c in zip(self.times, self.counts)]


def run_fluorescence(config: SimulationConfig, n_repetitions: int, bin_width: float) -> FluorescenceHistogram:
    """
    Repeat the spin excitation n_repetitions times and histogram the clicks
    by the time since the preceding π pulse.
    """
    signal = config.signal
    if signal.kind != SignalKind.SPIN:
        raise DomainError('Fluorescence needs a spin signal source!', field='signal_kind')
    if n_repetitions < 1:
        raise DomainError(f'At least one repetition is required, got {n_repetitions}!', field='n_repetitions')

    cycle = config.timing.t_d + config.timing.t_ro
    if bin_width < cycle:
        raise DomainError(f'Bin width {bin_width} s is shorter than the cycle duration {cycle} s!',
                          field='bin_width')
    if signal.pulse_period * signal.gamma_r < 5.0:
        logging.warning('Pulse period %.3g s is not long against the spin lifetime %.3g s.',
                        signal.pulse_period, 1.0 / signal.gamma_r)

    trace = run_cycles(replace(config, duration=n_repetitions * signal.pulse_period))
    times = trace.wall_times()
    since_pulse = times - np.floor(times / signal.pulse_period) * signal.pulse_period

    # Plain floor division loses a bin for periods like 8 ms / 50 µs.
    n_bins = int(math.floor(signal.pulse_period / bin_width + 1e-9))
    edges = np.arange(n_bins + 1) * bin_width
    counts, _ = np.histogram(since_pulse, bins=edges)

    logging.info('Fluorescence: %d clicks in %d repetitions.', len(trace), n_repetitions)
    return FluorescenceHistogram(
        times=edges[:-1] + 0.5 * bin_width,
        counts=counts.astype(np.int64),
        bin_width=bin_width,
        n_repetitions=n_repetitions
    )


def spin_efficiency(fit: FitResult, histogram: FluorescenceHistogram) -> float:
    """ Detected photons per π pulse from an exponential fit of the histogram. """
    if not fit.success or fit['rate'] <= 0:
        raise DomainError('Efficiency needs a successful decay fit!', field='rate')
    # Sum of A·e^(-Γt) over all bins, the tail after the last bin included.
    rate = fit['rate']
    first = fit['amplitude'] * math.exp(-rate * float(histogram.times[0]))
    detected = first / -math.expm1(-rate * histogram.bin_width)
    return detected / histogram.n_repetitions


def protocol_configs(config: SimulationConfig) -> dict[str, SimulationConfig]:
    """ The pump off, detuned and tuned dark count protocols of config. """
    tuning = config.tuning
    if tuning.kappa_d is None:
        tuning = replace(tuning, kappa_d=detector_bandwidth(config.device, tuning))
    dark = _dark_config(config)
    return {
        'off': replace(dark, tuning=replace(tuning, pump_on=False)),
        'detuned': replace(dark, tuning=replace(tuning, pump_on=True, delta_p=DETUNED_PUMP)),
        'tuned': replace(dark, tuning=replace(tuning, pump_on=True, delta_p=0.0)),
    }


@dataclass(frozen=True)
class DarkCountBudget:
    """ Dark count rates by click cause. """

    alpha_q: float
    alpha_p: float
    alpha_th: float
    alpha_ro: float
    total: float
    statistics: TraceStatistics

    def as_dict(self) -> dict[str, float]:
        """ Rates by name. """
        return {'alpha_q': self.alpha_q, 'alpha_p': self.alpha_p, 'alpha_th': self.alpha_th,
                'alpha_ro': self.alpha_ro, 'total': self.total}


def dark_count_budget(config: SimulationConfig) -> DarkCountBudget:
    """ Per-cause dark count rates of a simulated trace without signal. """
    if config.signal.kind != SignalKind.NONE:
        raise DomainError('Dark count budget must be measured without signal!', field='signal_kind')

    statistics = run_cycles(config).statistics()
    return budget_from_statistics(statistics)


def budget_from_statistics(statistics: TraceStatistics) -> DarkCountBudget:
    """ Dark count budget of aggregated trace statistics. """
    return DarkCountBudget(
        alpha_q=statistics.rate(ClickCause.QUBIT_THERMAL),
        alpha_p=statistics.rate(ClickCause.PUMP_HEATING),
        alpha_th=statistics.rate(ClickCause.THERMAL),
        alpha_ro=statistics.rate(ClickCause.READOUT_ERROR),
        total=statistics.rate(),
        statistics=statistics
    )


def traces_by_protocol(config: SimulationConfig) -> dict[str, ClickTrace]:
    """ Simulated traces of the three dark count protocols, each with its own seed. """
    return {name: run_cycles(protocol.derived(i))
            for i, (name, protocol) in enumerate(protocol_configs(config).items())}
