"""
Event-driven simulation of the detection, readout and reset cycle.

Every excitation process is a Bernoulli trial per cycle. Instead of drawing
all of them for every cycle, the simulator draws the gap to the next cycle
in which a process fires from the geometric distribution and only steps
through the cycles where something happens. Quiet cycles in between take
exactly t_d + t_ro.
"""
import heapq
import logging
import math
import sys

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from smpd.common import DomainError
from smpd.common.types.click_cause import ClickCause
from smpd.common.types.signal_kind import SignalKind
from smpd.core.merit import (
    conversion_efficiency, dark_budget, detector_bandwidth, eta_omega, eta_smpd, pump_excitation_rate,
    qubit_population, thermal_occupation
)

from .readout import ReadoutModel
from .trace import Click, ClickTrace, SimulationConfig


_NEVER = sys.maxsize
_BATCH = 1024
# Maximum number of π pulse rounds of an imperfect reset.
MAX_RESET_ROUNDS = 3


def _generators(seed: int, count: int) -> list[np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.Generator(np.random.Philox(child)) for child in children]


def _window_probability(rate: float, t_d: float) -> float:
    """ Probability of at least one event of a Poisson process within the window. """
    return -math.expm1(-rate * t_d)


class _BernoulliStream:
    """ Cycles in which an independent per-cycle Bernoulli trial succeeds. """

    def __init__(self, cause: ClickCause, probability: float, rng: np.random.Generator) -> None:
        self.cause = cause
        self.probability = probability
        self._rng = rng
        self._gaps = np.empty(0, dtype=np.int64)
        self._index = 0
        self.pending = _NEVER if probability <= 0 else self._gap() - 1

    def _gap(self) -> int:
        if self.probability >= 1.0:
            return 1
        if self._index >= len(self._gaps):
            self._gaps = self._rng.geometric(self.probability, size=_BATCH)
            self._index = 0
        gap = int(self._gaps[self._index])
        self._index += 1
        return gap

    def advance(self) -> None:
        """ Move to the next successful cycle. """
        if self.pending != _NEVER:
            self.pending += self._gap()


class _SpinArrivals:
    """ Photon arrival times of a spin excited every pulse period. """

    def __init__(self, config: SimulationConfig, rng: np.random.Generator) -> None:
        signal = config.signal
        self._rng = rng
        self._period = signal.pulse_period
        self._gamma = signal.gamma_r
        self._emission = signal.eta_reso * signal.eta_loss
        self._end = config.duration
        self._next_pulse = 0
        self._heap: list[float] = []

    def _fill(self) -> None:
        # Arrivals of later pulses are not earlier than the pulse itself.
        while self._next_pulse * self._period < self._end and \
                (not self._heap or self._heap[0] >= self._next_pulse * self._period):
            pulses = np.arange(self._next_pulse, self._next_pulse + _BATCH)
            pulses = pulses[pulses * self._period < self._end]
            emitted = self._rng.random(len(pulses)) < self._emission
            delays = self._rng.exponential(1.0 / self._gamma, size=len(pulses))
            for arrival in pulses[emitted] * self._period + delays[emitted]:
                heapq.heappush(self._heap, float(arrival))
            self._next_pulse += _BATCH

    def peek(self) -> Optional[float]:
        """ Earliest pending arrival time. """
        self._fill()
        return self._heap[0] if self._heap else None

    def pop(self) -> float:
        """ Remove the earliest pending arrival. """
        self._fill()
        return heapq.heappop(self._heap)


@dataclass
class _Cursor:
    """ Start of the next cycle. """

    cycle: int = 0
    time: float = 0.0
    clicks: list[Click] = field(default_factory=list)
    reset_rounds: int = 0


def _excitation_streams(config: SimulationConfig, generators: list[np.random.Generator],
                        readout: ReadoutModel) -> list[_BernoulliStream]:
    device, tuning, timing, noise, signal = config.device, config.tuning, config.timing, config.noise, config.signal
    t_d = timing.t_d
    eta_conversion = conversion_efficiency(device, tuning, config.with_internal_losses)
    kappa_d = detector_bandwidth(device, tuning)

    signal_rate = 0.0
    if signal.kind == SignalKind.COHERENT:
        omega = device.omega_b if signal.omega is None else signal.omega
        signal_rate = signal.flux * eta_omega(omega, device.omega_b, kappa_d) * eta_conversion

    thermal_rate = thermal_occupation(noise, device.omega_b) * kappa_d * eta_conversion / 4.0
    if signal.background_rate > 0:
        thermal_rate += pump_excitation_rate(signal.background_rate, timing, device.t1, readout.excited_probability())

    qubit_probability = qubit_population(noise, device) * -math.expm1(-t_d / device.t1)
    pump_rate = pump_excitation_rate(noise.alpha_p, timing, device.t1, device.f_ro) if tuning.pump_on else 0.0

    logging.debug('Excitation rates during the window: signal %.6g/s, thermal %.6g/s, pump %.6g/s, '
                  'qubit probability per cycle %.6g', signal_rate, thermal_rate, pump_rate, qubit_probability)

    return [
        _BernoulliStream(ClickCause.SIGNAL, _window_probability(signal_rate, t_d), generators[0]),
        _BernoulliStream(ClickCause.THERMAL, _window_probability(thermal_rate, t_d), generators[1]),
        _BernoulliStream(ClickCause.QUBIT_THERMAL, qubit_probability, generators[2]),
        _BernoulliStream(ClickCause.PUMP_HEATING, _window_probability(pump_rate, t_d), generators[3]),
    ]


def run_cycles(config: SimulationConfig) -> ClickTrace:
    """
    Simulate the cyclic operation of the detector for config.duration.

    Each cycle consists of the detection window, the readout and, after a
    click, the reset. An excitation created at time t of the window survives
    until the readout with probability e^(-(t_d - t)/T1). A surviving
    excitation is read as a click with the readout fidelity, a qubit in the
    ground state gives a false positive click with the readout's false
    positive probability. A missed excitation is not carried into the next
    cycle.

    The ideal reset takes one round and always leaves the qubit in the
    ground state. The imperfect reset applies π pulses with success f_pi and
    reads again, for at most three rounds; a qubit still excited afterwards
    starts the next cycle excited. Every round adds t_reset_unit to the cycle.

    The result only depends on the config, including rng_seed.
    """
    device, timing = config.device, config.timing
    t_d, t1 = timing.t_d, device.t1
    base = t_d + timing.t_ro

    readout = ReadoutModel.from_fidelity(device.f_ro, device.p_false_positive, timing.t_ro)
    generators = _generators(config.rng_seed, 7)
    streams = _excitation_streams(config, generators, readout)
    false_positives = _BernoulliStream(ClickCause.READOUT_ERROR, readout.false_positive_probability(), generators[4])
    rng = generators[5]
    spin = _SpinArrivals(config, generators[6]) if config.signal.kind == SignalKind.SPIN else None
    spin_conversion = conversion_efficiency(device, config.tuning, config.with_internal_losses)

    cursor = _Cursor()
    carry: Optional[ClickCause] = None

    def _cycles_left() -> int:
        return max(int(math.floor((config.duration - cursor.time) / base + 1e-9)), 0)

    def _cycle_of(arrival: float) -> int:
        return cursor.cycle + int((arrival - cursor.time) // base)

    while True:
        if carry is not None:
            k = cursor.cycle
        else:
            k = min(s.pending for s in streams)
            k = min(k, false_positives.pending)
            if spin is not None:
                arrival = spin.peek()
                while arrival is not None and arrival < cursor.time:
                    spin.pop()
                    arrival = spin.peek()
                if arrival is not None:
                    k = min(k, _cycle_of(arrival))

        if k == _NEVER or k - cursor.cycle >= _cycles_left():
            break

        start = cursor.time + (k - cursor.cycle) * base
        excitations: list[tuple[float, ClickCause]] = []
        if carry is not None:
            excitations.append((0.0, carry))
            carry = None

        for stream in streams:
            while stream.pending < k:
                stream.advance()
            if stream.pending == k:
                excitations.append((rng.random() * t_d, stream.cause))
                stream.advance()

        while false_positives.pending < k:
            false_positives.advance()
        false_positive = false_positives.pending == k
        if false_positive:
            false_positives.advance()

        if spin is not None:
            arrival = spin.peek()
            while arrival is not None and arrival < start + base:
                spin.pop()
                offset = arrival - start
                if 0.0 <= offset < t_d and rng.random() < spin_conversion:
                    excitations.append((offset, ClickCause.SIGNAL))
                arrival = spin.peek()

        survivors = [(t, cause) for t, cause in excitations if rng.random() < math.exp(-(t_d - t) / t1)]
        excited = bool(survivors)
        if excited:
            cause = max(survivors, key=lambda e: e[0])[1]
            clicked = readout.read_excited(rng)
        else:
            cause = ClickCause.READOUT_ERROR
            clicked = false_positive

        rounds = 0
        if clicked:
            cursor.clicks.append(Click(cycle_index=k, wall_time=start + base, cause=cause))
            if config.ideal_reset:
                rounds = 1
            else:
                rounds, excited = _reset(rng, readout, device.f_pi, excited)
                if excited:
                    carry = cause

        cursor.reset_rounds += rounds
        cursor.time = start + base + rounds * timing.t_reset_unit
        cursor.cycle = k + 1

    quiet = _cycles_left()
    total_cycles = cursor.cycle + quiet
    total_wall_time = cursor.time + quiet * base

    logging.debug('Simulated %d cycles in %.6g s: %d clicks, %d reset rounds, seed %d',
                  total_cycles, total_wall_time, len(cursor.clicks), cursor.reset_rounds, config.rng_seed)

    return ClickTrace(
        clicks=cursor.clicks,
        total_cycles=total_cycles,
        total_wall_time=total_wall_time,
        t_d=t_d,
        total_reset_rounds=cursor.reset_rounds
    )


def _reset(rng: np.random.Generator, readout: ReadoutModel, f_pi: float, excited: bool) -> tuple[int, bool]:
    """ Conditional reset rounds. Returns the number of rounds and the final qubit state. """
    rounds = 0
    while rounds < MAX_RESET_ROUNDS:
        rounds += 1
        if rng.random() < f_pi:
            excited = not excited
        if excited:
            still_excited = readout.read_excited(rng)
        else:
            still_excited = bool(rng.random() < readout.false_positive_probability())
        if not still_excited:
            break
    return rounds, excited


def duty_cycle_estimate(trace: ClickTrace) -> float:
    """ Measured duty cycle t_d·cycles/wall time. """
    if trace.total_cycles == 0 or trace.total_wall_time <= 0:
        raise DomainError('Duty cycle of an empty trace is undefined.', field='total_cycles')
    return trace.t_d * trace.total_cycles / trace.total_wall_time


def predicted_click_rate(config: SimulationConfig) -> float:
    """ Analytic click rate α_q + α_p + α_th + α_ro plus background and signal. """
    device, tuning, timing = config.device, config.tuning, config.timing
    budget = dark_budget(device, tuning, timing, config.noise, config.with_internal_losses)
    rate = budget.alpha_total + config.signal.background_rate

    signal = config.signal
    if signal.kind == SignalKind.COHERENT and signal.flux > 0:
        omega = device.omega_b if signal.omega is None else signal.omega
        rate += signal.flux * eta_smpd(device, tuning, timing, omega, config.with_internal_losses).total
    elif signal.kind == SignalKind.SPIN:
        rate += signal.eta_reso * signal.eta_loss * budget.eta_smpd / signal.pulse_period

    return rate
