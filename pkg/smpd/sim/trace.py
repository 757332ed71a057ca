""" Simulation inputs and the click trace record. """
from __future__ import annotations

import csv
import logging

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from typing_extensions import Self

from smpd.common import DomainError, InvalidConfiguration
from smpd.common.types.click_cause import ClickCause
from smpd.common.types.signal_kind import SignalKind
from smpd.core.params import CycleTiming, DeviceParams, NoiseEnvironment, TuningState


def derive_seed(seed: int, *keys: int) -> int:
    """ Independent 64-bit seed for the sub-run identified by keys. """
    sequence = np.random.SeedSequence([seed, *keys])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class SignalSource:
    """ Photon source at the detector input. """

    kind: SignalKind = SignalKind.NONE
    # Coherent photon flux in photons/s.
    flux: float = 0.0
    # Coherent signal frequency, None is the buffer frequency.
    omega: Optional[float] = None
    # Radiative decay rate of the spin.
    gamma_r: float = 0.0
    # Share of the spin emission into the resonator mode.
    eta_reso: float = 1.0
    # Transmission from the spin resonator to the detector.
    eta_loss: float = 1.0
    # Time between two spin π pulses.
    pulse_period: float = 0.0
    # Click rate in excess of the analytic dark rate.
    background_rate: float = 0.0

    def __post_init__(self) -> None:
        if not self.flux >= 0:
            raise DomainError(f'Photon flux must not be negative, but is {self.flux}!', field='flux')
        if not self.background_rate >= 0:
            raise DomainError(f'Background rate must not be negative, but is {self.background_rate}!',
                              field='background_rate')
        for name in ('eta_reso', 'eta_loss'):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise DomainError(f'{name} must be in [0, 1], but is {value}!', field=name)
        if self.kind == SignalKind.SPIN:
            if not self.gamma_r > 0:
                raise DomainError(f'Spin decay rate must be positive, but is {self.gamma_r}!', field='gamma_r')
            if not self.pulse_period > 0:
                raise DomainError(f'Pulse period must be positive, but is {self.pulse_period}!',
                                  field='pulse_period')

    @classmethod
    def none(cls) -> Self:
        """ No signal. """
        return cls()

    @classmethod
    def coherent(cls, flux: float, omega: Optional[float] = None) -> Self:
        """ Monochromatic photon flux at omega. """
        return cls(kind=SignalKind.COHERENT, flux=flux, omega=omega)

    @classmethod
    def spin(
        cls,
        gamma_r: float,
        eta_reso: float,
        eta_loss: float,
        pulse_period: float,
        background_rate: float = 0.0
    ) -> Self:
        """ Single spin excited by a π pulse every pulse_period. """
        return cls(kind=SignalKind.SPIN, gamma_r=gamma_r, eta_reso=eta_reso, eta_loss=eta_loss,
                   pulse_period=pulse_period, background_rate=background_rate)


@dataclass(frozen=True)
class SimulationConfig:
    """ Everything a simulation run depends on. """

    device: DeviceParams
    tuning: TuningState
    timing: CycleTiming
    noise: NoiseEnvironment
    signal: SignalSource = field(default_factory=SignalSource)
    # Simulated wall time in s.
    duration: float = 1.0
    rng_seed: int = 0
    # Perfect single round reset, else up to three π pulse rounds with success f_pi.
    ideal_reset: bool = True
    # Reduce the conversion by the impedance matching factor κ_b,c/κ_b.
    with_internal_losses: bool = False

    def __post_init__(self) -> None:
        if not self.duration >= 0:
            raise DomainError(f'Duration must not be negative, but is {self.duration}!', field='duration')
        if 0 < self.duration < self.timing.t_d + self.timing.t_ro:
            raise DomainError(f'Duration {self.duration} s is shorter than one cycle!', field='duration')
        if not 0 <= self.rng_seed < 2 ** 64:
            raise DomainError(f'Seed must be a 64-bit unsigned integer, but is {self.rng_seed}!', field='rng_seed')

    def with_changes(self, **changes) -> Self:
        """ Copy with changed fields. """
        return replace(self, **changes)

    def derived(self, *keys: int) -> Self:
        """ Copy with an independent seed for the sub-run identified by keys. """
        return replace(self, rng_seed=derive_seed(self.rng_seed, *keys))


@dataclass(frozen=True)
class Click:
    """ One detector click. """

    cycle_index: int
    # Wall time of the end of the readout in s.
    wall_time: float
    cause: ClickCause


@dataclass(frozen=True)
class TraceStatistics:
    """ Aggregated counts of one or more traces. Addition is associative and commutative. """

    counts: tuple[tuple[ClickCause, int], ...]
    total_cycles: int
    total_wall_time: float
    total_reset_rounds: int = 0

    @classmethod
    def empty(cls) -> Self:
        """ Neutral element of the addition. """
        return cls(counts=tuple((cause, 0) for cause in ClickCause), total_cycles=0, total_wall_time=0.0)

    def __add__(self, other: TraceStatistics) -> TraceStatistics:
        theirs = dict(other.counts)
        return TraceStatistics(
            counts=tuple((cause, n + theirs.get(cause, 0)) for cause, n in self.counts),
            total_cycles=self.total_cycles + other.total_cycles,
            total_wall_time=self.total_wall_time + other.total_wall_time,
            total_reset_rounds=self.total_reset_rounds + other.total_reset_rounds
        )

    @property
    def total_clicks(self) -> int:
        """ Number of clicks of all causes. """
        return sum(n for _, n in self.counts)

    def count(self, cause: ClickCause) -> int:
        """ Number of clicks of one cause. """
        return dict(self.counts).get(cause, 0)

    def rate(self, cause: Optional[ClickCause] = None) -> float:
        """ Click rate in 1/s, of all clicks or of one cause. """
        if self.total_wall_time <= 0:
            raise DomainError('Rate of an empty trace is undefined.', field='total_wall_time')
        clicks = self.total_clicks if cause is None else self.count(cause)
        return clicks / self.total_wall_time


@dataclass
class ClickTrace:
    """ Record of the clicks of one simulation run. """

    clicks: list[Click]
    total_cycles: int
    total_wall_time: float
    # Detection window of the run, needed for the duty cycle.
    t_d: float
    total_reset_rounds: int = 0

    @property
    def mean_cycle_duration(self) -> float:
        """ Mean wall time of one cycle. """
        if self.total_cycles == 0:
            return 0.0
        return self.total_wall_time / self.total_cycles

    def __len__(self) -> int:
        return len(self.clicks)

    def statistics(self) -> TraceStatistics:
        """ Per-cause counts and totals. """
        counts = {cause: 0 for cause in ClickCause}
        for click in self.clicks:
            counts[click.cause] += 1
        return TraceStatistics(
            counts=tuple(counts.items()),
            total_cycles=self.total_cycles,
            total_wall_time=self.total_wall_time,
            total_reset_rounds=self.total_reset_rounds
        )

    def counts_by_cause(self) -> dict[ClickCause, int]:
        """ Number of clicks per cause, all causes included. """
        return dict(self.statistics().counts)

    def rate(self, cause: Optional[ClickCause] = None) -> float:
        """ Click rate in 1/s. """
        return self.statistics().rate(cause)

    def wall_times(self) -> np.ndarray:
        """ Click times as array. """
        return np.fromiter((c.wall_time for c in self.clicks), dtype=np.float64, count=len(self.clicks))

    def to_csv(self, path: Path | str) -> None:
        """ Write the trace as comment header plus cycle_index,wall_time_s,cause rows. """
        path = Path(path)
        with path.open('w', encoding='utf-8', newline='') as f:
            f.write(f'# total_cycles={self.total_cycles} total_wall_time_s={self.total_wall_time!r} '
                    f't_d_s={self.t_d!r} total_reset_rounds={self.total_reset_rounds}\n')
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(['cycle_index', 'wall_time_s', 'cause'])
            for click in self.clicks:
                writer.writerow([click.cycle_index, repr(click.wall_time), str(click.cause)])

        logging.debug('Wrote %d clicks to %s', len(self.clicks), path)

    @classmethod
    def from_csv(cls, path: Path | str) -> ClickTrace:
        """ Read a trace written by to_csv. """
        path = Path(path)
        with path.open('r', encoding='utf-8', newline='') as f:
            header = f.readline()
            if not header.startswith('#'):
                raise InvalidConfiguration(f'{path} is not a click trace, the header line is missing!')
            meta = dict(item.split('=', 1) for item in header[1:].split())
            reader = csv.DictReader(f)
            clicks = []
            for row in reader:
                cause = ClickCause.from_str(row['cause'])
                if cause is None:
                    raise InvalidConfiguration(f'Unknown click cause {row["cause"]} in {path}!')
                clicks.append(Click(int(row['cycle_index']), float(row['wall_time_s']), cause))

        return cls(
            clicks=clicks,
            total_cycles=int(meta['total_cycles']),
            total_wall_time=float(meta['total_wall_time_s']),
            t_d=float(meta['t_d_s']),
            total_reset_rounds=int(meta.get('total_reset_rounds', 0))
        )


def aggregate(traces: Iterable[ClickTrace]) -> TraceStatistics:
    """ Combined statistics of independent traces. """
    total = TraceStatistics.empty()
    for trace in traces:
        total = total + trace.statistics()
    return total
