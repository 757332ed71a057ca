""" Tests for the simulation inputs and the click trace record. """
from pathlib import Path

import pytest

from smpd.common import DomainError, InvalidConfiguration
from smpd.common.config import load_config
from smpd.common.types.click_cause import ClickCause
from smpd.common.types.signal_kind import SignalKind
from smpd.sim.trace import Click, ClickTrace, SignalSource, TraceStatistics, aggregate, derive_seed


DEFAULTS = load_config(environ={})


def _trace(*causes: ClickCause, cycles: int = 1000, wall_time: float = 0.015625) -> ClickTrace:
    clicks = [Click(cycle_index=10 * i, wall_time=(10 * i + 1) * 15.8e-6, cause=cause)
              for i, cause in enumerate(causes)]
    return ClickTrace(clicks=clicks, total_cycles=cycles, total_wall_time=wall_time, t_d=15e-6,
                      total_reset_rounds=len(causes))


class TestSeeds:
    """ Tests for the seed derivation. """

    def test_derive_seed(self):
        """ Derived seeds are reproducible 64-bit integers, distinct per key. """
        seeds = {derive_seed(7, i) for i in range(100)}
        assert len(seeds) == 100
        assert all(0 <= s < 2 ** 64 for s in seeds)
        assert derive_seed(7, 3) == derive_seed(7, 3)
        assert derive_seed(7, 3) != derive_seed(8, 3)
        assert derive_seed(7, 3, 1) != derive_seed(7, 3)

    def test_derived_config(self):
        """ A derived configuration only changes the seed. """
        config = DEFAULTS.with_changes(rng_seed=11)
        derived = config.derived(2)
        assert derived.rng_seed == derive_seed(11, 2)
        assert derived.with_changes(rng_seed=11) == config


class TestSimulationConfig:
    """ Tests for the configuration checks. """

    def test_duration(self):
        """ Zero duration is allowed, less than one cycle is not. """
        assert DEFAULTS.with_changes(duration=0.0).duration == 0.0
        with pytest.raises(DomainError) as e:
            DEFAULTS.with_changes(duration=10e-6)
        assert e.value.field == 'duration'
        with pytest.raises(DomainError):
            DEFAULTS.with_changes(duration=-1.0)

    def test_seed_range(self):
        """ Seeds are 64-bit unsigned integers. """
        assert DEFAULTS.with_changes(rng_seed=2 ** 64 - 1).rng_seed == 2 ** 64 - 1
        with pytest.raises(DomainError):
            DEFAULTS.with_changes(rng_seed=2 ** 64)
        with pytest.raises(DomainError):
            DEFAULTS.with_changes(rng_seed=-1)


class TestSignalSource:
    """ Tests for the signal sources. """

    def test_kinds(self):
        """ The constructors set the kind. """
        assert SignalSource.none().kind == SignalKind.NONE
        coherent = SignalSource.coherent(500.0)
        assert coherent.kind == SignalKind.COHERENT
        assert coherent.omega is None
        spin = SignalSource.spin(gamma_r=806.0, eta_reso=0.6, eta_loss=0.85, pulse_period=8e-3)
        assert spin.kind == SignalKind.SPIN
        assert spin.background_rate == 0.0

    def test_validation(self):
        """ Negative fluxes, bad efficiencies and incomplete spins are rejected. """
        with pytest.raises(DomainError):
            SignalSource.coherent(-1.0)
        with pytest.raises(DomainError) as e:
            SignalSource.spin(gamma_r=806.0, eta_reso=1.2, eta_loss=0.85, pulse_period=8e-3)
        assert e.value.field == 'eta_reso'
        with pytest.raises(DomainError):
            SignalSource.spin(gamma_r=0.0, eta_reso=0.6, eta_loss=0.85, pulse_period=8e-3)
        with pytest.raises(DomainError):
            SignalSource.spin(gamma_r=806.0, eta_reso=0.6, eta_loss=0.85, pulse_period=0.0)


class TestTraceStatistics:
    """ Tests for the aggregated counts. """

    def test_counts(self):
        """ All causes are counted, missing ones as zero. """
        statistics = _trace(ClickCause.THERMAL, ClickCause.THERMAL, ClickCause.SIGNAL).statistics()
        assert statistics.count(ClickCause.THERMAL) == 2
        assert statistics.count(ClickCause.PUMP_HEATING) == 0
        assert statistics.total_clicks == 3
        assert statistics.rate() == pytest.approx(3 / 0.015625)
        assert statistics.rate(ClickCause.SIGNAL) == pytest.approx(1 / 0.015625)

    def test_addition(self):
        """ Addition is associative and commutative with the empty statistics as neutral element. """
        a = _trace(ClickCause.THERMAL).statistics()
        b = _trace(ClickCause.SIGNAL, ClickCause.READOUT_ERROR, cycles=500).statistics()
        c = _trace(ClickCause.QUBIT_THERMAL, wall_time=0.03125).statistics()

        assert (a + b) + c == a + (b + c)
        assert (a + b).counts == (b + a).counts
        assert a + TraceStatistics.empty() == a
        total = a + b + c
        assert total.total_cycles == 2500
        assert total.total_reset_rounds == 4
        assert total.total_wall_time == pytest.approx(0.0625)

    def test_empty_rate(self):
        """ The rate of no wall time is undefined. """
        with pytest.raises(DomainError):
            TraceStatistics.empty().rate()

    def test_aggregate(self):
        """ aggregate adds the statistics of all traces. """
        traces = [_trace(ClickCause.THERMAL), _trace(ClickCause.SIGNAL, ClickCause.SIGNAL)]
        total = aggregate(traces)
        assert total.count(ClickCause.SIGNAL) == 2
        assert total.total_cycles == 2000
        assert aggregate([]) == TraceStatistics.empty()


class TestClickTrace:
    """ Tests for the click trace. """

    def test_accessors(self):
        """ Counts, times and the mean cycle duration. """
        trace = _trace(ClickCause.THERMAL, ClickCause.SIGNAL)
        assert len(trace) == 2
        assert trace.counts_by_cause()[ClickCause.SIGNAL] == 1
        assert len(trace.counts_by_cause()) == len(ClickCause)
        assert trace.wall_times().tolist() == pytest.approx([15.8e-6, 11 * 15.8e-6])
        assert trace.mean_cycle_duration == pytest.approx(15.625e-6)
        assert trace.rate(ClickCause.THERMAL) == pytest.approx(1 / 0.015625)
        assert _trace(cycles=0, wall_time=0.0).mean_cycle_duration == 0.0

    def test_csv(self, tmp_path: Path):
        """ The CSV file keeps every click and the totals exactly. """
        trace = _trace(ClickCause.THERMAL, ClickCause.SIGNAL, ClickCause.PUMP_HEATING)
        path = tmp_path / 'trace.csv'
        trace.to_csv(path)

        lines = path.read_text(encoding='utf-8').splitlines()
        assert lines[0].startswith('# total_cycles=1000')
        assert lines[1] == 'cycle_index,wall_time_s,cause'
        assert lines[3].endswith(',signal')

        restored = ClickTrace.from_csv(path)
        assert restored == trace

    def test_csv_errors(self, tmp_path: Path):
        """ Files without header or with unknown causes are rejected. """
        headless = tmp_path / 'headless.csv'
        headless.write_text('cycle_index,wall_time_s,cause\n1,1.58e-05,thermal\n', encoding='utf-8')
        with pytest.raises(InvalidConfiguration, match='header'):
            ClickTrace.from_csv(headless)

        unknown = tmp_path / 'unknown.csv'
        unknown.write_text('# total_cycles=1 total_wall_time_s=1.58e-05 t_d_s=1.5e-05\n'
                           'cycle_index,wall_time_s,cause\n0,1.58e-05,cosmic_ray\n', encoding='utf-8')
        with pytest.raises(InvalidConfiguration, match='cosmic_ray'):
            ClickTrace.from_csv(unknown)
