""" Tests for the parameter file loading. """
import math

from pathlib import Path

import pytest

from smpd.common import InvalidConfiguration, SmpdWarning
from smpd.common.config import ParameterSet, apply_overrides, build_config, env_overrides, load_config, \
    load_parameters, parse_override
from smpd.common.constants import TWO_PI
from smpd.common.types.signal_kind import SignalKind


DATA = Path(__file__).parent / 'data' / 'params'


class TestLoadParameters:
    """ Tests for parameter files with bases. """

    def test_measured_defaults(self):
        """ Without a file the measured operating point is used. """
        params = load_parameters(environ={})

        assert params['t1_us'] == 70.0
        assert params['kappa_d_khz'] == 170.0
        assert params['signal_kind'] == 'none'
        assert params['xi0'] is None
        assert params.internal('t1_us') == pytest.approx(70e-6)
        assert params.internal('omega_b_ghz') == pytest.approx(TWO_PI * 7.7e9)

    def test_base_chain(self):
        """ The file wins over its base, the base over the defaults. """
        params = load_parameters(DATA / 'cold_device.yaml', environ={})

        assert params['t1_us'] == 90.0
        assert params['field_temperature_mk'] == 30.0
        assert params['t_d_us'] == 12.0
        assert params['t_ro_us'] == 0.8
        assert params['chi_b_mhz'] == 3.5

    def test_empty_file(self):
        """ An empty file is the defaults. """
        assert load_parameters(DATA / 'empty.yaml', environ={}).as_dict() == \
            load_parameters(environ={}).as_dict()

    def test_negative_value(self):
        """ Values outside of the schema range are rejected. """
        with pytest.raises(InvalidConfiguration, match='t1_us'):
            load_parameters(DATA / 'negative_t1.yaml', environ={})

    def test_unit_mismatch(self):
        """ A key with the wrong unit suffix names the expected key. """
        with pytest.raises(InvalidConfiguration, match='unit mismatch.*t1_us'):
            load_parameters(DATA / 'unit_mismatch.yaml', environ={})

    def test_unknown_key(self):
        """ Unknown keys are rejected. """
        with pytest.raises(InvalidConfiguration, match='Unknown parameter flux_capacitor'):
            load_parameters(DATA / 'unknown_key.yaml', environ={})

    def test_base_loop(self):
        """ A file included twice is rejected. """
        with pytest.raises(InvalidConfiguration, match='included twice'):
            load_parameters(DATA / 'loop_a.yaml', environ={})

    def test_not_a_mapping(self):
        """ The file must be a key-value mapping. """
        with pytest.raises(InvalidConfiguration, match='key-value mapping'):
            load_parameters(DATA / 'not_a_mapping.yaml', environ={})

    def test_missing_file(self, tmp_path: Path):
        """ Missing files are reported. """
        with pytest.raises(InvalidConfiguration, match='not found'):
            load_parameters(tmp_path / 'missing.yaml', environ={})

    def test_invalid_enum(self):
        """ Enum values are checked. """
        with pytest.raises(InvalidConfiguration, match='signal_kind'):
            load_parameters(DATA / 'bad_signal_kind.yaml', environ={})

    def test_invalid_yaml(self, tmp_path: Path):
        """ Broken yaml is a configuration error. """
        broken = tmp_path / 'broken.yaml'
        broken.write_text('t1_us: [70\n', encoding='utf-8')
        with pytest.raises(InvalidConfiguration, match='not valid yaml'):
            load_parameters(broken, environ={})

    def test_missing_parameters(self):
        """ A parameter set must be complete. """
        with pytest.raises(InvalidConfiguration, match='Missing parameters'):
            ParameterSet({'t1_us': 70.0})


class TestOverrides:
    """ Tests for environment and command line overrides. """

    def test_environment(self):
        """ SMPD_<KEY> variables override the file. """
        environ = {'SMPD_T1_US': '50', 'SMPD_PUMP_ON': 'false', 'OTHER': '1'}
        assert env_overrides(environ) == {'t1_us': 50, 'pump_on': False}

        params = load_parameters(DATA / 'cold_device.yaml', environ=environ)
        assert params['t1_us'] == 50.0
        assert params['pump_on'] is False
        assert params['field_temperature_mk'] == 30.0

    def test_parse_override(self):
        """ Overrides are key=value with a yaml value. """
        assert parse_override('t_d_us=12') == ('t_d_us', 12)
        assert parse_override(' pump_on = false') == ('pump_on', False)
        assert parse_override('signal_kind=coherent') == ('signal_kind', 'coherent')
        assert parse_override('xi0=null') == ('xi0', None)

    def test_parse_override_invalid(self):
        """ Malformed or unknown overrides are rejected. """
        with pytest.raises(InvalidConfiguration, match='key=value'):
            parse_override('t_d_us')
        with pytest.raises(InvalidConfiguration, match='unit mismatch'):
            parse_override('kappa_w_khz=1750')

    def test_apply_overrides(self):
        """ Overrides return a new parameter set. """
        params = load_parameters(environ={})
        changed = apply_overrides(params, {'t_d_us': 12, 'cooperativity': 0.99})

        assert changed['t_d_us'] == 12.0
        assert changed['cooperativity'] == 0.99
        assert params['t_d_us'] == 15.0

        with pytest.raises(InvalidConfiguration):
            apply_overrides(params, {'t_d_ms': 0.012})
        with pytest.raises(InvalidConfiguration):
            apply_overrides(params, {'t_d_us': -3})


class TestBuildConfig:
    """ Tests for the conversion into the domain types. """

    def test_defaults(self):
        """ The measured operating point in internal units. """
        config = load_config(environ={})

        assert config.device.omega_b == pytest.approx(TWO_PI * 7.7e9)
        assert config.device.kappa_b == pytest.approx(TWO_PI * 85e3 + 2.2e5)
        assert config.tuning.kappa_d == pytest.approx(TWO_PI * 170e3)
        assert config.tuning.cooperativity == 1.0
        assert config.tuning.is_consistent(config.device)
        assert config.timing.cycle_duration == pytest.approx(15.8e-6)
        assert config.noise.n_th_b == pytest.approx(1.06545e-4, rel=1e-3)
        assert config.noise.cryostat_temperature == pytest.approx(0.010)
        assert config.signal.kind == SignalKind.NONE
        assert config.duration == 1.0
        assert config.ideal_reset
        assert not config.with_internal_losses

    def test_coherent_signal(self):
        """ The signal detuning is relative to the buffer. """
        config = load_config(DATA / 'coherent_signal.yaml', environ={})

        assert config.signal.kind == SignalKind.COHERENT
        assert config.signal.flux == 500.0
        assert config.signal.omega == pytest.approx(config.device.omega_b + TWO_PI * 50e3)
        assert config.duration == 2.0

    def test_pump_amplitude(self):
        """ A given ξ0 sets the cooperativity. """
        params = apply_overrides(load_parameters(environ={}), {'xi0': 0.05})
        config = build_config(params)

        assert config.tuning.xi0 == 0.05
        assert config.tuning.is_consistent(config.device)
        assert config.tuning.cooperativity != 1.0

    def test_explicit_occupation(self):
        """ n_th_b replaces the occupation of the field temperature. """
        params = apply_overrides(load_parameters(environ={}), {'n_th_b': 0.0})
        assert build_config(params).noise.n_th_b == 0.0

    def test_domain_error_names_key(self):
        """ Domain violations of the types name the parameter key. """
        params = apply_overrides(load_parameters(environ={}), {'p_th_q': 0.5})
        with pytest.raises(InvalidConfiguration, match='p_th_q'):
            build_config(params)

    def test_long_window_warns(self):
        """ A detection window beyond T1 is a warning, not an error. """
        with pytest.warns(SmpdWarning, match='not shorter than T1'):
            config = load_config(DATA / 'long_window.yaml', environ={})
        assert config.timing.t_d == pytest.approx(80e-6)
        assert math.isclose(config.device.t1, 70e-6)
