""" Parameter file loading. """
from __future__ import annotations

import functools
import importlib.resources
import logging
import os

from pathlib import Path
from typing import Any, Iterator, Optional

import yaml

from smpd import data
from smpd.core.params import CycleTiming, DeviceParams, NoiseEnvironment, TuningState
from smpd.sim.trace import SignalSource, SimulationConfig

from . import DomainError, InvalidConfiguration
from .schema import Schema, merge_dict
from .types.signal_kind import SignalKind


# Base name of the packaged measured operating point.
DEFAULTS_BASE = 'measured-defaults'
DEFAULTS_FILE = 'measured_defaults.yaml'
# Prefix of the environment variables overriding parameters.
ENV_PREFIX = 'SMPD_'


@functools.lru_cache(maxsize=1)
def parameter_schema() -> Schema:
    """ The packaged parameter schema. """
    return Schema()


class BaseResolver:
    """
    Resolve bases defined in the yaml parameter files.

    A base is a path relative to the file naming it, or the special name
    measured-defaults.
    """

    def load(self, config_file: Optional[Path | str]) -> dict[str, Any]:
        """
        Load config_file and all of its bases.
        The measured defaults are always the first base.
        """
        config: dict[str, Any] = {
            'base': [str(Path(config_file).absolute())] if config_file else []
        }
        loaded: set[str] = set()
        while config['base']:
            base_name = config['base'].pop(0)
            if base_name in loaded:
                raise InvalidConfiguration(f'Parameter file {base_name} is included twice!')
            loaded.add(base_name)

            old = config
            config = self._load_file(base_name)
            bases = config.get('base', [])
            if isinstance(bases, str):
                bases = [bases]
            if not isinstance(bases, list):
                raise InvalidConfiguration(f'base of {base_name} must be a name or a list of names!')
            config['base'] = [self._qualify(b, base_name) for b in bases]
            merge_dict(config, old)

        del config['base']
        defaults = self._load_file(DEFAULTS_BASE)
        defaults.pop('base', None)
        merge_dict(defaults, config)
        return defaults

    @staticmethod
    def _qualify(base: str, including: str) -> str:
        if base == DEFAULTS_BASE:
            return base
        return str((Path(including).parent / base).absolute())

    def _load_file(self, filename: str) -> dict[str, Any]:
        if filename == DEFAULTS_BASE:
            path = importlib.resources.files(data) / DEFAULTS_FILE
        else:
            path = Path(filename)
            if not path.is_file():
                raise InvalidConfiguration(f'Parameter file {filename} not found!')

        logging.debug('Loading parameter file %s', filename)
        with path.open('r', encoding='utf-8') as f:
            try:
                content = yaml.load(f, yaml.SafeLoader)
            except yaml.YAMLError as e:
                raise InvalidConfiguration(f'Parameter file {filename} is not valid yaml: {e}') from e

        if not content:
            content = {}
        if not isinstance(content, dict):
            raise InvalidConfiguration(f'Parameter file {filename} is not a key-value mapping!')
        return content


def _unknown_key(key: str) -> InvalidConfiguration:
    schema = parameter_schema()
    stem = key.rsplit('_', 1)[0]
    similar = [k for k in schema.keys() if k.rsplit('_', 1)[0] == stem]
    if similar:
        return InvalidConfiguration(f'Unknown parameter {key}, unit mismatch? Expected {", ".join(similar)}.')
    return InvalidConfiguration(f'Unknown parameter {key}!')


class ParameterSet:
    """ Complete and validated parameter values, in the units of the parameter keys. """

    def __init__(self, values: dict[str, Any]) -> None:
        schema = parameter_schema()
        self._values: dict[str, Any] = {}
        for key, value in values.items():
            if key not in schema:
                raise _unknown_key(key)
            self._values[key] = schema[key].parse(value)

        missing = [k for k in schema.keys() if k not in self._values]
        if missing:
            raise InvalidConfiguration(f'Missing parameters: {", ".join(missing)}')

    def __getitem__(self, key: str) -> Any:
        if key not in self._values:
            raise _unknown_key(key)
        return self._values[key]

    def __iter__(self) -> Iterator[str]:
        return iter(self._values)

    def internal(self, key: str) -> Any:
        """ Value of key in the internal unit. """
        return parameter_schema()[key].to_internal(self[key])

    def as_dict(self) -> dict[str, Any]:
        """ Copy of the values. """
        return dict(self._values)

    def with_overrides(self, overrides: dict[str, Any]) -> ParameterSet:
        """ Copy with overridden values. """
        values = self.as_dict()
        for key, value in overrides.items():
            if key not in values:
                raise _unknown_key(key)
            values[key] = value
        return ParameterSet(values)


def env_overrides(environ: Optional[dict[str, str]] = None) -> dict[str, Any]:
    """ Parameter overrides from SMPD_<KEY> environment variables. """
    environ = dict(os.environ) if environ is None else environ
    overrides = {}
    for key in parameter_schema().keys():
        value = environ.get(f'{ENV_PREFIX}{key.upper()}', None)
        if value is not None:
            overrides[key] = yaml.safe_load(value)
            logging.info('Parameter %s overridden by environment: %s', key, value)
    return overrides


def parse_override(text: str) -> tuple[str, Any]:
    """ Parse a key=value override, the value as yaml scalar. """
    if '=' not in text:
        raise InvalidConfiguration(f'Override {text} is not of the form key=value!')
    key, value = text.split('=', 1)
    key = key.strip()
    if key not in parameter_schema():
        raise _unknown_key(key)
    return key, yaml.safe_load(value)


def load_parameters(path: Optional[Path | str] = None, environ: Optional[dict[str, str]] = None) -> ParameterSet:
    """ Parameter file with all bases and environment overrides applied. """
    values = BaseResolver().load(path)
    values.update(env_overrides(environ))
    return ParameterSet(values)


def apply_overrides(params: ParameterSet, overrides: dict[str, Any]) -> ParameterSet:
    """ Parameter set with the overrides of a scenario applied. """
    return params.with_overrides(overrides)


def build_config(params: ParameterSet) -> SimulationConfig:
    """ SimulationConfig from a parameter set. Domain violations name the offending key. """
    schema = parameter_schema()

    def _section(name: str) -> dict[str, Any]:
        return {info.field: params.internal(info.name) for info in schema.section(name)}

    section = 'device'
    try:
        device = DeviceParams(**_section('device'))

        section = 'tuning'
        tuning_values = _section('tuning')
        xi0 = tuning_values.pop('xi0')
        cooperativity = tuning_values.pop('cooperativity')
        if xi0 is not None:
            tuning = TuningState.from_xi0(device, xi0, **tuning_values)
        else:
            tuning = TuningState.from_cooperativity(device, cooperativity, **tuning_values)

        section = 'timing'
        timing = CycleTiming(**_section('timing'))
        timing.check_window(device.t1)

        section = 'noise'
        noise_values = _section('noise')
        noise = NoiseEnvironment.from_temperatures(
            device,
            field_temperature=noise_values['field_temperature'],
            alpha_p=noise_values['alpha_p'],
            cryostat_temperature=noise_values['cryostat_temperature'],
            n_th_b=noise_values['n_th_b']
        )

        section = 'signal'
        signal_values = _section('signal')
        kind = SignalKind.from_str(signal_values.pop('kind'))
        detuning = signal_values.pop('detuning')
        omega = device.omega_b + detuning if kind == SignalKind.COHERENT else None
        signal = SignalSource(kind=kind or SignalKind.NONE, omega=omega, **signal_values)

        section = 'simulation'
        return SimulationConfig(
            device=device, tuning=tuning, timing=timing, noise=noise, signal=signal, **_section('simulation'))
    except DomainError as e:
        key = schema.key_of(e.field, [section]) if e.field else None
        raise InvalidConfiguration(f'Invalid value of {key or e.field or section}: {e}') from e


def load_config(path: Optional[Path | str] = None, environ: Optional[dict[str, str]] = None) -> SimulationConfig:
    """
    Load a parameter file as SimulationConfig.

    The measured defaults fill every key the file and its bases do not set.
    Without path, the defaults are returned.
    """
    return build_config(load_parameters(path, environ))
