"""
Schema of the parameter files.

The schema lists every key of a parameter file with its section, the
domain field it maps to, its type, unit and accepted range. It is loaded
from smpd/data/schema.yaml.
"""
from __future__ import annotations

import importlib.resources
import logging
import math

from typing import Any, Iterator, Optional

import yaml

from smpd import data

from . import InvalidConfiguration
from .units import UNIT_FACTORS, to_internal


def merge_dict(old: dict, new: dict) -> None:
    """
    Recursively merge one dictionary into another.
    For existing values the behavior depends on the datatype:
        * scalars are overwritten, ints and floats may replace each other
        * None replaces any value and is replaced by any value
        * lists are appended
        * dicts are updated by recursively executing this function
    """
    for key, value in new.items():
        if key not in old or old[key] is None or value is None:
            old[key] = value
            continue

        current = old[key]
        numbers = (int, float)
        if isinstance(current, numbers) and isinstance(value, numbers) \
                and not isinstance(current, bool) and not isinstance(value, bool):
            old[key] = value
        elif type(current) is not type(value):
            raise InvalidConfiguration(f'Type for {key} do not match ({type(current)} != {type(value)})')
        elif isinstance(value, list):
            current += value
        elif isinstance(value, dict):
            merge_dict(current, value)
        else:
            old[key] = value


class PropertyInfo:
    """ Information about one key of a parameter file. """

    name: str
    section: str
    field: str
    type: str
    unit: str
    minimum: Optional[float]
    maximum: Optional[float]
    # The lower bound is exclusive.
    exclusive: bool
    optional: bool
    enum_values: list[str] | None

    def __init__(self, name: str, section: str, info: dict) -> None:
        self.name = name
        self.section = section
        self.field = info.get('field', name)
        self.type = info['type']
        self.unit = info.get('unit', '')
        self.minimum = info.get('minimum', None)
        self.maximum = info.get('maximum', None)
        self.exclusive = info.get('exclusive', False)
        self.optional = info.get('optional', False)
        self.enum_values = info.get('enum_values', None)

        if self.unit not in UNIT_FACTORS:
            raise InvalidConfiguration(f'Unknown unit {self.unit} of schema key {name}!')

    def _check_range(self, value: float) -> None:
        if not math.isfinite(value):
            raise InvalidConfiguration(f'Value of {self.name} must be finite, but is {value}!')
        if self.minimum is not None:
            if value < self.minimum or (self.exclusive and value == self.minimum):
                raise InvalidConfiguration(
                    f'Value of {self.name} must be {">" if self.exclusive else ">="} {self.minimum}, '
                    f'but is {value}!')
        if self.maximum is not None:
            if value > self.maximum:
                raise InvalidConfiguration(f'Value of {self.name} must be <= {self.maximum}, but is {value}!')

    def parse(self, value: Any) -> Any:
        """ Check a value given in file units and return it normalized. """
        if value is None:
            if not self.optional:
                raise InvalidConfiguration(f'Property {self.name} is not optional!')
            return None

        if self.type == 'float':
            if isinstance(value, bool) or not isinstance(value, (int, float, str)):
                raise InvalidConfiguration(f'Wrong type for {self.name}, expected float but is {type(value)}!')
            try:
                number = float(value)
            except ValueError as e:
                raise InvalidConfiguration(f'Value of {self.name} is not a number: {value}!') from e
            self._check_range(number)
            return number

        if self.type == 'integer':
            if isinstance(value, bool) or not isinstance(value, int):
                raise InvalidConfiguration(f'Wrong type for {self.name}, expected integer but is {type(value)}!')
            self._check_range(value)
            return value

        if self.type == 'boolean':
            if not isinstance(value, bool):
                raise InvalidConfiguration(f'Wrong type for {self.name}, expected boolean but is {type(value)}!')
            return value

        if self.type == 'enum':
            if not isinstance(value, str) or value not in (self.enum_values or []):
                raise InvalidConfiguration(
                    f'Invalid value for enum type {self.name}, '
                    f'expected one of {", ".join(self.enum_values or [])} but is \'{value}\'')
            return value

        raise InvalidConfiguration(f'Unexpected type for {self.name}: {self.type}')

    def to_internal(self, value: Any) -> Any:
        """ Convert a parsed value to the internal unit. """
        if value is None or self.type != 'float':
            return value
        return to_internal(value, self.unit)


class Schema:
    """ The keys of a parameter file, loaded from the packaged schema.yaml. """

    _properties: dict[str, PropertyInfo]
    version: int

    def __init__(self) -> None:
        schema_file = importlib.resources.files(data) / 'schema.yaml'
        with schema_file.open(encoding='utf8') as f:
            schema = yaml.load(f, yaml.SafeLoader)

        version = schema.get('version', None)
        if not version or not isinstance(version, int):
            raise InvalidConfiguration('Version missing in parameter schema')
        self.version = version

        self._properties = {}
        for section, keys in schema.get('sections', {}).items():
            for key, info in keys.items():
                if key in self._properties:
                    raise InvalidConfiguration(f'Duplicate key {key} in parameter schema')
                self._properties[key] = PropertyInfo(key, section, info)

        logging.debug('Parameter schema version %d with %d keys loaded.', version, len(self._properties))

    def __contains__(self, key: object) -> bool:
        return key in self._properties

    def __getitem__(self, key: str) -> PropertyInfo:
        try:
            return self._properties[key]
        except KeyError as e:
            raise InvalidConfiguration(f'Unknown parameter {key}!') from e

    def __iter__(self) -> Iterator[PropertyInfo]:
        return iter(self._properties.values())

    def keys(self) -> list[str]:
        """ All parameter keys. """
        return list(self._properties)

    def section(self, name: str) -> list[PropertyInfo]:
        """ The keys of one section. """
        return [info for info in self._properties.values() if info.section == name]

    def key_of(self, field: str, sections: Optional[list[str]] = None) -> Optional[str]:
        """ Parameter key of a domain field, searching the given sections. """
        for info in self._properties.values():
            if info.field == field and (sections is None or info.section in sections):
                return info.name
        return None
