""" Unit conversion at the I/O boundary. Internally everything is rad/s, s, K. """
import math

from . import InvalidConfiguration


# Factor from the unit suffix of a parameter key to the internal SI unit.
# Frequencies given in (M|G|k)Hz are converted to angular frequency.
UNIT_FACTORS: dict[str, float] = {
    'ghz': 2.0 * math.pi * 1e9,
    'mhz': 2.0 * math.pi * 1e6,
    'khz': 2.0 * math.pi * 1e3,
    'hz': 2.0 * math.pi,
    'per_s': 1.0,
    's': 1.0,
    'ms': 1e-3,
    'us': 1e-6,
    'ns': 1e-9,
    'k': 1.0,
    'mk': 1e-3,
    'phi0': 1.0,
    'photons_per_s': 1.0,
    'rad_per_s': 1.0,
    '': 1.0,
}


def to_internal(value: float, unit: str) -> float:
    """ Convert a value given in unit to the internal SI / rad/s unit. """
    try:
        factor = UNIT_FACTORS[unit]
    except KeyError as e:
        raise InvalidConfiguration(f'Unknown unit {unit}!') from e
    return float(value) * factor


def from_internal(value: float, unit: str) -> float:
    """ Convert an internal value to the given unit. """
    try:
        factor = UNIT_FACTORS[unit]
    except KeyError as e:
        raise InvalidConfiguration(f'Unknown unit {unit}!') from e
    return float(value) / factor


def hz(omega: float) -> float:
    """ Angular frequency (rad/s) to frequency (Hz). """
    return omega / (2.0 * math.pi)


def rad_s(frequency: float) -> float:
    """ Frequency (Hz) to angular frequency (rad/s). """
    return frequency * 2.0 * math.pi
