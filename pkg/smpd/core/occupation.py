""" Bose-Einstein occupation and its inverse. """
import math

from smpd.common import DomainError
from smpd.common.constants import HBAR, K_B


def bose_einstein(omega: float, temperature: float) -> float:
    """
    Thermal photon number per mode 1/(exp(ħω/k_B T) - 1).

    Args:
        omega: Mode angular frequency in rad/s.
        temperature: Temperature in K, strictly positive.
    """
    if not temperature > 0:
        raise DomainError(f'Temperature must be positive, but is {temperature} K!', field='temperature')
    if not omega > 0:
        raise DomainError(f'Mode frequency must be positive, but is {omega} rad/s!', field='omega')

    x = HBAR * omega / (K_B * temperature)
    if x > 700.0:
        # exp overflows, the occupation is below any representable rate.
        return 0.0
    return 1.0 / math.expm1(x)


def temperature_from_occupation(omega: float, occupation: float) -> float:
    """ Effective temperature in K of a mode with the given thermal occupation. """
    if not occupation > 0:
        raise DomainError(f'Occupation must be positive, but is {occupation}!', field='occupation')
    if not omega > 0:
        raise DomainError(f'Mode frequency must be positive, but is {omega} rad/s!', field='omega')

    return HBAR * omega / (K_B * math.log1p(1.0 / occupation))
