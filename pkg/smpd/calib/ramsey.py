"""
Photon flux calibration from the Ramsey fringes of the qubit.

A coherent drive populates the buffer with |ε|² photons. The qubit sees a
frequency shift Δ_q and a dephasing rate Γ_q with

    Δ_q + iΓ_q = -4χ_b|ε|² / ((κ_b + iχ_b)² + 4δ²)

for a drive detuned by δ from the buffer.
"""
import cmath
import logging
import math

from smpd.common import CalibrationError, DomainError
from smpd.core.params import DeviceParams


# Accepted deviation, in rad, of the measured shift from the phase the model predicts.
PHASE_TOLERANCE = 0.05


def _response(delta: float, chi_b: float, kappa_b: float) -> complex:
    if not (kappa_b > 0 and chi_b > 0):
        raise DomainError(f'κ_b and χ_b must be positive, but are {kappa_b} and {chi_b}!', field='kappa_b')
    return -4.0 * chi_b / ((kappa_b + 1j * chi_b) ** 2 + 4.0 * delta ** 2)


def ramsey_shift(epsilon_sq: float, delta: float, chi_b: float, kappa_b: float) -> tuple[float, float]:
    """ Qubit frequency shift Δ_q (rad/s) and dephasing rate Γ_q (1/s) for |ε|² buffer photons. """
    if epsilon_sq < 0:
        raise DomainError(f'Photon number must not be negative, but is {epsilon_sq}!', field='epsilon_sq')
    shift = epsilon_sq * _response(delta, chi_b, kappa_b)
    return shift.real, shift.imag


def ramsey_inverse(
    delta_q: float,
    gamma_q: float,
    delta: float,
    chi_b: float,
    kappa_b: float,
    phase_tolerance: float = PHASE_TOLERANCE
) -> float:
    """
    Intra-cavity photon number |ε|² from a measured (Δ_q, Γ_q) pair.

    Raises CalibrationError if the pair is not along the direction the model
    predicts for a real photon number.
    """
    shift = complex(delta_q, gamma_q)
    if shift == 0:
        return 0.0

    estimate = shift / _response(delta, chi_b, kappa_b)
    phase = cmath.phase(estimate)
    if abs(phase) > phase_tolerance:
        raise CalibrationError(
            f'Ramsey shift ({delta_q}, {gamma_q}) is inconsistent with the model: '
            f'phase deviation {phase:.4f} rad exceeds {phase_tolerance} rad!')

    logging.debug('Ramsey shift (%.6g, %.6g) -> |ε|² = %.6g', delta_q, gamma_q, estimate.real)
    return abs(estimate) * math.cos(phase)


def ramsey_from_flux(flux: float, device: DeviceParams, delta: float = 0.0) -> tuple[float, float]:
    """ Ramsey shift produced by the input photon flux, using |ε|² = flux/κ_b,c. """
    if flux < 0:
        raise DomainError(f'Photon flux must not be negative, but is {flux}!', field='flux')
    return ramsey_shift(flux / device.kappa_b_c, delta, device.chi_b, device.kappa_b)


def photon_flux_from_ramsey(
    delta_q: float,
    gamma_q: float,
    device: DeviceParams,
    delta: float = 0.0,
    phase_tolerance: float = PHASE_TOLERANCE
) -> float:
    """ Photon flux (photons/s) at the buffer input, κ_b,c·|ε|². """
    epsilon_sq = ramsey_inverse(delta_q, gamma_q, delta, device.chi_b, device.kappa_b, phase_tolerance)
    return device.kappa_b_c * epsilon_sq
