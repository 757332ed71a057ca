"""
Flux tuning of the buffer and Purcell SQUIDs, the Purcell-mediated coupling
and the four-wave mixing response surface.
"""
from __future__ import annotations

import logging
import math

from dataclasses import dataclass
from typing import Optional

import numpy as np
import numpy.typing as npt

from scipy import optimize
from typing_extensions import Self

from smpd.common import DomainError, warn
from smpd.common.constants import TWO_PI
from smpd.common.types.squid_model import SquidModelKind
from smpd.core.conversion import s_4wm
from smpd.core.params import DeviceParams, TuningState


FloatArray = npt.NDArray[np.float64]

# Measured tuning range of the Purcell filter.
PURCELL_OMEGA_MIN = TWO_PI * 7.26e9
PURCELL_OMEGA_MAX = TWO_PI * 7.78e9


def junction_ratio(asymmetry: float) -> float:
    """ Critical current ratio r of the SQUID junctions, d = (r - 1)/(r + 1). """
    if not 0.0 <= asymmetry < 1.0:
        raise DomainError(f'Asymmetry must be in [0, 1), but is {asymmetry}!', field='asymmetry')
    return (1.0 + asymmetry) / (1.0 - asymmetry)


def asymmetry_from_ratio(ratio: float) -> float:
    """ SQUID asymmetry d = (r - 1)/(r + 1) for the junction ratio r ≥ 1. """
    if not ratio >= 1.0:
        raise DomainError(f'Junction ratio must be at least 1, but is {ratio}!', field='ratio')
    return (ratio - 1.0) / (ratio + 1.0)


@dataclass(frozen=True)
class SquidTuningModel:
    """
    Flux dependence ω(Φ) of a resonator closed by a SQUID.

    The SQUID contributes the share `participation` of the resonator
    inductance at zero flux, so
    ω(Φ) = ω_max·[1 + p·(1/s(Φ) - 1)]^(-1/2) with
    s(Φ) = √(cos²(πΦ) + d²·sin²(πΦ)). For p = 1 this is
    ω_max·(cos²(πΦ) + d²·sin²(πΦ))^(1/4).
    The sinusoidal approximation ω̄ + A·cos(2πΦ) shares the extrema.
    """

    omega_max: float
    # Junction asymmetry d.
    asymmetry: float
    # Flux of the frequency maximum in units of Φ0.
    flux_offset: float = 0.0
    model_kind: SquidModelKind = SquidModelKind.SQUID_EXACT
    # Inductive participation ratio of the SQUID.
    participation: float = 1.0
    # Lowest frequency reachable, the curve is clipped there.
    omega_floor: Optional[float] = None

    def __post_init__(self) -> None:
        if not self.omega_max > 0:
            raise DomainError(f'omega_max must be positive, but is {self.omega_max}!', field='omega_max')
        if not 0.0 <= self.asymmetry <= 1.0:
            raise DomainError(f'Asymmetry must be in [0, 1], but is {self.asymmetry}!', field='asymmetry')
        if not 0.0 < self.participation <= 1.0:
            raise DomainError(f'Participation must be in (0, 1], but is {self.participation}!',
                              field='participation')

    def _exact(self, phi: npt.ArrayLike) -> FloatArray:
        x = np.pi * (np.asarray(phi, dtype=np.float64) - self.flux_offset)
        s = np.sqrt(np.cos(x) ** 2 + self.asymmetry ** 2 * np.sin(x) ** 2)
        if self.participation == 1.0:
            return self.omega_max * np.sqrt(s)
        with np.errstate(divide='ignore'):
            return self.omega_max / np.sqrt(1.0 + self.participation * (1.0 / s - 1.0))

    @property
    def omega_min(self) -> float:
        """ Frequency at half a flux quantum from the maximum. """
        omega = float(self._exact(self.flux_offset + 0.5))
        if self.omega_floor is not None:
            omega = max(omega, self.omega_floor)
        return omega

    @property
    def tuning_range(self) -> float:
        """ ω_max - ω_min in rad/s. """
        return self.omega_max - self.omega_min

    @property
    def mean(self) -> float:
        """ Mean frequency ω̄ of the sinusoidal approximation. """
        return 0.5 * (self.omega_max + self.omega_min)

    @property
    def amplitude(self) -> float:
        """ Amplitude A of the sinusoidal approximation. """
        return 0.5 * (self.omega_max - self.omega_min)

    def frequency(self, phi: npt.ArrayLike) -> FloatArray:
        """ Resonator frequency at the flux bias phi (units of Φ0). """
        if self.model_kind == SquidModelKind.SINUSOIDAL:
            x = 2.0 * np.pi * (np.asarray(phi, dtype=np.float64) - self.flux_offset)
            omega = self.mean + self.amplitude * np.cos(x)
        else:
            omega = self._exact(phi)
        if self.omega_floor is not None:
            omega = np.maximum(omega, self.omega_floor)
        return omega

    def flux_for_frequency(self, omega: float) -> float:
        """ Flux in [flux_offset, flux_offset + 0.5] where the model reaches omega. """
        if not self.omega_min <= omega <= self.omega_max:
            raise DomainError(
                f'Frequency {omega} rad/s outside of the tuning range [{self.omega_min}, {self.omega_max}]!',
                field='omega')
        if omega == self.omega_max:
            return self.flux_offset

        def _f(phi: float) -> float:
            return float(self.frequency(phi)) - omega

        return float(optimize.brentq(_f, self.flux_offset, self.flux_offset + 0.5, xtol=1e-14))

    @classmethod
    def from_sinusoid(
        cls,
        mean: float,
        amplitude: float,
        flux_offset: float = 0.0,
        participation: float = 1.0,
        model_kind: SquidModelKind = SquidModelKind.SINUSOIDAL
    ) -> Self:
        """ Model with the extrema of the sinusoid ω̄ ± A, asymmetry from the participation ratio. """
        amplitude = abs(amplitude)
        omega_max = mean + amplitude
        omega_min = mean - amplitude
        if not 0 < omega_min <= omega_max:
            raise DomainError(f'Sinusoid {mean} ± {amplitude} rad/s is not a valid tuning curve!',
                              field='amplitude')
        # ω_max/ω_min = [1 + p(1/d - 1)]^(1/2)
        asymmetry = 1.0 / (1.0 + ((omega_max / omega_min) ** 2 - 1.0) / participation)
        return cls(
            omega_max=omega_max,
            asymmetry=asymmetry,
            flux_offset=flux_offset,
            model_kind=model_kind,
            participation=participation
        )

    @staticmethod
    def participation_for_range(omega_max: float, omega_min: float, asymmetry: float) -> float:
        """ Participation ratio that yields the tuning range [omega_min, omega_max] for asymmetry d. """
        if not 0 < omega_min < omega_max:
            raise DomainError(f'Invalid tuning range [{omega_min}, {omega_max}]!', field='omega_min')
        if not 0.0 < asymmetry < 1.0:
            raise DomainError(f'Asymmetry must be in (0, 1), but is {asymmetry}!', field='asymmetry')
        return ((omega_max / omega_min) ** 2 - 1.0) / (1.0 / asymmetry - 1.0)


def buffer_frequency(phi_b: npt.ArrayLike, model: SquidTuningModel) -> FloatArray:
    """ Buffer frequency in rad/s at the flux bias phi_b. """
    return model.frequency(phi_b)


def purcell_frequency(phi_pb: npt.ArrayLike, model: SquidTuningModel) -> FloatArray:
    """
    Purcell filter frequency for a symmetric SQUID, ω_max·√|cos(πΦ)|,
    clipped to the measured tuning range of the filter.
    """
    if model.asymmetry != 0.0:
        raise DomainError(f'The Purcell SQUID model must be symmetric, but d = {model.asymmetry}!',
                          field='asymmetry')
    if model.participation != 1.0:
        raise DomainError(f'The Purcell SQUID model needs participation 1, but it is {model.participation}!',
                          field='participation')

    x = np.pi * (np.asarray(phi_pb, dtype=np.float64) - model.flux_offset)
    if np.any(np.abs(np.cos(x)) < 1e-6):
        warn('Purcell flux bias at half a flux quantum, the filter frequency collapses.')

    return np.clip(model.frequency(phi_pb), PURCELL_OMEGA_MIN, PURCELL_OMEGA_MAX)


@dataclass(frozen=True)
class PurcellCouplingModel:
    """ Buffer coupling rate through the Purcell filter, κ_b,c(Δ) = κ_pb·g²/(Δ² + (κ_pb/2)²). """

    g_pb: float
    kappa_pb: float
    kappa_b_i: float

    def __post_init__(self) -> None:
        for name in ('g_pb', 'kappa_pb', 'kappa_b_i'):
            value = getattr(self, name)
            if not value > 0:
                raise DomainError(f'{name} must be positive, but is {value}!', field=name)

    @classmethod
    def calibrated(cls, kappa_bc_max: float, kappa_pb: float, kappa_b_i: float) -> Self:
        """ Model whose on-resonance coupling rate is kappa_bc_max. """
        if not kappa_bc_max > 0:
            raise DomainError(f'kappa_bc_max must be positive, but is {kappa_bc_max}!', field='kappa_bc_max')
        return cls(g_pb=0.5 * math.sqrt(kappa_bc_max * kappa_pb), kappa_pb=kappa_pb, kappa_b_i=kappa_b_i)

    @property
    def kappa_bc_max(self) -> float:
        """ Coupling rate 4g²/κ_pb on resonance with the filter. """
        return 4.0 * self.g_pb ** 2 / self.kappa_pb

    def kappa_bc(self, delta: npt.ArrayLike) -> FloatArray:
        """ Coupling rate at the buffer-filter detuning delta. """
        delta = np.asarray(delta, dtype=np.float64)
        return self.kappa_pb * self.g_pb ** 2 / (delta ** 2 + (0.5 * self.kappa_pb) ** 2)

    def detuning_for_kappa_bc(self, kappa_bc: float) -> float:
        """ Positive buffer-filter detuning giving the coupling rate kappa_bc. """
        if not 0 < kappa_bc <= self.kappa_bc_max:
            raise DomainError(
                f'Coupling rate {kappa_bc} rad/s not reachable, maximum is {self.kappa_bc_max} rad/s!',
                field='kappa_bc')
        return math.sqrt(max(self.kappa_pb * self.g_pb ** 2 / kappa_bc - (0.5 * self.kappa_pb) ** 2, 0.0))


def kappa_bc_of_detuning(delta: npt.ArrayLike, model: PurcellCouplingModel) -> FloatArray:
    """ Buffer external coupling rate in rad/s at the buffer-filter detuning delta. """
    return model.kappa_bc(delta)


def transmission_fwhm(cooperativity: float, kappa_b: float, kappa_w: float) -> float:
    """ Numeric full width at half maximum of |S|² along δ at δ_p = 0. """
    peak = float(s_4wm(0.0, 0.0, cooperativity, kappa_b, kappa_w))
    if peak <= 0:
        raise DomainError('No conversion without pump, the width is undefined.', field='cooperativity')

    def _f(delta: float) -> float:
        return float(s_4wm(delta, 0.0, cooperativity, kappa_b, kappa_w)) - 0.5 * peak

    upper = 10.0 * (1.0 + cooperativity) * (kappa_b + kappa_w)
    half = optimize.brentq(_f, 0.0, upper, xtol=1e-12 * upper, rtol=1e-14)
    return 2.0 * float(half)


def omega_4wm(device: DeviceParams) -> float:
    """ Pump frequency matching the four-wave mixing condition, ω_q + ω_w - χ_w - ω_b. """
    return device.omega_q + device.omega_w - device.chi_w - device.omega_b


@dataclass(frozen=True)
class FourWaveMixingSurface:
    """ Conversion probability as function of signal and pump frequency. """

    cooperativity: float
    kappa_b: float
    kappa_w: float
    # Pump matching frequency.
    omega_4wm: float
    # Buffer frequency, origin of the signal detuning.
    omega_b: float = 0.0

    @classmethod
    def from_device(cls, device: DeviceParams, tuning: TuningState) -> Self:
        """ Surface of a device at the tuning state's cooperativity. """
        return cls(
            cooperativity=tuning.cooperativity,
            kappa_b=device.kappa_b,
            kappa_w=device.kappa_w,
            omega_4wm=omega_4wm(device),
            omega_b=device.omega_b
        )

    @property
    def peak(self) -> float:
        """ Value at δ = δ_p = 0, 4C/(1+C)². """
        return float(s_4wm(0.0, 0.0, self.cooperativity, self.kappa_b, self.kappa_w))

    def transmission(self, delta: npt.ArrayLike, delta_p: npt.ArrayLike) -> FloatArray:
        """ |S|² at the signal detuning delta and pump detuning delta_p. """
        return s_4wm(delta, delta_p, self.cooperativity, self.kappa_b, self.kappa_w)

    def grid(self, omega_p: npt.ArrayLike, omega: npt.ArrayLike) -> FloatArray:
        """ |S|² on the grid of pump frequencies (rows) and signal frequencies (columns). """
        omega_p = np.asarray(omega_p, dtype=np.float64)
        omega = np.asarray(omega, dtype=np.float64)
        delta = (omega - self.omega_b)[np.newaxis, :]
        delta_p = (omega_p - self.omega_4wm)[:, np.newaxis]
        return self.transmission(delta, delta_p)


@dataclass(frozen=True)
class FourWaveMixingMap:
    """ Excited state probability measured on a grid of pump and signal frequencies. """

    # Pump frequency axis in rad/s, one row per entry.
    omega_p: FloatArray
    # Signal frequency axis in rad/s, one column per entry.
    omega: FloatArray
    # Row-major grid of shape (len(omega_p), len(omega)).
    excited_prob: FloatArray

    def __post_init__(self) -> None:
        shape = (len(self.omega_p), len(self.omega))
        if np.shape(self.excited_prob) != shape:
            raise DomainError(f'Map shape {np.shape(self.excited_prob)} does not match the axes {shape}!',
                              field='excited_prob')

    def scaled(self, factor: float) -> FourWaveMixingMap:
        """ Map with all probabilities multiplied by factor. """
        return FourWaveMixingMap(self.omega_p, self.omega, self.excited_prob * factor)


def synthetic_map(
    surface: FourWaveMixingSurface,
    omega_p: npt.ArrayLike,
    omega: npt.ArrayLike,
    amplitude: float = 1.0,
    baseline: float = 0.0,
    noise: float = 0.0,
    rng: Optional[np.random.Generator] = None
) -> FourWaveMixingMap:
    """
    Excited state probability map baseline + amplitude·|S|² with additive
    Gaussian noise of standard deviation noise·amplitude.
    """
    omega_p = np.asarray(omega_p, dtype=np.float64)
    omega = np.asarray(omega, dtype=np.float64)
    values = baseline + amplitude * surface.grid(omega_p, omega)
    if noise > 0:
        if rng is None:
            raise DomainError('A random generator is required for a noisy map.', field='rng')
        values = values + rng.normal(0.0, noise * amplitude, size=values.shape)

    logging.debug('Synthetic 4WM map %s with C = %s, noise %s.', values.shape, surface.cooperativity, noise)

    return FourWaveMixingMap(omega_p=omega_p, omega=omega, excited_prob=values)


def reflection_magnitude(
    frequency: npt.ArrayLike,
    center: float,
    kappa_i: float,
    kappa_c: float
) -> FloatArray:
    """
    Reflected power |r|² = 1 - 4κ_iκ_c/(κ² + 4Δ²) of a resonator probed in
    reflection, frequencies in Hz and rates in rad/s.
    """
    kappa = kappa_i + kappa_c
    delta = 2.0 * np.pi * (np.asarray(frequency, dtype=np.float64) - center)
    return 1.0 - 4.0 * kappa_i * kappa_c / (kappa ** 2 + 4.0 * delta ** 2)
