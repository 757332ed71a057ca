"""
Domain types of the SMPD digital twin.

All angular frequencies and rates are stored in rad/s, times in s and
temperatures in K. Conversion from the unit-suffixed parameter keys happens
in smpd.common.config.
"""
from __future__ import annotations

import logging
import math

from dataclasses import dataclass, replace
from typing import Optional

from typing_extensions import Self

from smpd.common import DomainError, warn

from .occupation import bose_einstein, temperature_from_occupation


def _check_positive(obj: object, *names: str) -> None:
    for name in names:
        value = getattr(obj, name)
        if not (value > 0 and math.isfinite(value)):
            raise DomainError(f'{name} must be strictly positive, but is {value}!', field=name)


def _check_not_negative(obj: object, *names: str) -> None:
    for name in names:
        value = getattr(obj, name)
        if not (value >= 0 and math.isfinite(value)):
            raise DomainError(f'{name} must not be negative, but is {value}!', field=name)


@dataclass(frozen=True)
class DeviceParams:
    """ Static device constants: frequencies, linewidths, dispersive shifts and qubit figures. """

    # Buffer resonator frequency.
    omega_b: float
    # Waste resonator frequency.
    omega_w: float
    # Qubit frequency.
    omega_q: float
    # Buffer Purcell filter frequency.
    omega_pb: float
    # Waste Purcell filter frequency.
    omega_pw: float
    # Buffer external coupling rate.
    kappa_b_c: float
    # Buffer internal loss rate.
    kappa_b_i: float
    kappa_w: float
    kappa_pb: float
    kappa_pw: float
    chi_b: float
    chi_w: float
    t1: float
    t2_star: float
    # Probability to read an excited qubit as excited.
    f_ro: float
    # Equilibrium excited state population of the qubit.
    p_th_q: float
    # Probability to read a ground state qubit as excited.
    p_false_positive: float = 1e-7
    # Success probability of a reset pi pulse.
    f_pi: float = 0.99

    def __post_init__(self) -> None:
        _check_positive(
            self, 'omega_b', 'omega_w', 'omega_q', 'omega_pb', 'omega_pw',
            'kappa_b_c', 'kappa_b_i', 'kappa_w', 'kappa_pb', 'kappa_pw',
            'chi_b', 'chi_w', 't1', 't2_star')

        if not 0.0 < self.f_ro <= 1.0:
            raise DomainError(f'f_ro must be in (0, 1], but is {self.f_ro}!', field='f_ro')
        if not 0.0 <= self.p_th_q < 0.5:
            raise DomainError(f'p_th_q must be in [0, 0.5), but is {self.p_th_q}!', field='p_th_q')
        if not 0.0 <= self.p_false_positive < 0.5:
            raise DomainError(
                f'p_false_positive must be in [0, 0.5), but is {self.p_false_positive}!',
                field='p_false_positive')
        if not 0.0 <= self.f_pi <= 1.0:
            raise DomainError(f'f_pi must be in [0, 1], but is {self.f_pi}!', field='f_pi')

    @property
    def kappa_b(self) -> float:
        """ Total buffer linewidth κ_b = κ_b,c + κ_b,i. """
        return self.kappa_b_c + self.kappa_b_i

    def with_kappa_b(self, kappa_b: float) -> Self:
        """ Same device with the coupling rate chosen to give the total buffer linewidth kappa_b. """
        if not kappa_b > self.kappa_b_i:
            raise DomainError(
                f'Buffer linewidth {kappa_b} rad/s must exceed the internal losses {self.kappa_b_i} rad/s!',
                field='kappa_b')
        return replace(self, kappa_b_c=kappa_b - self.kappa_b_i)


@dataclass(frozen=True)
class TuningState:
    """ Flux biases and pump settings of the converter. """

    # Buffer SQUID flux bias in units of Φ0.
    phi_b: float = 0.0
    # Purcell filter SQUID flux bias in units of Φ0.
    phi_pb: float = 0.0
    # Pump amplitude in dimensionless drive units.
    xi0: float = 0.0
    # Pump detuning from the four-wave mixing condition.
    delta_p: float = 0.0
    cooperativity: float = 1.0
    pump_on: bool = True
    # Measured detection bandwidth, overrides the value derived from κ_b and κ_w.
    kappa_d: Optional[float] = None

    def __post_init__(self) -> None:
        _check_not_negative(self, 'cooperativity', 'xi0')
        if not math.isfinite(self.delta_p):
            raise DomainError(f'delta_p must be finite, but is {self.delta_p}!', field='delta_p')
        if self.kappa_d is not None:
            _check_positive(self, 'kappa_d')

    @staticmethod
    def cooperativity_of(device: DeviceParams, xi0: float) -> float:
        """ C = 4 χ_b χ_w |ξ0|² / (κ_w κ_b). """
        return 4.0 * device.chi_b * device.chi_w * xi0 ** 2 / (device.kappa_w * device.kappa_b)

    @staticmethod
    def xi0_of(device: DeviceParams, cooperativity: float) -> float:
        """ Pump amplitude giving the cooperativity C on this device. """
        if cooperativity < 0:
            raise DomainError(f'Cooperativity must not be negative, but is {cooperativity}!',
                              field='cooperativity')
        return math.sqrt(cooperativity * device.kappa_w * device.kappa_b / (4.0 * device.chi_b * device.chi_w))

    @classmethod
    def from_cooperativity(cls, device: DeviceParams, cooperativity: float, **kwargs) -> Self:
        """ Tuning state with the pump amplitude derived from the cooperativity. """
        return cls(xi0=cls.xi0_of(device, cooperativity), cooperativity=cooperativity, **kwargs)

    @classmethod
    def from_xi0(cls, device: DeviceParams, xi0: float, **kwargs) -> Self:
        """ Tuning state with the cooperativity derived from the pump amplitude. """
        return cls(xi0=xi0, cooperativity=cls.cooperativity_of(device, xi0), **kwargs)

    def is_consistent(self, device: DeviceParams, rel_tol: float = 1e-9) -> bool:
        """ Check C = 4 χ_b χ_w |ξ0|² / (κ_w κ_b) on the given device. """
        return math.isclose(self.cooperativity, self.cooperativity_of(device, self.xi0),
                            rel_tol=rel_tol, abs_tol=1e-15)

    def with_cooperativity(self, device: DeviceParams, cooperativity: float) -> Self:
        """ Same state with a new pump amplitude. """
        return replace(self, xi0=self.xi0_of(device, cooperativity), cooperativity=cooperativity)

    def g_4wm(self, device: DeviceParams) -> float:
        """ Effective four-wave mixing coupling g = √(χ_b χ_w) ξ0 in rad/s. """
        return math.sqrt(device.chi_b * device.chi_w) * self.xi0


@dataclass(frozen=True)
class CycleTiming:
    """ Durations of the detection, readout and reset steps of one cycle. """

    # Detection window T_d.
    t_d: float
    # Readout duration T_RO.
    t_ro: float
    # Duration of one reset round.
    t_reset_unit: float
    mean_resets_per_cycle: float = 0.0

    def __post_init__(self) -> None:
        _check_positive(self, 't_d')
        _check_not_negative(self, 't_ro', 't_reset_unit', 'mean_resets_per_cycle')

    @property
    def cycle_duration(self) -> float:
        """ Mean wall time of one cycle. """
        return self.t_d + self.t_ro + self.mean_resets_per_cycle * self.t_reset_unit

    @property
    def duty_cycle(self) -> float:
        """ η_cycle, the fraction of wall time spent detecting. """
        return self.t_d / self.cycle_duration

    def check_window(self, t1: float) -> bool:
        """ Warn if the detection window is not shorter than T1. """
        if self.t_d >= t1:
            warn(f'Detection window {self.t_d} s is not shorter than T1 = {t1} s, '
                 'most excitations decay before readout.')
            return False
        return True


@dataclass(frozen=True)
class NoiseEnvironment:
    """ Thermal field, qubit population and pump heating seen by the detector. """

    # Effective temperature of the field at the buffer input.
    field_temperature: float
    # Thermal photon number per mode at the buffer frequency.
    n_th_b: float
    # Effective temperature of the qubit population.
    qubit_temperature: float
    # Pump-induced click rate.
    alpha_p: float
    # Mixing chamber temperature, adds Bose-Einstein occupation on top of the floors.
    cryostat_temperature: float = 0.010

    def __post_init__(self) -> None:
        _check_not_negative(
            self, 'field_temperature', 'n_th_b', 'qubit_temperature', 'alpha_p', 'cryostat_temperature')

    @classmethod
    def from_temperatures(
        cls,
        device: DeviceParams,
        field_temperature: float,
        alpha_p: float,
        cryostat_temperature: float = 0.010,
        n_th_b: Optional[float] = None
    ) -> Self:
        """
        Build the environment from the effective field temperature.

        The occupation is derived with the Bose-Einstein law at ω_b unless
        n_th_b is given explicitly. The qubit temperature is the effective
        temperature of the equilibrium population p_th_q.
        """
        if n_th_b is None:
            n_th_b = bose_einstein(device.omega_b, field_temperature) if field_temperature > 0 else 0.0
        elif field_temperature > 0:
            logging.debug('Explicit thermal occupation %s overrides the field temperature %s K.',
                          n_th_b, field_temperature)

        qubit_temperature = 0.0
        if device.p_th_q > 0:
            qubit_temperature = temperature_from_occupation(device.omega_q, device.p_th_q)

        return cls(
            field_temperature=field_temperature,
            n_th_b=n_th_b,
            qubit_temperature=qubit_temperature,
            alpha_p=alpha_p,
            cryostat_temperature=cryostat_temperature
        )

    def at_temperature(self, cryostat_temperature: float) -> Self:
        """ Same environment at another mixing chamber temperature. """
        return replace(self, cryostat_temperature=cryostat_temperature)


@dataclass(frozen=True)
class FigureOfMerit:
    """ Analytic performance of the detector at one operating point. """

    eta_smpd: float
    eta_omega: float
    eta_4wm: float
    eta_q: float
    f_ro: float
    eta_cycle: float
    # Dark count rate of qubit origin.
    alpha_q: float
    # Pump heating click rate.
    alpha_p: float
    # Thermal photon click rate.
    alpha_th: float
    # Ground state readout false positives.
    alpha_ro: float
    # Dark count rate without thermal photons, α_q + α_p + α_ro.
    alpha_err: float
    alpha_total: float
    # Power sensitivity in W/√Hz, inf if the detector is blind.
    sensitivity: float
    kappa_d: float
