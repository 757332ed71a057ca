"""
Closed-form figures of merit: efficiency, dark and thermal count rates,
sensitivity and detection bandwidth.
"""
import logging
import math

from dataclasses import dataclass

from scipy import integrate, optimize

from smpd.common import DomainError
from smpd.common.constants import HBAR

from .conversion import s_4wm
from .occupation import bose_einstein, temperature_from_occupation
from .params import CycleTiming, DeviceParams, FigureOfMerit, NoiseEnvironment, TuningState


__all__ = [
    'Efficiency', 'eta_4wm', 'eta_q', 'eta_q_linear', 'eta_omega', 'eta_smpd', 'conversion_efficiency',
    'detector_bandwidth', 'alpha_q_rate', 'qubit_rate_coefficient', 'alpha_q_detected',
    'bose_einstein', 'temperature_from_occupation', 'thermal_occupation', 'qubit_population',
    'alpha_th_rate', 'alpha_th_integral', 'pump_excitation_rate', 'sensitivity', 'detection_bandwidth',
    'dark_budget', 'buffer_linewidth_for_bandwidth'
]


@dataclass(frozen=True)
class Efficiency:
    """ Detection efficiency with its factors. """

    eta_omega: float
    eta_4wm: float
    eta_q: float
    f_ro: float
    eta_cycle: float

    @property
    def total(self) -> float:
        """ η_SMPD = η_ω·η_4WM·η_q·F_RO·η_cycle. """
        return self.eta_omega * self.eta_4wm * self.eta_q * self.f_ro * self.eta_cycle

    def __float__(self) -> float:
        return self.total


def eta_4wm(cooperativity: float, kappa_b_c: float | None = None, kappa_b: float | None = None) -> float:
    """
    Conversion efficiency 4C/(1+C)² of the four-wave mixing process.

    If the buffer coupling rate and total linewidth are given, the result is
    reduced by the impedance matching factor κ_b,c/κ_b.
    """
    if cooperativity < 0:
        raise DomainError(f'Cooperativity must not be negative, but is {cooperativity}!', field='cooperativity')

    eta = 4.0 * cooperativity / (1.0 + cooperativity) ** 2

    if kappa_b_c is not None and kappa_b is not None:
        if not 0 < kappa_b_c <= kappa_b:
            raise DomainError(f'Coupling rate {kappa_b_c} must be in (0, κ_b = {kappa_b}]!', field='kappa_b_c')
        eta *= kappa_b_c / kappa_b

    return eta


def eta_q(t_d: float, t1: float) -> float:
    """ Probability (t1/t_d)(1 - e^(-t_d/t1)) that an excitation survives until readout. """
    if not t_d > 0:
        raise DomainError(f'Detection window must be positive, but is {t_d} s!', field='t_d')
    if not t1 > 0:
        raise DomainError(f'T1 must be positive, but is {t1} s!', field='t1')

    x = t_d / t1
    return -math.expm1(-x) / x


def eta_q_linear(t_d: float, t1: float) -> float:
    """ First order approximation 1 - t_d/(2 t1) of eta_q. """
    if not (t_d > 0 and t1 > 0):
        raise DomainError(f'Times must be positive, but are {t_d} s and {t1} s!', field='t_d')
    return 1.0 - t_d / (2.0 * t1)


def eta_omega(omega: float, omega_b: float, kappa_d: float) -> float:
    """ Lorentzian frequency response 1/(1 + [2(ω - ω_b)/κ_d]²). """
    if not kappa_d > 0:
        raise DomainError(f'Detection bandwidth must be positive, but is {kappa_d}!', field='kappa_d')
    return 1.0 / (1.0 + (2.0 * (omega - omega_b) / kappa_d) ** 2)


def detection_bandwidth(kappa_b: float, kappa_w: float) -> float:
    """
    Full width at half maximum of the conversion at C = 1:

        κ_d = √2·√(√(κ_b²κ_w² + ((κ_b - κ_w)/2)⁴) - ((κ_b - κ_w)/2)²)
    """
    if not (kappa_b > 0 and kappa_w > 0):
        raise DomainError(f'Linewidths must be positive, but are {kappa_b} and {kappa_w}!', field='kappa_b')

    half_diff_sq = (0.5 * (kappa_b - kappa_w)) ** 2
    inner = math.sqrt((kappa_b * kappa_w) ** 2 + half_diff_sq ** 2) - half_diff_sq
    return math.sqrt(2.0) * math.sqrt(inner)


def buffer_linewidth_for_bandwidth(kappa_d: float, kappa_w: float) -> float:
    """
    Buffer linewidth κ_b ≤ κ_w for which detection_bandwidth(κ_b, κ_w) is kappa_d.
    The bandwidth grows with κ_b on (0, κ_w], up to √2·κ_w.
    """
    if not (kappa_d > 0 and kappa_w > 0):
        raise DomainError(f'Bandwidths must be positive, but are {kappa_d} and {kappa_w}!', field='kappa_d')
    widest = detection_bandwidth(kappa_w, kappa_w)
    if kappa_d > widest:
        raise DomainError(f'Bandwidth {kappa_d} rad/s exceeds the maximum {widest} rad/s for κ_w = {kappa_w}!',
                          field='kappa_d')
    if kappa_d == widest:
        return kappa_w

    def _f(kappa_b: float) -> float:
        return detection_bandwidth(kappa_b, kappa_w) - kappa_d

    return float(optimize.brentq(_f, 1e-9 * kappa_w, kappa_w, xtol=1e-12 * kappa_w, rtol=1e-14))


def detector_bandwidth(device: DeviceParams, tuning: TuningState) -> float:
    """ Measured bandwidth of the tuning state if set, else the formula value. """
    if tuning.kappa_d is not None:
        return tuning.kappa_d
    return detection_bandwidth(device.kappa_b, device.kappa_w)


def conversion_efficiency(device: DeviceParams, tuning: TuningState, with_internal_losses: bool = False) -> float:
    """ Peak four-wave mixing efficiency of the tuning state, 0 with the pump off. """
    if not tuning.pump_on:
        return 0.0

    eta = float(s_4wm(0.0, tuning.delta_p, tuning.cooperativity, device.kappa_b, device.kappa_w))
    if with_internal_losses:
        eta *= device.kappa_b_c / device.kappa_b
    return eta


def eta_smpd(
    device: DeviceParams,
    tuning: TuningState,
    timing: CycleTiming,
    omega: float,
    with_internal_losses: bool = False,
    f_ro: float | None = None
) -> Efficiency:
    """
    Efficiency η_ω·η_4WM·η_q·F_RO·η_cycle for a monochromatic signal at omega.

    Args:
        f_ro: Readout fidelity replacing the device value.
    """
    readout = device.f_ro if f_ro is None else f_ro
    if not 0.0 <= readout <= 1.0:
        raise DomainError(f'Readout fidelity must be in [0, 1], but is {readout}!', field='f_ro')

    return Efficiency(
        eta_omega=eta_omega(omega, device.omega_b, detector_bandwidth(device, tuning)),
        eta_4wm=conversion_efficiency(device, tuning, with_internal_losses),
        eta_q=eta_q(timing.t_d, device.t1),
        f_ro=readout,
        eta_cycle=timing.duty_cycle
    )


def qubit_rate_coefficient(timing: CycleTiming, t1: float) -> float:
    """ K_q = (t_d/t1)/(cycle duration), the qubit dark rate per unit population. """
    if not t1 > 0:
        raise DomainError(f'T1 must be positive, but is {t1} s!', field='t1')
    duration = timing.cycle_duration
    if not duration > 0:
        raise DomainError('Cycle duration is zero!', field='t_d')
    return (timing.t_d / t1) / duration


def alpha_q_rate(p_th_q: float, timing: CycleTiming, t1: float) -> float:
    """ Dark count rate p_th,q·(t_d/t1)/(t_d + t_ro + t_reset) with a perfect reset. """
    if not 0.0 <= p_th_q < 0.5:
        raise DomainError(f'p_th_q must be in [0, 0.5), but is {p_th_q}!', field='p_th_q')
    return p_th_q * qubit_rate_coefficient(timing, t1)


def alpha_q_detected(p_th_q: float, timing: CycleTiming, t1: float, f_ro: float) -> float:
    """
    Qubit dark count rate as it is observed: a thermal excitation appears
    within the window with probability p(1 - e^(-t_d/t1)), survives to the
    readout with η_q and is read with F_RO.
    """
    if not 0.0 <= p_th_q < 0.5:
        raise DomainError(f'p_th_q must be in [0, 0.5), but is {p_th_q}!', field='p_th_q')
    excitation = p_th_q * -math.expm1(-timing.t_d / t1)
    return excitation * eta_q(timing.t_d, t1) * f_ro / timing.cycle_duration


def thermal_occupation(noise: NoiseEnvironment, omega_b: float) -> float:
    """ Buffer input occupation: the floor n_th,b plus the cryostat's Bose-Einstein occupation. """
    occupation = noise.n_th_b
    if noise.cryostat_temperature > 0:
        occupation += bose_einstein(omega_b, noise.cryostat_temperature)
    return occupation


def qubit_population(noise: NoiseEnvironment, device: DeviceParams) -> float:
    """ Qubit excited population: the floor p_th,q plus the cryostat's Bose-Einstein occupation. """
    population = device.p_th_q
    if noise.cryostat_temperature > 0:
        population += bose_einstein(device.omega_q, noise.cryostat_temperature)
    return min(population, 0.5)


def alpha_th_rate(n_th_b: float, kappa_d: float, eta_smpd_at_resonance: float) -> float:
    """ Thermal photon click rate n̄·κ_d·η_SMPD(ω_b)/4. """
    for name, value in (('n_th_b', n_th_b), ('kappa_d', kappa_d), ('eta_smpd', eta_smpd_at_resonance)):
        if not value >= 0:
            raise DomainError(f'{name} must not be negative, but is {value}!', field=name)
    return n_th_b * kappa_d * eta_smpd_at_resonance / 4.0


def alpha_th_integral(n_th_b: float, kappa_d: float, eta_smpd_at_resonance: float, omega_b: float) -> float:
    """
    Thermal click rate as numerical integral of n̄·η_SMPD(ω) over positive
    frequencies, dω/2π, for a flat occupation.
    """
    if not (kappa_d > 0 and omega_b > 0):
        raise DomainError(f'Bandwidth and frequency must be positive, but are {kappa_d} and {omega_b}!',
                          field='kappa_d')

    def _response(u: float) -> float:
        return 1.0 / (1.0 + 4.0 * u * u)

    # Integrate in units of the bandwidth, u = (ω - ω_b)/κ_d, from ω = 0.
    lower = -omega_b / kappa_d
    below, _ = integrate.quad(_response, lower, 0.0, limit=200)
    above, _ = integrate.quad(_response, 0.0, math.inf, limit=200)
    return n_th_b * eta_smpd_at_resonance * kappa_d * (below + above) / (2.0 * math.pi)


def pump_excitation_rate(alpha_p: float, timing: CycleTiming, t1: float, f_ro: float) -> float:
    """ Qubit excitation rate during the window that results in the pump heating click rate alpha_p. """
    if alpha_p == 0:
        return 0.0
    return alpha_p / (timing.duty_cycle * eta_q(timing.t_d, t1) * f_ro)


def sensitivity(eta_smpd: float, alpha_total: float, omega_b: float) -> float:
    """ Power sensitivity ħω_b·√α/η in W/√Hz. """
    if not 0.0 < eta_smpd <= 1.0:
        raise DomainError(f'Efficiency must be in (0, 1], but is {eta_smpd}!', field='eta_smpd')
    if not alpha_total >= 0:
        raise DomainError(f'Count rate must not be negative, but is {alpha_total}!', field='alpha_total')
    return HBAR * omega_b * math.sqrt(alpha_total) / eta_smpd


def dark_budget(
    device: DeviceParams,
    tuning: TuningState,
    timing: CycleTiming,
    noise: NoiseEnvironment,
    with_internal_losses: bool = False
) -> FigureOfMerit:
    """ Analytic count budget, efficiency and sensitivity at the operating point. """
    kappa_d = detector_bandwidth(device, tuning)
    efficiency = eta_smpd(device, tuning, timing, device.omega_b, with_internal_losses)
    eta = efficiency.total

    alpha_q = alpha_q_detected(qubit_population(noise, device), timing, device.t1, device.f_ro)
    alpha_p = noise.alpha_p if tuning.pump_on else 0.0
    alpha_th = alpha_th_rate(thermal_occupation(noise, device.omega_b), kappa_d, eta)
    alpha_ro = device.p_false_positive / timing.cycle_duration
    alpha_err = alpha_q + alpha_p + alpha_ro
    alpha_total = alpha_err + alpha_th

    s = sensitivity(eta, alpha_total, device.omega_b) if eta > 0 else math.inf

    logging.debug('Dark budget: alpha_q=%.4g alpha_p=%.4g alpha_th=%.4g alpha_ro=%.4g eta=%.4f',
                  alpha_q, alpha_p, alpha_th, alpha_ro, eta)

    return FigureOfMerit(
        eta_smpd=eta,
        eta_omega=efficiency.eta_omega,
        eta_4wm=efficiency.eta_4wm,
        eta_q=efficiency.eta_q,
        f_ro=efficiency.f_ro,
        eta_cycle=efficiency.eta_cycle,
        alpha_q=alpha_q,
        alpha_p=alpha_p,
        alpha_th=alpha_th,
        alpha_ro=alpha_ro,
        alpha_err=alpha_err,
        alpha_total=alpha_total,
        sensitivity=s,
        kappa_d=kappa_d
    )
