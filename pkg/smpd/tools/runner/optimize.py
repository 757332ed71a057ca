"""
Sensitivity optimization over the detection bandwidth and the detection window.

The bandwidth is set by the buffer linewidth, which the Purcell filter
tunes through the buffer coupling rate. A wider buffer lowers the share of
the internal losses, so with with_internal_losses the efficiency grows with
κ_d while the thermal dark counts grow linearly with it.
"""
from __future__ import annotations

import logging
import math

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
import numpy.typing as npt

from scipy import optimize

from smpd.common import DomainError
from smpd.core.merit import buffer_linewidth_for_bandwidth, dark_budget, detector_bandwidth, sensitivity
from smpd.sim.trace import SimulationConfig


FloatArray = npt.NDArray[np.float64]

# Number of coordinate refinement sweeps.
MAX_SWEEPS = 20
# Relative change of S ending the refinement.
SWEEP_TOLERANCE = 1e-10


class SensitivityModel:
    """ Analytic sensitivity S(κ_d, T_d) of a configuration for a Lorentzian source. """

    def __init__(self, config: SimulationConfig, source_linewidth: float = 0.0) -> None:
        if not (source_linewidth >= 0 and math.isfinite(source_linewidth)):
            raise DomainError(f'Source linewidth must not be negative, but is {source_linewidth}!',
                              field='source_linewidth')
        self.config = config
        self.source_linewidth = source_linewidth

    def source_factor(self, kappa_d: float) -> float:
        """ η_ω averaged over a Lorentzian line of the source linewidth, κ_d/(κ_d + Γ_s). """
        return kappa_d / (kappa_d + self.source_linewidth)

    def __call__(self, kappa_d: float, t_d: float) -> float:
        config = self.config
        kappa_b = buffer_linewidth_for_bandwidth(kappa_d, config.device.kappa_w)
        device = config.device.with_kappa_b(kappa_b)
        tuning = replace(config.tuning, kappa_d=kappa_d)
        timing = replace(config.timing, t_d=t_d)

        budget = dark_budget(device, tuning, timing, config.noise, config.with_internal_losses)
        eta = budget.eta_smpd * self.source_factor(kappa_d)
        if eta <= 0:
            return math.inf
        return sensitivity(eta, budget.alpha_total, device.omega_b)

    def grid(self, kappa_d: FloatArray, t_d: FloatArray) -> FloatArray:
        """ S on the grid, one row per bandwidth. """
        return np.array([[self(float(k), float(t)) for t in t_d] for k in kappa_d])


@dataclass(frozen=True)
class OptimizationResult:
    """ Optimum of the sensitivity and the trade-off curve. """

    kappa_d: float
    t_d: float
    sensitivity: float
    # Sensitivity of the configured operating point, clipped into the bounds.
    operating_sensitivity: float
    # Bandwidth grid of the trade-off curve.
    curve_kappa_d: FloatArray
    # Best detection window and its sensitivity for each bandwidth.
    curve_t_d: FloatArray
    curve_sensitivity: FloatArray

    @property
    def gain(self) -> float:
        """ S*/S of the operating point, at most 1. """
        return self.sensitivity / self.operating_sensitivity

    def rows(self) -> list[tuple[float, float, float]]:
        """ (kappa_d, t_d, sensitivity) rows of the trade-off curve. """
        return [(float(k), float(t), float(s))
                for k, t, s in zip(self.curve_kappa_d, self.curve_t_d, self.curve_sensitivity)]


def _check_bounds(name: str, bounds: tuple[float, float]) -> None:
    low, high = bounds
    if not (math.isfinite(low) and math.isfinite(high) and 0 < low < high):
        raise DomainError(f'Bounds of {name} must satisfy 0 < low < high, but are {bounds}!', field=name)


def _refine(
    func: Callable[[float], float],
    start: float,
    low: float,
    high: float,
    tolerance: float
) -> tuple[float, float]:
    """ Bounded Brent minimization, the start and the interval ends compete with its result. """
    candidates = [(func(start), start)]
    if high > low:
        result = optimize.minimize_scalar(func, bounds=(low, high), method='bounded',
                                          options={'xatol': tolerance})
        candidates.append((float(result.fun), float(result.x)))
        candidates.append((func(low), low))
        candidates.append((func(high), high))
    value, x = min(candidates)
    return x, value


def optimize_sensitivity(
    config: SimulationConfig,
    kappa_d_bounds: tuple[float, float],
    t_d_bounds: tuple[float, float],
    source_linewidth: float = 0.0,
    grid: int = 41
) -> OptimizationResult:
    """
    Minimize S(κ_d, T_d) within the bounds.

    A coarse grid locates the basin, then alternating bounded Brent searches
    along κ_d and T_d refine it within the neighbouring grid cells. An
    optimum on a bound stays on the bound. The operating point of config
    is a candidate of the coarse stage.

    Raises DomainError for degenerate bounds or bandwidths the device
    cannot reach.
    """
    _check_bounds('kappa_d', kappa_d_bounds)
    _check_bounds('t_d', t_d_bounds)
    if grid < 3:
        raise DomainError(f'At least 3 grid points per axis are required, got {grid}!', field='grid')

    model = SensitivityModel(config, source_linewidth)
    # Reachability of both bandwidth bounds.
    model(kappa_d_bounds[0], t_d_bounds[0])
    model(kappa_d_bounds[1], t_d_bounds[0])

    kappa_axis = np.linspace(kappa_d_bounds[0], kappa_d_bounds[1], grid)
    t_axis = np.linspace(t_d_bounds[0], t_d_bounds[1], grid)
    values = model.grid(kappa_axis, t_axis)

    best_row = np.argmin(values, axis=1)
    curve_t_d = t_axis[best_row]
    curve_sensitivity = values[np.arange(grid), best_row]

    i, j = np.unravel_index(int(np.argmin(values)), values.shape)
    kappa_d, t_d = float(kappa_axis[i]), float(t_axis[j])
    best = float(values[i, j])

    kappa_op = float(np.clip(detector_bandwidth(config.device, config.tuning), *kappa_d_bounds))
    t_op = float(np.clip(config.timing.t_d, *t_d_bounds))
    operating = model(kappa_op, t_op)
    if operating < best:
        kappa_d, t_d, best = kappa_op, t_op, operating

    kappa_step = float(kappa_axis[1] - kappa_axis[0])
    t_step = float(t_axis[1] - t_axis[0])
    kappa_low = max(kappa_d - kappa_step, kappa_d_bounds[0])
    kappa_high = min(kappa_d + kappa_step, kappa_d_bounds[1])
    t_low = max(t_d - t_step, t_d_bounds[0])
    t_high = min(t_d + t_step, t_d_bounds[1])

    for sweep in range(MAX_SWEEPS):
        previous = best
        kappa_d, best = _refine(lambda k: model(k, t_d), kappa_d, kappa_low, kappa_high, 1e-6 * kappa_step)
        t_d, best = _refine(lambda t: model(kappa_d, t), t_d, t_low, t_high, 1e-6 * t_step)
        logging.debug('Refinement sweep %d: κ_d = %.6g rad/s, T_d = %.6g s, S = %.6g', sweep, kappa_d, t_d, best)
        if previous - best <= SWEEP_TOLERANCE * best:
            break

    logging.info('Optimum S = %.4g W/√Hz at κ_d/2π = %.4g kHz, T_d = %.4g us (operating point %.4g W/√Hz)',
                 best, kappa_d / (2e3 * math.pi), t_d * 1e6, operating)

    return OptimizationResult(
        kappa_d=kappa_d,
        t_d=t_d,
        sensitivity=best,
        operating_sensitivity=operating,
        curve_kappa_d=kappa_axis,
        curve_t_d=curve_t_d,
        curve_sensitivity=curve_sensitivity
    )


def brute_force_optimum(
    config: SimulationConfig,
    kappa_d_bounds: tuple[float, float],
    t_d_bounds: tuple[float, float],
    source_linewidth: float = 0.0,
    points: int = 100
) -> tuple[float, float, float, float, float]:
    """
    Best point of a dense grid: (κ_d, T_d, S, κ_d step, T_d step).
    Reference for optimize_sensitivity.
    """
    _check_bounds('kappa_d', kappa_d_bounds)
    _check_bounds('t_d', t_d_bounds)
    model = SensitivityModel(config, source_linewidth)
    kappa_axis = np.linspace(kappa_d_bounds[0], kappa_d_bounds[1], points)
    t_axis = np.linspace(t_d_bounds[0], t_d_bounds[1], points)
    values = model.grid(kappa_axis, t_axis)
    i, j = np.unravel_index(int(np.argmin(values)), values.shape)
    return (float(kappa_axis[i]), float(t_axis[j]), float(values[i, j]),
            float(kappa_axis[1] - kappa_axis[0]), float(t_axis[1] - t_axis[0]))


def grid_distance(result: OptimizationResult, oracle: tuple[float, float, float, float, float]) -> float:
    """ Distance of the optimum from the oracle's best point, in oracle grid cells. """
    kappa_d, t_d, _, kappa_step, t_step = oracle
    distance = max(abs(result.kappa_d - kappa_d) / kappa_step, abs(result.t_d - t_d) / t_step)
    logging.debug('Distance to the grid oracle: %.3g cells', distance)
    return distance
