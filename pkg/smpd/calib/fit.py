"""
Least-squares fitters of the calibration pipeline.

All fitters return a FitResult. Unusable input raises FitError; numerical
non-convergence and degenerate data are reported with success = False.
"""
from __future__ import annotations

import logging
import math

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import numpy.typing as npt

from scipy import optimize

from smpd.common import FitError
from smpd.common.types.squid_model import SquidModelKind
from smpd.common.types.thermal_branch import ThermalBranch
from smpd.core.conversion import s_4wm
from smpd.core.occupation import bose_einstein

from .tuning import FourWaveMixingMap, SquidTuningModel, junction_ratio


FloatArray = npt.NDArray[np.float64]

# Iteration limit of the solver.
MAX_ITERATIONS = 200
# Relative step tolerance of the solver.
STEP_TOLERANCE = 1e-9


@dataclass
class FitResult:
    """ Fitted parameters with 1σ uncertainties. """

    values: dict[str, float]
    errors: dict[str, float]
    residual_norm: float
    success: bool
    n_iterations: int
    message: str = ''
    # Quantities computed from the parameters, with their uncertainties in errors.
    derived: dict[str, float] = field(default_factory=dict)

    def __getitem__(self, name: str) -> float:
        if name in self.values:
            return self.values[name]
        return self.derived[name]

    def __contains__(self, name: object) -> bool:
        return name in self.values or name in self.derived

    def error(self, name: str) -> float:
        """ 1σ uncertainty of a parameter or derived quantity. """
        return self.errors.get(name, math.nan)

    def within(self, name: str, truth: float, n_sigma: float = 3.0) -> bool:
        """ Check that truth lies within n_sigma uncertainties of the fitted value. """
        return abs(self[name] - truth) <= n_sigma * self.error(name)


def _failure(names: Sequence[str], message: str, n_iterations: int = 0) -> FitResult:
    logging.info('Fit failed: %s', message)
    return FitResult(
        values={name: math.nan for name in names},
        errors={name: math.nan for name in names},
        residual_norm=math.nan,
        success=False,
        n_iterations=n_iterations,
        message=message
    )


@dataclass
class _Solution:
    x: FloatArray
    covariance: FloatArray
    cost: float
    residual_norm: float
    success: bool
    n_iterations: int
    message: str


def _solve(
    residuals: Callable[[FloatArray], FloatArray],
    x0: Sequence[float],
    bounds: Optional[tuple[Sequence[float], Sequence[float]]] = None,
    absolute_sigma: bool = False
) -> _Solution:
    """
    Minimize the sum of squared residuals.

    Levenberg-Marquardt is used for unbounded problems, the trust region
    reflective method otherwise. The covariance is (JᵀJ)⁻¹ at the optimum,
    scaled by the reduced χ² unless the residuals are already normalized
    by known uncertainties.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    n = len(x0)

    if bounds is None:
        result = optimize.least_squares(
            residuals, x0, method='lm', xtol=STEP_TOLERANCE, ftol=1e-12, gtol=1e-12,
            max_nfev=MAX_ITERATIONS * (n + 1))
    else:
        result = optimize.least_squares(
            residuals, x0, bounds=bounds, method='trf', xtol=STEP_TOLERANCE, ftol=1e-12, gtol=1e-12,
            max_nfev=MAX_ITERATIONS, x_scale='jac')

    m = len(result.fun)
    jac = np.atleast_2d(result.jac)
    covariance = np.linalg.pinv(jac.T @ jac)
    if not absolute_sigma:
        dof = max(m - n, 1)
        covariance = covariance * (2.0 * result.cost / dof)

    residual_norm = float(np.sqrt(2.0 * result.cost))
    success = bool(result.success) and result.status > 0 and math.isfinite(residual_norm)

    logging.debug('least_squares: status %s, %s evaluations, cost %.6g, %s',
                  result.status, result.nfev, result.cost, result.message)

    return _Solution(
        x=result.x,
        covariance=covariance,
        cost=float(result.cost),
        residual_norm=residual_norm,
        success=success,
        n_iterations=int(result.nfev),
        message=str(result.message)
    )


def _errors(solution: _Solution, scales: Sequence[float]) -> FloatArray:
    variance = np.clip(np.diag(solution.covariance), 0.0, None)
    return np.sqrt(variance) * np.abs(np.asarray(scales, dtype=np.float64))


def _noise_level(values: FloatArray) -> float:
    """ Robust noise estimate from the median absolute difference of neighbours. """
    diffs = np.diff(values, axis=-1).ravel()
    if len(diffs) == 0:
        return 0.0
    return float(1.4826 * np.median(np.abs(diffs - np.median(diffs))) / math.sqrt(2.0))


def fit_lorentzian(
    frequency: npt.ArrayLike,
    magnitude: npt.ArrayLike,
    sigma: Optional[npt.ArrayLike] = None,
    overcoupled: bool = True
) -> FitResult:
    """
    Fit baseline + amplitude/(1 + (2(f - center)/fwhm)²).

    Frequencies are in Hz. For a reflection dip (negative amplitude) the
    linewidth is split into coupling and internal rates in rad/s using the
    dip depth D = -amplitude/baseline = 4κ_iκ_c/κ², assigning the larger
    rate to the coupling if overcoupled.
    """
    f = np.asarray(frequency, dtype=np.float64)
    y = np.asarray(magnitude, dtype=np.float64)
    names = ('center', 'fwhm', 'amplitude', 'baseline')

    if f.shape != y.shape or f.ndim != 1:
        raise FitError(f'Frequency and magnitude must be 1D arrays of equal length, got {f.shape} and {y.shape}!')
    if len(f) < 8:
        raise FitError(f'At least 8 samples are required, got {len(f)}!')
    if not (np.all(np.isfinite(f)) and np.all(np.isfinite(y))):
        raise FitError('Samples contain non-finite values!')

    order = np.argsort(f)
    f = f[order]
    y = y[order]
    weights = np.ones_like(y)
    if sigma is not None:
        s = np.asarray(sigma, dtype=np.float64)[order]
        if np.any(s <= 0):
            raise FitError('Uncertainties must be positive!')
        weights = 1.0 / s

    span = f[-1] - f[0]
    if span <= 0 or np.ptp(y) == 0:
        return _failure(names, 'degenerate data: no frequency span or flat magnitude')

    edge = max(len(y) // 10, 1)
    baseline0 = float(np.median(np.concatenate([y[:edge], y[-edge:]])))
    deviation = y - baseline0
    peak = int(np.argmax(np.abs(deviation)))
    amplitude0 = float(deviation[peak])
    above = np.abs(deviation) >= 0.5 * abs(amplitude0)
    left = peak
    while left > 0 and above[left - 1]:
        left -= 1
    right = peak
    while right < len(f) - 1 and above[right + 1]:
        right += 1
    fwhm0 = max(f[right] - f[left], span / len(f))

    # Work in units of the initial width and magnitude.
    f_ref = f[peak]
    y_scale = max(abs(amplitude0), abs(baseline0), np.finfo(float).tiny)

    def _model(x: FloatArray) -> FloatArray:
        center, width, amplitude, baseline = x
        u = 2.0 * ((f - f_ref) / fwhm0 - center) / width
        return baseline + amplitude / (1.0 + u * u)

    def _residuals(x: FloatArray) -> FloatArray:
        return (_model(x) - y / y_scale) * weights * y_scale

    solution = _solve(_residuals, [0.0, 1.0, amplitude0 / y_scale, baseline0 / y_scale],
                      absolute_sigma=sigma is not None)

    center = f_ref + solution.x[0] * fwhm0
    fwhm = abs(solution.x[1]) * fwhm0
    amplitude = solution.x[2] * y_scale
    baseline = solution.x[3] * y_scale
    errors = _errors(solution, [fwhm0, fwhm0, y_scale, y_scale])

    result = FitResult(
        values={'center': center, 'fwhm': fwhm, 'amplitude': amplitude, 'baseline': baseline},
        errors=dict(zip(names, map(float, errors))),
        residual_norm=solution.residual_norm,
        success=solution.success,
        n_iterations=solution.n_iterations,
        message=solution.message
    )

    kappa = 2.0 * math.pi * fwhm
    result.derived['kappa'] = kappa
    result.errors['kappa'] = 2.0 * math.pi * result.errors['fwhm']

    if not result.success:
        return result
    if span < 2.0 * fwhm:
        result.success = False
        result.message = 'samples span less than two linewidths'
    elif abs(amplitude) < 3.0 * result.errors['amplitude']:
        result.success = False
        result.message = 'degenerate data: no significant resonance'
    elif amplitude < 0 < baseline:
        depth = min(-amplitude / baseline, 1.0)
        root = math.sqrt(1.0 - depth)
        major = 0.5 * kappa * (1.0 + root)
        minor = 0.5 * kappa * (1.0 - root)
        result.derived['kappa_c'] = major if overcoupled else minor
        result.derived['kappa_i'] = minor if overcoupled else major

    return result


def fit_squid_tuning(
    phi: npt.ArrayLike,
    omega: npt.ArrayLike,
    kind: SquidModelKind = SquidModelKind.SINUSOIDAL,
    participation: float = 1.0,
    fixed_asymmetry: Optional[float] = None,
    omega_floor: Optional[float] = None
) -> FitResult:
    """
    Fit a flux tuning curve ω(Φ) in rad/s.

    The sinusoid fits mean, amplitude and flux_offset; omega_max, the
    asymmetry d and the junction ratio r are derived using the participation
    ratio. The exact SQUID model fits omega_max, flux_offset and, unless
    fixed, the asymmetry.
    """
    phi = np.asarray(phi, dtype=np.float64)
    omega = np.asarray(omega, dtype=np.float64)
    if phi.shape != omega.shape or phi.ndim != 1:
        raise FitError('Flux and frequency samples must be 1D arrays of equal length!')
    if len(phi) < 4:
        raise FitError(f'At least 4 samples are required, got {len(phi)}!')

    peak = int(np.argmax(omega))
    omega_scale = float(np.max(omega))
    spread = max(float(np.ptp(omega)), 1e-12 * omega_scale)

    if kind == SquidModelKind.SINUSOIDAL:
        names = ('mean', 'amplitude', 'flux_offset')

        def _residuals(x: FloatArray) -> FloatArray:
            mean, amplitude, offset = x
            return (mean + amplitude * np.cos(2.0 * np.pi * (phi - offset)) - (omega - omega_scale) / spread)

        x0 = [(float(np.mean(omega)) - omega_scale) / spread, 0.5, float(phi[peak])]
        solution = _solve(_residuals, x0)
        mean = omega_scale + solution.x[0] * spread
        amplitude = abs(solution.x[1]) * spread
        offset = float(solution.x[2]) if solution.x[1] > 0 else float(solution.x[2]) + 0.5
        offset -= math.floor(offset + 0.5)
        errors = _errors(solution, [spread, spread, 1.0])

        result = FitResult(
            values={'mean': mean, 'amplitude': amplitude, 'flux_offset': offset},
            errors=dict(zip(names, map(float, errors))),
            residual_norm=solution.residual_norm * spread,
            success=solution.success,
            n_iterations=solution.n_iterations,
            message=solution.message
        )
        if 0 < amplitude < mean:
            model = SquidTuningModel.from_sinusoid(mean, amplitude, offset, participation)
            result.derived['omega_max'] = model.omega_max
            result.derived['omega_min'] = mean - amplitude
            result.derived['asymmetry'] = model.asymmetry
            if model.asymmetry < 1.0:
                result.derived['junction_ratio'] = junction_ratio(model.asymmetry)
        return result

    names = ('omega_max', 'flux_offset', 'asymmetry')

    def _curve(x: FloatArray) -> FloatArray:
        asymmetry = fixed_asymmetry if fixed_asymmetry is not None else x[2]
        model = SquidTuningModel(
            omega_max=omega_scale * (1.0 + x[0] * spread / omega_scale),
            asymmetry=float(np.clip(asymmetry, 0.0, 1.0)),
            flux_offset=x[1],
            participation=participation,
            omega_floor=omega_floor
        )
        return model.frequency(phi)

    def _exact_residuals(x: FloatArray) -> FloatArray:
        return (_curve(x) - omega) / spread

    x0 = [0.0, float(phi[peak])]
    lower = [-np.inf, -np.inf]
    upper = [np.inf, np.inf]
    if fixed_asymmetry is None:
        x0.append(0.5)
        lower.append(0.0)
        upper.append(1.0)
    solution = _solve(_exact_residuals, x0, bounds=(lower, upper))
    errors = _errors(solution, [spread, 1.0, 1.0][:len(x0)])

    values = {
        'omega_max': omega_scale + solution.x[0] * spread,
        'flux_offset': float(solution.x[1]),
        'asymmetry': float(solution.x[2]) if fixed_asymmetry is None else fixed_asymmetry
    }
    result = FitResult(
        values=values,
        errors={
            'omega_max': float(errors[0]),
            'flux_offset': float(errors[1]),
            'asymmetry': float(errors[2]) if fixed_asymmetry is None else 0.0
        },
        residual_norm=solution.residual_norm * spread,
        success=solution.success,
        n_iterations=solution.n_iterations,
        message=solution.message
    )
    if values['asymmetry'] < 1.0:
        result.derived['junction_ratio'] = junction_ratio(values['asymmetry'])
    return result


def _half_max_width(axis: FloatArray, profile: FloatArray, index: int, level: float) -> float:
    above = profile >= level
    left = index
    while left > 0 and above[left - 1]:
        left -= 1
    right = index
    while right < len(axis) - 1 and above[right + 1]:
        right += 1
    spacing = float(np.min(np.abs(np.diff(axis)))) if len(axis) > 1 else 1.0
    return max(float(axis[right] - axis[left]), spacing)


# Cooperativities used as starting points of the map fit.
_PRESEARCH_COOPERATIVITIES = (0.1, 0.3, 1.0, 3.0, 10.0)


def fit_4wm_map(fwm_map: FourWaveMixingMap, starts: int = 2) -> FitResult:
    """
    Fit baseline + amplitude·|S|²(ω - ω_b, ω_p - ω_4wm) to an excited state
    probability map.

    The cooperativity is identified by the cross term of the transmission,
    so it is fitted together with a free detection amplitude. A presearch
    over the cooperativity picks the most promising starting points.
    """
    names = ('cooperativity', 'kappa_b', 'kappa_w', 'omega_b', 'omega_4wm', 'amplitude', 'baseline')
    omega_p = np.asarray(fwm_map.omega_p, dtype=np.float64)
    omega = np.asarray(fwm_map.omega, dtype=np.float64)
    data = np.asarray(fwm_map.excited_prob, dtype=np.float64)

    if data.ndim != 2 or min(data.shape) < 5:
        raise FitError(f'The map must be a 2D grid of at least 5x5 points, got {data.shape}!')
    if not np.all(np.isfinite(data)):
        raise FitError('The map contains non-finite values!')

    baseline0 = float(np.percentile(data, 10))
    height = float(np.max(data)) - float(np.median(data))
    noise = _noise_level(data)
    if not height > 5.0 * noise or height <= 0:
        return _failure(names, 'no conversion ridge in the map')

    row, col = np.unravel_index(int(np.argmax(data)), data.shape)
    level = baseline0 + 0.5 * (float(data[row, col]) - baseline0)
    width_omega = _half_max_width(omega, data[row, :], int(col), level)
    width_pump = _half_max_width(omega_p, data[:, col], int(row), level)
    peak = float(data[row, col]) - baseline0

    omega_b0 = float(omega[col])
    omega_4wm0 = float(omega_p[row])
    y_scale = max(peak, np.finfo(float).tiny)
    delta = (omega - omega_b0)[np.newaxis, :]
    delta_p = (omega_p - omega_4wm0)[:, np.newaxis]

    def _unpack(x: FloatArray) -> tuple[float, float, float, float, float, float, float]:
        cooperativity = x[0]
        kappa_b = x[1] * width_omega
        kappa_w = x[2] * width_pump
        shift_b = x[3] * width_omega
        shift_4wm = x[4] * width_pump
        return cooperativity, kappa_b, kappa_w, shift_b, shift_4wm, x[5], x[6]

    def _residuals(x: FloatArray) -> FloatArray:
        cooperativity, kappa_b, kappa_w, shift_b, shift_4wm, amplitude, baseline = _unpack(x)
        model = baseline + amplitude * s_4wm(delta - shift_b, delta_p - shift_4wm,
                                             cooperativity, kappa_b, kappa_w)
        return (model - data / y_scale).ravel()

    candidates = []
    for cooperativity in _PRESEARCH_COOPERATIVITIES:
        x0 = np.array([
            cooperativity,
            1.0 / (1.0 + cooperativity),
            1.0 / (1.0 + cooperativity),
            0.0,
            0.0,
            (1.0 + cooperativity) ** 2 / (4.0 * cooperativity),
            baseline0 / y_scale
        ])
        cost = float(np.sum(_residuals(x0) ** 2))
        candidates.append((cost, cooperativity, x0))
    candidates.sort(key=lambda c: c[0])

    lower = [0.0, 1e-6, 1e-6, -np.inf, -np.inf, 0.0, -np.inf]
    upper = [100.0, np.inf, np.inf, np.inf, np.inf, np.inf, np.inf]

    best: Optional[_Solution] = None
    iterations = 0
    for cost, cooperativity, x0 in candidates[:max(starts, 1)]:
        logging.debug('4WM map fit start C=%s, initial cost %.6g', cooperativity, cost)
        solution = _solve(_residuals, x0, bounds=(lower, upper))
        iterations += solution.n_iterations
        if best is None or solution.cost < best.cost:
            best = solution

    assert best is not None
    cooperativity, kappa_b, kappa_w, shift_b, shift_4wm, amplitude, baseline = _unpack(best.x)
    errors = _errors(best, [1.0, width_omega, width_pump, width_omega, width_pump, y_scale, y_scale])

    return FitResult(
        values={
            'cooperativity': float(cooperativity),
            'kappa_b': float(kappa_b),
            'kappa_w': float(kappa_w),
            'omega_b': omega_b0 + float(shift_b),
            'omega_4wm': omega_4wm0 + float(shift_4wm),
            'amplitude': float(amplitude) * y_scale,
            'baseline': float(baseline) * y_scale
        },
        errors=dict(zip(names, map(float, errors))),
        residual_norm=best.residual_norm * y_scale,
        success=best.success,
        n_iterations=iterations,
        message=best.message
    )


def fit_line(
    x: npt.ArrayLike,
    y: npt.ArrayLike,
    sigma: Optional[npt.ArrayLike] = None
) -> FitResult:
    """
    Weighted linear fit y = intercept + slope·x.

    With sigma the uncertainties are taken as absolute, otherwise they are
    scaled by the residual variance.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    names = ('intercept', 'slope')
    if x.shape != y.shape or x.ndim != 1:
        raise FitError('x and y must be 1D arrays of equal length!')
    if len(x) < 3:
        raise FitError(f'At least 3 points are required for a line fit, got {len(x)}!')
    if np.ptp(x) == 0:
        return _failure(names, 'degenerate data: all points at the same abscissa')

    w = np.ones_like(y) if sigma is None else 1.0 / np.asarray(sigma, dtype=np.float64)
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise FitError('Uncertainties must be positive and finite!')

    design = np.column_stack([np.ones_like(x), x]) * w[:, np.newaxis]
    target = y * w
    params, _, _, _ = np.linalg.lstsq(design, target, rcond=None)
    residuals = design @ params - target
    covariance = np.linalg.inv(design.T @ design)
    if sigma is None:
        covariance *= float(residuals @ residuals) / (len(x) - 2)

    errors = np.sqrt(np.clip(np.diag(covariance), 0.0, None))
    return FitResult(
        values={'intercept': float(params[0]), 'slope': float(params[1])},
        errors={'intercept': float(errors[0]), 'slope': float(errors[1])},
        residual_norm=float(np.linalg.norm(residuals)),
        success=True,
        n_iterations=1
    )


def fit_thermal_model(
    points: Sequence[tuple[float, float]],
    branch: ThermalBranch,
    omega: float,
    sigma: Optional[npt.ArrayLike] = None
) -> FitResult:
    """
    Fit rate(T) = rate_0 + K·x(T) to (temperature, rate) points.

    x is the Bose-Einstein occupation at omega: the buffer frequency for the
    thermal branch, the qubit frequency for the qubit branch.
    """
    if len(points) < 4:
        raise FitError(f'At least 4 temperature points are required, got {len(points)}!')

    temperatures = np.array([p[0] for p in points], dtype=np.float64)
    rates = np.array([p[1] for p in points], dtype=np.float64)
    occupation = np.array([bose_einstein(omega, t) for t in temperatures])

    line = fit_line(occupation, rates, sigma)

    logging.debug('%s branch: rate_0 = %.4g ± %.2g, K = %.4g ± %.2g', branch,
                  line.values['intercept'], line.errors['intercept'],
                  line.values['slope'], line.errors['slope'])

    return FitResult(
        values={'rate_0': line.values['intercept'], 'k': line.values['slope']},
        errors={'rate_0': line.errors['intercept'], 'k': line.errors['slope']},
        residual_norm=line.residual_norm,
        success=line.success,
        n_iterations=line.n_iterations,
        message=str(branch)
    )


def fit_exponential_decay(
    times: npt.ArrayLike,
    counts: npt.ArrayLike
) -> FitResult:
    """
    Fit counts(t) = A·e^(-Γt) + B to binned Poisson counts.

    A first pass weights by the observed counts, the second by the model of
    the first pass. The integrated area A/Γ is reported as derived value.
    """
    t = np.asarray(times, dtype=np.float64)
    c = np.asarray(counts, dtype=np.float64)
    names = ('amplitude', 'rate', 'background')

    if t.shape != c.shape or t.ndim != 1:
        raise FitError('Times and counts must be 1D arrays of equal length!')
    if len(t) < 6:
        raise FitError(f'At least 6 bins are required, got {len(t)}!')
    if np.any(c < 0):
        raise FitError('Counts must not be negative!')

    t_scale = float(np.max(np.abs(t))) or 1.0
    y_scale = max(float(np.max(c)), 1.0)
    tail = c[-max(len(c) // 4, 1):]
    background0 = float(np.mean(tail))
    amplitude0 = max(float(c[0]) - background0, 1.0)
    below = np.nonzero(c - background0 < amplitude0 / math.e)[0]
    rate0 = 1.0 / float(t[below[0]]) if len(below) and t[below[0]] > 0 else 3.0 / t_scale

    def _model(x: FloatArray) -> FloatArray:
        return (x[0] * np.exp(-x[1] * t / t_scale) + x[2]) * y_scale

    x0 = np.array([amplitude0 / y_scale, rate0 * t_scale, background0 / y_scale])
    bounds = ([0.0, 0.0, 0.0], [np.inf, np.inf, np.inf])

    weights = 1.0 / np.sqrt(np.maximum(c, 1.0))
    solution = _solve(lambda x: (_model(x) - c) * weights, x0, bounds=bounds, absolute_sigma=True)
    iterations = solution.n_iterations

    weights = 1.0 / np.sqrt(np.maximum(_model(solution.x), 1.0))
    solution = _solve(lambda x: (_model(x) - c) * weights, solution.x, bounds=bounds, absolute_sigma=True)
    iterations += solution.n_iterations

    amplitude = float(solution.x[0]) * y_scale
    rate = float(solution.x[1]) / t_scale
    background = float(solution.x[2]) * y_scale
    errors = _errors(solution, [y_scale, 1.0 / t_scale, y_scale])

    result = FitResult(
        values={'amplitude': amplitude, 'rate': rate, 'background': background},
        errors=dict(zip(names, map(float, errors))),
        residual_norm=solution.residual_norm,
        success=solution.success,
        n_iterations=iterations,
        message=solution.message
    )

    if rate > 0:
        # Area A/Γ and lifetime 1/Γ with first order error propagation.
        cov = solution.covariance
        d_amplitude = y_scale / rate
        d_rate = -amplitude / rate ** 2 / t_scale
        area_var = (d_amplitude ** 2 * cov[0, 0] + d_rate ** 2 * cov[1, 1]
                    + 2.0 * d_amplitude * d_rate * cov[0, 1])
        result.derived['area'] = amplitude / rate
        result.errors['area'] = math.sqrt(max(area_var, 0.0))
        result.derived['lifetime'] = 1.0 / rate
        result.errors['lifetime'] = result.errors['rate'] / rate ** 2

    return result
