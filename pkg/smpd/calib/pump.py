""" Iterative calibration of the pump amplitude to unit cooperativity. """
import logging
import math

from dataclasses import dataclass, field
from typing import Callable

from scipy import stats

from smpd.common import CalibrationError


@dataclass(frozen=True)
class PumpStep:
    """ One measurement of the calibration loop. """

    xi: float
    # Cooperativity returned by the oracle at xi.
    cooperativity: float
    # Estimate of C/ξ² after this measurement, pooled over all of them with noise.
    gain: float


@dataclass
class PumpCalibration:
    """ Result of calibrate_pump. """

    xi: float
    converged: bool
    # Number of pump updates after the initial measurement.
    steps: int
    log: list[PumpStep] = field(default_factory=list)
    message: str = ''

    @property
    def predicted_cooperativity(self) -> float:
        """ Cooperativity expected at the final pump amplitude. """
        if not self.log:
            return math.nan
        return self.log[-1].gain * self.xi ** 2


def calibrate_pump(
    oracle: Callable[[float], float],
    xi_initial: float,
    tolerance: float = 0.02,
    max_iterations: int = 10,
    noise: float = 0.0,
    confidence: float = 0.98,
    consistency: float = 0.25
) -> PumpCalibration:
    """
    Tune the pump amplitude until the cooperativity is 1.

    The oracle maps ξ0 to a measured cooperativity with C ∝ |ξ0|². Every
    measurement gives an estimate of the gain C/ξ². Without measurement
    noise the pump is updated as ξ ← ξ/√C from the latest measurement.
    With noise the estimates are pooled by their geometric mean and the pump
    is set to ξ = 1/√gain; this departs from ξ/√C when the oracle is not
    exactly quadratic, and relies on `noise` describing the oracle.

    The calibration has converged when the latest measurement moves the
    pooled gain by less than tolerance, the measured C is within
    consistency of 1, and the pooled gain is known well enough: with the
    relative measurement noise `noise`, the confidence interval of the
    pooled estimate must fit into the tolerance.

    Args:
        oracle: Measurement of the cooperativity at a pump amplitude.
        xi_initial: First pump amplitude, positive.
        tolerance: Accepted deviation |C - 1|.
        max_iterations: Maximum number of pump updates.
        noise: Relative standard deviation of one measurement.
        confidence: Two-sided confidence level of the pooled estimate.
        consistency: Accepted deviation of a single measurement from 1.
    """
    if not xi_initial > 0:
        raise CalibrationError(f'Initial pump amplitude must be positive, but is {xi_initial}!')
    if not 0 < confidence < 1:
        raise CalibrationError(f'Confidence must be in (0, 1), but is {confidence}!')

    z = float(stats.norm.isf(0.5 * (1.0 - confidence)))
    log_gains: list[float] = []
    log: list[PumpStep] = []
    xi = xi_initial

    for step in range(max_iterations + 1):
        measured = oracle(xi)
        if not (measured > 0 and math.isfinite(measured)):
            raise CalibrationError(f'Oracle returned cooperativity {measured} at ξ = {xi}, no conversion seen!')

        log_gains.append(math.log(measured / xi ** 2))
        if noise == 0.0:
            gain = measured / xi ** 2
        else:
            gain = math.exp(sum(log_gains) / len(log_gains))
        log.append(PumpStep(xi=xi, cooperativity=measured, gain=gain))

        logging.debug('Pump calibration step %d: ξ = %.6g, C = %.6g, gain %.6g',
                      step, xi, measured, gain)

        if len(log) > 1:
            settled = abs(gain * xi ** 2 - 1.0) < tolerance
            consistent = abs(measured - 1.0) < consistency
            resolved = z * noise / math.sqrt(len(log_gains)) <= tolerance
            if settled and consistent and resolved:
                xi = 1.0 / math.sqrt(gain)
                logging.info('Pump calibrated after %d steps: ξ = %.6g', step, xi)
                return PumpCalibration(xi=xi, converged=True, steps=step, log=log)

        if step < max_iterations:
            xi = 1.0 / math.sqrt(gain)

    logging.warning('Pump calibration did not converge in %d iterations, last C = %.4g',
                    max_iterations, log[-1].cooperativity)
    return PumpCalibration(
        xi=xi, converged=False, steps=max_iterations, log=log,
        message=f'no convergence in {max_iterations} iterations')
