""" Dispersive readout with Gaussian quadrature statistics. """
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from scipy import stats
from typing_extensions import Self

from smpd.common import DomainError


# Distance of the means from the threshold, in σ, used for perfect readouts.
_PERFECT_SEPARATION = 40.0


@dataclass(frozen=True)
class ReadoutModel:
    """
    Two Gaussian quadrature distributions and a threshold. A readout above
    the threshold is a click.
    """

    i_ground: float
    i_excited: float
    sigma: float
    threshold: float
    t_ro: float

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise DomainError(f'Readout noise must be positive, but is {self.sigma}!', field='sigma')
        if not self.t_ro >= 0:
            raise DomainError(f'Readout duration must not be negative, but is {self.t_ro}!', field='t_ro')

    @classmethod
    def from_fidelity(cls, f_ro: float, false_positive: float, t_ro: float) -> Self:
        """
        Model with unit noise and the ground state at 0, placing the threshold
        at the false positive bound and the excited state so that it is read
        as excited with probability f_ro.
        """
        if not 0.0 <= f_ro <= 1.0:
            raise DomainError(f'f_ro must be in [0, 1], but is {f_ro}!', field='f_ro')
        if not 0.0 <= false_positive < 0.5:
            raise DomainError(f'False positive bound must be in [0, 0.5), but is {false_positive}!',
                              field='p_false_positive')

        threshold = _PERFECT_SEPARATION if false_positive == 0 else float(stats.norm.isf(false_positive))
        if f_ro == 1.0:
            offset = _PERFECT_SEPARATION
        elif f_ro == 0.0:
            offset = -_PERFECT_SEPARATION
        else:
            offset = float(stats.norm.ppf(f_ro))

        return cls(i_ground=0.0, i_excited=threshold + offset, sigma=1.0, threshold=threshold, t_ro=t_ro)

    def excited_probability(self) -> float:
        """ Probability to read an excited qubit as excited, F_RO. """
        return float(stats.norm.sf((self.threshold - self.i_excited) / self.sigma))

    def false_positive_probability(self) -> float:
        """ Probability to read a ground state qubit as excited. """
        return float(stats.norm.sf((self.threshold - self.i_ground) / self.sigma))

    @property
    def separation(self) -> float:
        """ Distance of the means in units of σ. """
        return abs(self.i_excited - self.i_ground) / self.sigma

    def sample(self, rng: np.random.Generator, excited: npt.ArrayLike) -> npt.NDArray[np.float64]:
        """ Quadrature values for qubits in the given states. """
        excited = np.asarray(excited, dtype=bool)
        means = np.where(excited, self.i_excited, self.i_ground)
        return means + self.sigma * rng.standard_normal(excited.shape)

    def classify(self, quadrature: npt.ArrayLike) -> npt.NDArray[np.bool_]:
        """ Click decision for quadrature values. """
        return np.asarray(quadrature) > self.threshold

    def read_excited(self, rng: np.random.Generator) -> bool:
        """ Single readout of an excited qubit. """
        return bool(self.i_excited + self.sigma * rng.standard_normal() > self.threshold)

    def __repr__(self) -> str:
        return (f'ReadoutModel(F_RO={self.excited_probability():.4f}, '
                f'false_positive={self.false_positive_probability():.3g}, '
                f'separation={self.separation:.3f}σ, t_ro={self.t_ro * 1e6:.3g} µs)')

