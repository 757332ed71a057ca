""" Four-wave mixing conversion probability of a buffer photon. """
import numpy as np
import numpy.typing as npt

from smpd.common import DomainError


FloatArray = npt.NDArray[np.float64]


def s_4wm(
    delta: npt.ArrayLike,
    delta_p: npt.ArrayLike,
    cooperativity: float,
    kappa_b: float,
    kappa_w: float
) -> FloatArray:
    """
    Four-wave mixing conversion probability

        |S|² = 4C / |1 + C - 4δ(δ+δ_p)/(κ_b κ_w) + 2iδ/κ_b + 2i(δ+δ_p)/κ_w|²

    for a signal detuned by delta from the buffer and a pump detuned by
    delta_p from the matching condition.
    """
    if not (kappa_b > 0 and kappa_w > 0):
        raise DomainError(f'Linewidths must be positive, but are {kappa_b} and {kappa_w}!', field='kappa_b')
    if cooperativity < 0:
        raise DomainError(f'Cooperativity must not be negative, but is {cooperativity}!', field='cooperativity')

    delta = np.asarray(delta, dtype=np.float64)
    delta_p = np.asarray(delta_p, dtype=np.float64)
    sigma = delta + delta_p
    denominator = (1.0 + cooperativity - 4.0 * delta * sigma / (kappa_b * kappa_w)
                   + 2j * delta / kappa_b + 2j * sigma / kappa_w)
    return 4.0 * cooperativity / np.abs(denominator) ** 2
