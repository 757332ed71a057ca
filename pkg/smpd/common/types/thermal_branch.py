""" Branch of the dark count vs temperature model. """
from __future__ import annotations

from enum import Enum
from typing import Optional


class ThermalBranch(Enum):
    """
    Branch of the dark count vs temperature model.

    THERMAL counts scale with the buffer field occupation, QUBIT counts with the
    qubit equilibrium excited population.
    """
    THERMAL = 1
    QUBIT = 2

    @classmethod
    def from_str(cls, branch: Optional[str]) -> ThermalBranch | None:
        """ Get ThermalBranch from str. """
        if not branch:
            return cls.THERMAL

        if isinstance(branch, cls):
            return branch

        if branch == 'thermal':
            return cls.THERMAL
        elif branch == 'qubit':
            return cls.QUBIT
        else:
            return None

    def __str__(self) -> str:
        if self == self.QUBIT:
            return "qubit"
        else:
            return "thermal"
