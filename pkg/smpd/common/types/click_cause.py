""" Ground-truth origin of a simulated detector click. """
from __future__ import annotations

from enum import Enum
from typing import Optional


class ClickCause(Enum):
    """ Ground-truth origin of a simulated detector click. """
    SIGNAL = 1
    THERMAL = 2
    QUBIT_THERMAL = 3
    PUMP_HEATING = 4
    READOUT_ERROR = 5

    @classmethod
    def from_str(cls, cause: Optional[str]) -> ClickCause | None:
        """ Get ClickCause from str. """
        if isinstance(cause, cls):
            return cause

        for member in cls:
            if str(member) == cause:
                return member

        return None

    def __str__(self) -> str:
        if self == self.SIGNAL:
            return "signal"
        elif self == self.THERMAL:
            return "thermal"
        elif self == self.QUBIT_THERMAL:
            return "qubit_thermal"
        elif self == self.PUMP_HEATING:
            return "pump_heating"
        elif self == self.READOUT_ERROR:
            return "readout_error"
        else:
            return "UNKNOWN"
