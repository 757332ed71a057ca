""" Scenario kinds of the smpd runner. """
from __future__ import annotations

from enum import Enum
from typing import Optional


class ScenarioKind(Enum):
    """ Scenario kinds of the smpd runner, one per reproduced figure or table. """
    TUNING_CURVES = 1
    FWM_MAP = 2
    DARK_VS_TEMPERATURE = 3
    DARK_VS_BANDWIDTH = 4
    EFFICIENCY_SWEEP = 5
    CLICK_TRACES = 6
    FLUORESCENCE = 7
    SENSITIVITY_REPORT = 8
    OPTIMIZE = 9

    @classmethod
    def from_str(cls, kind: Optional[str]) -> ScenarioKind | None:
        """ Get ScenarioKind from str. """
        if isinstance(kind, cls):
            return kind

        for member in cls:
            if str(member) == kind:
                return member

        return None

    def __str__(self) -> str:
        return self.name.lower().replace('_', '-')
