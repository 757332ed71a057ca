""" How a computed value is compared against its target. """
from __future__ import annotations

from enum import Enum
from typing import Optional


class ToleranceKind(Enum):
    """ How a computed value is compared against its target. """
    ABSOLUTE = 1
    RELATIVE = 2
    FACTOR = 3
    POISSON = 4
    UPPER_BOUND = 5
    RANGE = 6
    NONE = 7

    @classmethod
    def from_str(cls, kind: Optional[str]) -> ToleranceKind | None:
        """ Get ToleranceKind from str. """
        if not kind:
            return cls.NONE

        if isinstance(kind, cls):
            return kind

        for member in cls:
            if str(member) == kind:
                return member

        return None

    def __str__(self) -> str:
        return self.name.lower()
