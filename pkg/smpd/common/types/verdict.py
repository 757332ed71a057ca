""" Outcome of the comparison of a computed value with its target. """
from __future__ import annotations

from enum import Enum
from typing import Optional


class Verdict(Enum):
    """ Outcome of the comparison of a computed value with its target. """
    PASS = 1
    FAIL = 2
    # Reported without tolerance.
    INFO = 3

    @classmethod
    def from_str(cls, verdict: Optional[str]) -> Verdict | None:
        """ Get Verdict from str. """
        if isinstance(verdict, cls):
            return verdict

        if verdict == 'PASS':
            return cls.PASS
        elif verdict == 'FAIL':
            return cls.FAIL
        elif verdict == 'INFO':
            return cls.INFO
        else:
            return None

    def __str__(self) -> str:
        return self.name
