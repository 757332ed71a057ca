""" Flux tuning model kind of a SQUID-terminated resonator. """
from __future__ import annotations

from enum import Enum
from typing import Optional


class SquidModelKind(Enum):
    """ Flux tuning model kind of a SQUID-terminated resonator. """
    SINUSOIDAL = 1
    SQUID_EXACT = 2

    @classmethod
    def from_str(cls, kind: Optional[str]) -> SquidModelKind | None:
        """ Get SquidModelKind from str. """
        if not kind:
            return cls.SQUID_EXACT

        if isinstance(kind, cls):
            return kind

        if kind == 'sinusoidal-approx':
            return cls.SINUSOIDAL
        elif kind == 'squid-exact':
            return cls.SQUID_EXACT
        else:
            return None

    def __str__(self) -> str:
        if self == self.SINUSOIDAL:
            return "sinusoidal-approx"
        elif self == self.SQUID_EXACT:
            return "squid-exact"
        else:
            return "UNKNOWN"
