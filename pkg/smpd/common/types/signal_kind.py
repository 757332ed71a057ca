""" Kind of signal sent to the detector input. """
from __future__ import annotations

from enum import Enum
from typing import Optional


class SignalKind(Enum):
    """ Kind of signal sent to the detector input. """
    NONE = 0
    COHERENT = 1
    SPIN = 2

    @classmethod
    def from_str(cls, kind: Optional[str]) -> SignalKind | None:
        """ Get SignalKind from str. """
        if not kind:
            return cls.NONE

        if isinstance(kind, cls):
            return kind

        if kind == 'none':
            return cls.NONE
        elif kind == 'coherent':
            return cls.COHERENT
        elif kind == 'spin':
            return cls.SPIN
        else:
            return None

    def __str__(self) -> str:
        if self == self.COHERENT:
            return "coherent"
        elif self == self.SPIN:
            return "spin"
        else:
            return "none"
