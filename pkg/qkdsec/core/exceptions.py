from typing import Optional


class QKDSecError(Exception):
    """Base class for toolkit errors"""


class InvalidInputError(QKDSecError, ValueError):
    """Malformed or out-of-range argument"""


class UnsupportedError(QKDSecError):
    """Requested mode is not implemented"""


class CapacityError(QKDSecError):
    """Enumeration or dimension cap exceeded"""


class InfeasibleError(QKDSecError):
    """Constraint set is empty or overlaps are inconsistent"""


class ProtocolAbort(QKDSecError):
    """A protocol phase decided to abort the run"""

    def __init__(self, reason: str, phase: Optional[str] = None):
        super().__init__(reason)
        self.reason = reason
        self.phase = phase
