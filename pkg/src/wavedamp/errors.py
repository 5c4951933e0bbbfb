"""
Exceptions raised by wavedamp.
"""

from __future__ import annotations

from typing import Any, Optional

import numpy as np

__all__ = [
    "FeedthroughNonzero",
    "InvalidGrid",
    "NoConvergence",
    "NormDiverged",
    "PoleEncountered",
    "SingularPencil",
    "SingularPoint",
    "UnstableSystem",
    "WaveDampError",
]


class WaveDampError(Exception):
    """
    Base class for all errors raised by wavedamp.
    """


class _PointsError(WaveDampError):
    """
    An error that remembers the Laplace points it was raised for.
    """

    def __init__(self, message: str, points: Any = None):
        super().__init__(message)
        self.points = np.atleast_1d(np.asarray(points, dtype=complex)) if points is not None else np.empty(0, complex)


class SingularPoint(_PointsError, ValueError):
    """
    A closed-form expression was evaluated where it is 0/0 or undefined.
    """


class PoleEncountered(_PointsError, ArithmeticError):
    """
    The denominator eta vanished at a point that is not a removable singularity.
    """


class NormDiverged(WaveDampError, ArithmeticError):
    """
    A norm is infinite or could not be resolved within the configured limits.

    `config` holds the NormConfig in use and `reason` a short tag such as "pole" or "feedthrough".
    """

    def __init__(self, message: str, config: Any = None, reason: str = ""):
        super().__init__(message)
        self.config = config
        self.reason = reason


class InvalidGrid(WaveDampError, ValueError):
    """
    The finite-difference grid is too coarse or too large for the requested operation.
    """


class SingularPencil(WaveDampError, ArithmeticError):
    """
    s**2 M + s D + K is singular at the requested point.
    """


class UnstableSystem(WaveDampError, ArithmeticError):
    """
    The discrete system has an eigenvalue on or right of the imaginary axis.
    """


class FeedthroughNonzero(WaveDampError, ValueError):
    """
    The system has a direct feedthrough, so its H2 norm is infinite.
    """


class NoConvergence(WaveDampError, RuntimeError):
    """
    Every optimizer start ran out of iterations.

    The best non-converged result is kept on `result` so callers can still report it.
    """

    def __init__(self, message: str, result: Optional[Any] = None):
        super().__init__(message)
        self.result = result
