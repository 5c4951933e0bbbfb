"""
The core domain types of wavedamp: the string, the damper, and the forcing.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass

__all__ = [
    "Damper",
    "Forcing",
    "StringParams",
    "modal_spacing",
]

LOG = logging.getLogger(__name__)


@dataclass(frozen=True)
class StringParams:
    """
    Physical constants of the damped string.

    Attributes:
        length: String length in meters.
        internal_damping: Distributed viscous damping, 1/s. Zero is admitted, but norms over
            the imaginary axis may then diverge.
        stiffness: Squared wave speed, m^2/s^2.
    """

    length: float = 10.0
    internal_damping: float = 0.08
    stiffness: float = 1.0

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError(f"Expected a positive string length, but got {self.length!r}")
        if not self.stiffness > 0:
            raise ValueError(f"Expected a positive stiffness, but got {self.stiffness!r}")
        if not self.internal_damping >= 0:
            raise ValueError(f"Expected a non-negative internal damping, but got {self.internal_damping!r}")
        if self.internal_damping == 0:
            LOG.debug("String created without internal damping, imaginary axis norms may diverge")


@dataclass(frozen=True)
class Damper:
    """
    A single point damper.

    Attributes:
        position: Damper position along the string, must be inside (0, length).
        gain: Damper viscosity, non-negative.
    """

    position: float = 4.5
    gain: float = 10.0

    def __post_init__(self):
        if not self.gain >= 0:
            raise ValueError(f"Expected a non-negative damper gain, but got {self.gain!r}")

    def validate(self, params: StringParams) -> Damper:
        """
        Check that the damper sits strictly inside the given string, and return it.

        Raises:
            ValueError: The position is outside (0, length).
        """
        if not 0 < self.position < params.length:
            raise ValueError(
                f"Expected a damper position inside (0, {params.length!r}), but got {self.position!r}"
            )
        return self

    def mirrored(self, params: StringParams) -> Damper:
        """
        Return the damper reflected about the middle of the string.
        """
        return Damper(params.length - self.position, self.gain)


class Forcing(enum.Enum):
    """
    How the input enters the string.

    UNIFORM is a spatially constant load with both ends clamped.
    BOUNDARY_LEFT drives the left end displacement, the right end clamped, with no distributed load.
    """

    UNIFORM = "uniform"
    BOUNDARY_LEFT = "boundary"

    @property
    def distributed_load(self) -> float:
        return 1.0 if self is Forcing.UNIFORM else 0.0

    @property
    def left_boundary(self) -> float:
        return 1.0 if self is Forcing.BOUNDARY_LEFT else 0.0

    @property
    def right_boundary(self) -> float:
        return 0.0


def modal_spacing(params: StringParams) -> float:
    """
    Return the distance between neighbouring resonances of the undamped string, pi*sqrt(k)/length.
    """
    return math.pi * math.sqrt(params.stiffness) / params.length
