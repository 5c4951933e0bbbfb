"""
Residual checks of the displacement transfer function against the boundary value problem it solves.

On each side of the damper G satisfies k*G'' - (s**2 + d*s)*G + b = 0, with b = 1 for uniform
forcing and 0 for boundary forcing. At the damper the two branches meet continuously and the
slope jumps by k*(G'(p+) - G'(p-)) = g*s*G(p). The functions here measure how well the closed
forms satisfy these conditions, using finite differences of the branch formulas.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .analytic import Side, g_branch
from .core import Damper, Forcing, StringParams

__all__ = [
    "InterfaceResiduals",
    "interface_residuals",
    "ode_residual",
    "step_size",
]

LOG = logging.getLogger(__name__)


@dataclass(frozen=True)
class InterfaceResiduals:
    """
    Relative residuals of the two interface conditions at the damper.

    Attributes:
        continuity: |G_L(p) - G_R(p)| / max(1, |G_L(p)|).
        jump: |k*(G_R'(p) - G_L'(p)) - g*s*G(p)|, relative to the largest of its terms
            or k*|G(p)|*max(|z|, 1/length), whichever is larger.
    """

    continuity: float
    jump: float


def step_size(s: complex, params: StringParams) -> float:
    """
    Return the finite difference step for the Laplace point s, 1e-2 / max(|z|, 1/length).
    """
    z = np.sqrt(s * (s + params.internal_damping) / params.stiffness)
    return 1e-2 / max(abs(z), 1 / params.length)


def _first_derivative(f, x: float, h: float) -> complex:
    def central(step):
        return (f(x + step) - f(x - step)) / (2 * step)

    return (4 * central(h / 2) - central(h)) / 3


def _second_derivative(f, x: float, h: float) -> complex:
    def central(step):
        return (f(x + step) - 2 * f(x) + f(x - step)) / step**2

    return (4 * central(h / 2) - central(h)) / 3


def _branch(s: complex, params: StringParams, damper: Damper, forcing: Forcing, side: Side):
    def f(x):
        return g_branch(x, s, params, damper, forcing, side)

    return f


def interface_residuals(s: complex, params: StringParams, damper: Damper, forcing: Forcing) -> InterfaceResiduals:
    """
    Measure continuity and the slope jump of G(x, s) at the damper.

    Raises:
        SingularPoint: G is undefined at s.
    """
    p, k = damper.position, params.stiffness
    h = step_size(s, params)
    left = _branch(s, params, damper, forcing, Side.LEFT)
    right = _branch(s, params, damper, forcing, Side.RIGHT)

    g_left, g_right = left(p), right(p)
    continuity = abs(g_left - g_right) / max(1.0, abs(g_left))

    slope_left = k * _first_derivative(left, p, h)
    slope_right = k * _first_derivative(right, p, h)
    damper_force = damper.gain * s * g_left
    # k*|G|/wavelength stands in for the slopes where both happen to be near zero
    natural = k * abs(g_left) * 1e-2 / h
    scale = max(abs(slope_left), abs(slope_right), abs(damper_force), natural, np.finfo(float).tiny)
    jump = abs(slope_right - slope_left - damper_force) / scale

    LOG.debug("Interface residuals at s=%s: continuity=%.3g jump=%.3g", s, continuity, jump)
    return InterfaceResiduals(continuity=float(continuity), jump=float(jump))


def ode_residual(x: float, s: complex, params: StringParams, damper: Damper, forcing: Forcing) -> float:
    """
    Return the relative residual of k*G'' - (s**2 + d*s)*G + b at the position x.

    The branch that owns x is differentiated, so x may lie close to the damper.

    Raises:
        ValueError: x is outside [0, length].
        SingularPoint: G is undefined at s.
    """
    if not 0 <= x <= params.length:
        raise ValueError(f"Expected a position inside [0, {params.length!r}], but got {x!r}")
    side = Side.LEFT if x <= damper.position else Side.RIGHT
    f = _branch(s, params, damper, forcing, side)
    h = step_size(s, params)

    stiffness_term = params.stiffness * _second_derivative(f, x, h)
    reaction_term = s * (s + params.internal_damping) * f(x)
    load = forcing.distributed_load
    scale = max(abs(stiffness_term), abs(reaction_term), load, np.finfo(float).tiny)
    return float(abs(stiffness_term - reaction_term + load) / scale)
