"""
Convenience functions of wavedamp that take plain numbers instead of domain objects.
"""

from __future__ import annotations

from typing import Optional, Union

import numpy as np

from .analytic import AnalyticResponse, output_h
from .core import Damper, Forcing, StringParams
from .discrete import DiscreteResponse, discrete_h2_lyapunov, discretize
from .norms import NormConfig, h2_norm, hinf_norm
from .optimize import Backend, Criterion, OptimResult, minimize

__all__ = [
    "AnalyticResponse",
    "Backend",
    "Criterion",
    "Damper",
    "DiscreteResponse",
    "Forcing",
    "NormConfig",
    "StringParams",
    "bode",
    "damper_norm",
    "discrete_h2",
    "optimal_damper",
    "transfer",
]


def _forcing(forcing: Union[str, Forcing]) -> Forcing:
    return forcing if isinstance(forcing, Forcing) else Forcing(forcing)


def transfer(
    s: Union[complex, np.ndarray],
    position: float,
    gain: float,
    forcing: Union[str, Forcing] = Forcing.UNIFORM,
    params: Optional[StringParams] = None,
) -> Union[complex, np.ndarray]:
    """
    Return the output transfer function H(s) for a damper at `position` with viscosity `gain`.

    Args:
        s: Laplace point(s).
        position: The damper position.
        gain: The damper gain.
        forcing: 'uniform' or 'boundary'.
        params: The string, the default string if omitted.
    """
    params = params or StringParams()
    return output_h(s, params, Damper(position, gain), _forcing(forcing))


def bode(
    omega: np.ndarray,
    position: float,
    gain: float,
    forcing: Union[str, Forcing] = Forcing.UNIFORM,
    params: Optional[StringParams] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Return the magnitude and phase (radians) of H(i*omega).
    """
    values = np.asarray(transfer(1j * np.asarray(omega, dtype=float), position, gain, forcing, params))
    return np.abs(values), np.angle(values)


def damper_norm(
    criterion: Union[str, Criterion],
    position: float,
    gain: float,
    forcing: Union[str, Forcing] = Forcing.UNIFORM,
    params: Optional[StringParams] = None,
    backend: Backend = Backend(),
    **overrides,
) -> float:
    """
    Return the H2 or H-infinity norm of H for one damper configuration.

    Args:
        criterion: 'h2' or 'hinf'.
        position: The damper position.
        gain: The damper gain.
        forcing: 'uniform' or 'boundary'.
        params: The string, the default string if omitted.
        backend: The transfer function backend.
        **overrides: NormConfig fields that replace the defaults of NormConfig.for_string.

    Raises:
        NormDiverged: The norm could not be computed.
    """
    params = params or StringParams()
    forcing = _forcing(forcing)
    criterion = criterion if isinstance(criterion, Criterion) else Criterion(criterion)
    cfg = NormConfig.for_string(params, forcing, **overrides)
    response = backend.response(params, Damper(position, gain).validate(params), forcing)
    if criterion is Criterion.HINF:
        return hinf_norm(response, params, cfg)[0]
    return h2_norm(response, cfg)


def discrete_h2(
    n: int, position: float, gain: float, params: Optional[StringParams] = None
) -> float:
    """
    Return the Lyapunov H2 norm of the finite-difference model under uniform forcing.
    """
    params = params or StringParams()
    return discrete_h2_lyapunov(discretize(n, params, Damper(position, gain), Forcing.UNIFORM))


def optimal_damper(
    criterion: Union[str, Criterion] = Criterion.H2,
    forcing: Union[str, Forcing] = Forcing.UNIFORM,
    params: Optional[StringParams] = None,
    bounds: Optional[tuple[tuple[float, float], tuple[float, float]]] = None,
) -> OptimResult:
    """
    Return the damper position and gain that minimize the criterion.

    The default bounds cover the whole string and gains from 0.1 to 1000.

    Raises:
        NoConvergence: No optimizer start converged.
    """
    params = params or StringParams()
    criterion = criterion if isinstance(criterion, Criterion) else Criterion(criterion)
    bounds = bounds or ((0.01 * params.length, 0.99 * params.length), (0.1, 1000.0))
    return minimize(criterion, _forcing(forcing), params, bounds)
