"""
Closed-form transfer functions of the damped string with a single point damper.

Two forcings are supported: a uniform distributed load with clamped ends, and a prescribed
displacement of the left end. In both cases the output is the average displacement.

All hyperbolic functions are evaluated with the growth factor exp(z*length) divided out.
Every sinh/cosh combination then reduces to terms of the form 1 - exp(-z*t), which stay
bounded in the closed right half-plane, so nothing overflows however large Re(z) gets.
Close to z = 0 the output transfer function is a 0/0 expression and is evaluated from
its power series in u = z**2 instead.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import core_utils
from .core import Damper, Forcing, StringParams
from .errors import PoleEncountered, SingularPoint

__all__ = [
    "AnalyticResponse",
    "AuxQuantities",
    "LimitCase",
    "Side",
    "aux_quantities",
    "boundary_g",
    "boundary_h",
    "displacement_g",
    "g_branch",
    "h_from_g_quadrature",
    "limit_h",
    "output_h",
    "uniform_g",
    "uniform_h",
]

LOG = logging.getLogger(__name__)

ComplexLike = Union[complex, np.ndarray]

# |z|*length below which H is evaluated from its series
Z_SWITCH = 0.1
# number of series coefficients in u = z**2 (terms through z**8)
SERIES_TERMS = 5
# relative size of eta below which it is treated as zero
POLE_GUARD = 1e-13


class Side(enum.Enum):
    """
    Which branch of the displacement transfer function to use: x <= p (LEFT) or x > p (RIGHT).
    """

    LEFT = "left"
    RIGHT = "right"


class LimitCase(enum.Enum):
    AT_ZERO = "at_zero"
    NO_DAMPING = "no_damping"
    INFINITE_GAIN = "infinite_gain"


@dataclass(frozen=True)
class AuxQuantities:
    """
    The auxiliary quantities z, beta1, beta2, gamma and eta shared by all transfer functions.

    beta1, beta2, gamma and eta are stored divided by exp(exponent), where exponent = z*length,
    so they stay representable for any s. Ratios of them are unaffected by the scaling.
    """

    z: ComplexLike
    beta1: ComplexLike
    beta2: ComplexLike
    gamma: ComplexLike
    eta: ComplexLike
    exponent: ComplexLike

    def unscaled(self) -> tuple[ComplexLike, ComplexLike, ComplexLike, ComplexLike, ComplexLike]:
        """
        Return (z, beta1, beta2, gamma, eta) without the scaling. Entries overflow to inf if too large.
        """
        with np.errstate(over="ignore", invalid="ignore"):
            scale = np.exp(self.exponent)
            return self.z, self.beta1 * scale, self.beta2 * scale, self.gamma * scale, self.eta * scale


@dataclass(frozen=True)
class _Scaled:
    beta1: np.ndarray
    beta2: np.ndarray
    gamma: np.ndarray
    eta: np.ndarray
    pole: np.ndarray


def _as_points(s: ComplexLike) -> tuple[np.ndarray, tuple]:
    shape = np.shape(s)
    return np.asarray(s, dtype=complex).ravel(), shape


def _restore(values: np.ndarray, shape: tuple) -> ComplexLike:
    if shape == ():
        return complex(values[0])
    return values.reshape(shape)


def _root(s: np.ndarray, params: StringParams, negate_root: bool) -> tuple[np.ndarray, np.ndarray]:
    """
    Return (s**2 + d*s, z) for an array of Laplace points, z on the principal branch unless negated.
    """
    w = s * (s + params.internal_damping)
    z = np.sqrt(w / params.stiffness)
    return w, (-z if negate_root else z)


def _scaled_aux(s: np.ndarray, z: np.ndarray, params: StringParams, damper: Damper) -> _Scaled:
    k, length, p = params.stiffness, params.length, damper.position
    q = length - p
    c = damper.gain * s
    kz = k * z

    def om(t):
        return core_utils.one_minus_exp(z * t)

    def size(t):
        # magnitude of 1 + exp(-z*t), the scale of om(t) before cancellation
        return 1 + np.abs(np.exp(-z * t))

    om_l, om_p, om_q = om(length), om(p), om(q)
    om_2p, om_2q = om(2 * p), om(2 * q)
    eta = kz * om(2 * length) / 2 + c * om_2p * om_2q / 4
    scale = np.abs(kz) * size(2 * length) / 2 + np.abs(c) * size(2 * p) * size(2 * q) / 4
    return _Scaled(
        beta1=kz * om_l**2 / 2 + c * om_2q * om_p**2 / 4,
        beta2=kz * om_l**2 / 2 + c * om_2p * om_q**2 / 4,
        gamma=kz * om_l**2 + c * om_l * om_p * om_q,
        eta=eta,
        pole=np.abs(eta) < POLE_GUARD * scale,
    )


def aux_quantities(
    s: ComplexLike, params: StringParams, damper: Damper, negate_root: bool = False
) -> AuxQuantities:
    """
    Return the auxiliary quantities at the Laplace point(s) s.

    Args:
        s: A complex number or array of them.
        params: The string.
        damper: The damper, inside the string.
        negate_root: Use -z instead of the principal square root. Every transfer function is
            even in z, so this only exists to check branch independence.
    """
    damper.validate(params)
    points, shape = _as_points(s)
    _, z = _root(points, params, negate_root)
    with np.errstate(over="ignore", invalid="ignore"):
        scaled = _scaled_aux(points, z, params, damper)
    return AuxQuantities(
        z=_restore(z, shape),
        beta1=_restore(scaled.beta1, shape),
        beta2=_restore(scaled.beta2, shape),
        gamma=_restore(scaled.gamma, shape),
        eta=_restore(scaled.eta, shape),
        exponent=_restore(z * params.length, shape),
    )


# Displacement transfer function
# ------------------------------


def _uniform_side(xa, near, far, z, w, c, scaled: _Scaled, params: StringParams):
    """
    One branch of G for uniform forcing, written in terms of distances from its own clamped end.

    Args:
        xa: Distance of x from the clamped end on this side.
        near: Distance from that end to the damper.
        far: Distance from the damper to the opposite end.
    """
    k, length = params.stiffness, params.length
    om = core_utils.one_minus_exp
    om_2x = om(2 * z * xa)
    string_part = k * z * om(z * length) * np.exp(-z * (length - xa)) * om_2x / 2
    damper_part = c * om(z * near) * om(2 * z * far) * np.exp(-z * (near - xa)) * om_2x / 4
    return (om(z * xa) - (string_part + damper_part) / scaled.eta) / w


def _boundary_side(x, side: Side, z, c, scaled: _Scaled, params: StringParams, damper: Damper):
    k, length, p = params.stiffness, params.length, damper.position
    om = core_utils.one_minus_exp
    value = k * z * om(2 * z * (length - x)) / 2
    if side is Side.LEFT:
        value = value + c * om(2 * z * (p - x)) * om(2 * z * (length - p)) / 4
    return np.exp(-z * x) * value / scaled.eta


def _branch_values(x, s, params, damper, forcing, side, negate_root):
    w, z = _root(s, params, negate_root)
    singular = w == 0
    if np.any(singular):
        raise SingularPoint(f"G is undefined where s*(s + d) = 0: {s[singular]}", s[singular])

    p, length = damper.position, params.length
    c = damper.gain * s
    with np.errstate(over="ignore", invalid="ignore"):
        scaled = _scaled_aux(s, z, params, damper)
        if np.any(scaled.pole):
            raise SingularPoint(f"eta vanishes at s = {s[scaled.pole]}", s[scaled.pole])

        if forcing is Forcing.UNIFORM:
            if side is Side.LEFT:
                return _uniform_side(x, p, length - p, z, w, c, scaled, params)
            return _uniform_side(length - x, length - p, p, z, w, c, scaled, params)
        return _boundary_side(x, side, z, c, scaled, params, damper)


def g_branch(
    x: Union[float, np.ndarray],
    s: ComplexLike,
    params: StringParams,
    damper: Damper,
    forcing: Forcing,
    side: Side,
    negate_root: bool = False,
) -> ComplexLike:
    """
    Evaluate one branch formula of the displacement transfer function G(x, s).

    The branch formulas are analytic in x, so they may be evaluated on the other side of the
    damper as well. This is used to take one-sided limits and derivatives at the damper.

    Args:
        x: Position(s) along the string.
        s: Laplace point(s), broadcast against x.
        params: The string.
        damper: The damper.
        forcing: Which forcing the displacement responds to.
        side: The branch to evaluate.
        negate_root: Use -z instead of the principal square root.

    Raises:
        SingularPoint: s*(s + d) = 0, or eta vanishes.
    """
    damper.validate(params)
    x_arr, s_arr = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(s, dtype=complex))
    shape = x_arr.shape
    values = _branch_values(x_arr.ravel(), s_arr.ravel(), params, damper, forcing, side, negate_root)
    return _restore(values, shape)


def displacement_g(
    x: Union[float, np.ndarray],
    s: ComplexLike,
    params: StringParams,
    damper: Damper,
    forcing: Forcing,
    negate_root: bool = False,
) -> ComplexLike:
    """
    Evaluate the displacement transfer function G(x, s) for the given forcing.

    Positions with x <= p use the left branch, x == p included.

    Raises:
        ValueError: x is outside [0, length].
        SingularPoint: s*(s + d) = 0, or eta vanishes.
    """
    damper.validate(params)
    x_arr, s_arr = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(s, dtype=complex))
    if np.any((x_arr < 0) | (x_arr > params.length)):
        raise ValueError(f"Expected positions inside [0, {params.length!r}], but got {x!r}")

    shape = x_arr.shape
    x_flat, s_flat = x_arr.ravel(), s_arr.ravel()
    left = _branch_values(x_flat, s_flat, params, damper, forcing, Side.LEFT, negate_root)
    right = _branch_values(x_flat, s_flat, params, damper, forcing, Side.RIGHT, negate_root)
    return _restore(np.where(x_flat <= damper.position, left, right), shape)


def uniform_g(x, s, params: StringParams, damper: Damper, negate_root: bool = False) -> ComplexLike:
    """
    Return G(x, s) for uniform forcing. See `displacement_g`.
    """
    return displacement_g(x, s, params, damper, Forcing.UNIFORM, negate_root)


def boundary_g(x, s, params: StringParams, damper: Damper, negate_root: bool = False) -> ComplexLike:
    """
    Return G(x, s) for forcing of the left boundary. G(0, s) = 1 and G(length, s) = 0.
    """
    return displacement_g(x, s, params, damper, Forcing.BOUNDARY_LEFT, negate_root)


# Output transfer function
# ------------------------


def _shift(series: np.ndarray) -> np.ndarray:
    """
    Multiply a batch of series by u, keeping the length.
    """
    shifted = np.zeros_like(series)
    shifted[..., 1:] = series[..., :-1]
    return shifted


def _series_h(s: np.ndarray, z: np.ndarray, params: StringParams, damper: Damper, forcing: Forcing) -> np.ndarray:
    """
    Evaluate H from its power series in u = z**2, treating c = g*s as a parameter.
    """
    k, length, p = params.stiffness, params.length, damper.position
    q = length - p
    terms = SERIES_TERMS + 2
    c = (damper.gain * s)[:, None]

    sinh_l = core_utils.sinh_over_z_series(length, terms)
    sinh_pq = core_utils.series_multiply(
        core_utils.sinh_over_z_series(p, terms), core_utils.sinh_over_z_series(q, terms), terms
    )
    # eta / u
    eta_u = k * sinh_l + c * sinh_pq

    if forcing is Forcing.UNIFORM:
        half_product = core_utils.series_multiply(
            core_utils.series_multiply(
                core_utils.sinh_over_z_series(length / 2, terms), core_utils.sinh_over_z_series(p / 2, terms), terms
            ),
            core_utils.sinh_over_z_series(q / 2, terms),
            terms,
        )
        # (z*length*eta - gamma) / z, whose first two coefficients vanish
        numerator = (
            length * _shift(eta_u)
            - 2 * k * core_utils.cosh_minus_one_series(length, terms)
            - 8 * c * _shift(np.broadcast_to(half_product, eta_u.shape))
        )
        numerator = numerator[:, 2 : 2 + SERIES_TERMS] / (k * length)
    else:
        # beta1 / z, whose first coefficient vanishes
        numerator = k * core_utils.cosh_minus_one_series(length, terms) + c * core_utils.series_multiply(
            core_utils.sinh_over_z_series(q, terms), core_utils.cosh_minus_one_series(p, terms), terms
        )
        numerator = numerator[:, 1 : 1 + SERIES_TERMS] / length

    quotient = core_utils.series_divide(numerator, eta_u[:, :SERIES_TERMS])
    return core_utils.series_evaluate(quotient, z**2)


def _zero_frequency_h(params: StringParams, forcing: Forcing) -> float:
    if forcing is Forcing.UNIFORM:
        return params.length**2 / (12 * params.stiffness)
    return 0.5


def output_h(
    s: ComplexLike, params: StringParams, damper: Damper, forcing: Forcing, negate_root: bool = False
) -> ComplexLike:
    """
    Evaluate the output transfer function H(s), the map from input to average displacement.

    s = 0 returns the exact limit, points with |z|*length < Z_SWITCH use the series, and all
    other points use the closed form.

    Args:
        s: A complex number or array of them, in the closed right half-plane.
        params: The string.
        damper: The damper.
        forcing: The forcing.
        negate_root: Use -z instead of the principal square root.

    Raises:
        PoleEncountered: eta vanishes at one of the points.
    """
    damper.validate(params)
    points, shape = _as_points(s)
    w, z = _root(points, params, negate_root)
    values = np.empty(points.shape, dtype=complex)

    at_zero = points == 0
    small = ~at_zero & (np.abs(z) * params.length < Z_SWITCH)
    direct = ~(at_zero | small)

    values[at_zero] = _zero_frequency_h(params, forcing)
    if np.any(small):
        LOG.debug("Evaluating H from its series at %d point(s)", np.count_nonzero(small))
        values[small] = _series_h(points[small], z[small], params, damper, forcing)
    if np.any(direct):
        s_d, z_d = points[direct], z[direct]
        with np.errstate(over="ignore", invalid="ignore"):
            scaled = _scaled_aux(s_d, z_d, params, damper)
        if np.any(scaled.pole):
            raise PoleEncountered(f"H has a pole at s = {s_d[scaled.pole]}", s_d[scaled.pole])
        if forcing is Forcing.UNIFORM:
            values[direct] = (1 - scaled.gamma / (z_d * params.length * scaled.eta)) / w[direct]
        else:
            values[direct] = scaled.beta1 / (z_d * params.length * scaled.eta)

    return _restore(values, shape)


def uniform_h(s: ComplexLike, params: StringParams, damper: Damper, negate_root: bool = False) -> ComplexLike:
    """
    Return H(s) for uniform forcing. H(0) = length**2 / (12 k). See `output_h`.
    """
    return output_h(s, params, damper, Forcing.UNIFORM, negate_root)


def boundary_h(s: ComplexLike, params: StringParams, damper: Damper, negate_root: bool = False) -> ComplexLike:
    """
    Return H(s) for boundary forcing. H(0) = 1/2. See `output_h`.
    """
    return output_h(s, params, damper, Forcing.BOUNDARY_LEFT, negate_root)


def limit_h(
    s: ComplexLike, params: StringParams, damper: Damper, forcing: Forcing, which: LimitCase
) -> ComplexLike:
    """
    Return a limiting form of H.

    AT_ZERO is the value at s = 0 and ignores s. NO_DAMPING is H without the damper, which is
    also the limit p -> 0 or p -> length. INFINITE_GAIN is the limit g -> infinity, where the
    damper pins the string at p.

    Raises:
        SingularPoint: The limit formula is undefined at s.
    """
    damper.validate(params)
    points, shape = _as_points(s)
    if which is LimitCase.AT_ZERO:
        return _restore(np.full(points.shape, _zero_frequency_h(params, forcing), dtype=complex), shape)

    w, z = _root(points, params, False)
    singular = w == 0
    if np.any(singular):
        raise SingularPoint(f"The {which.value} limit is undefined at s = {points[singular]}", points[singular])

    length, p = params.length, damper.position
    zl = z * length
    with np.errstate(over="ignore", invalid="ignore"):
        if which is LimitCase.NO_DAMPING:
            if forcing is Forcing.UNIFORM:
                values = (zl - 2 * np.tanh(zl / 2)) / (zl * w)
            else:
                values = np.tanh(zl / 2) / zl
        else:
            if forcing is Forcing.UNIFORM:
                values = (zl - 2 * (np.tanh(z * p / 2) + np.tanh(z * (length - p) / 2))) / (zl * w)
            else:
                values = np.tanh(z * p / 2) / zl

    bad = ~np.isfinite(values)
    if np.any(bad):
        raise SingularPoint(f"The {which.value} limit is undefined at s = {points[bad]}", points[bad])
    return _restore(values, shape)


def h_from_g_quadrature(s: complex, params: StringParams, damper: Damper, forcing: Forcing, n_points: int) -> complex:
    """
    Return H(s) as the average of G(x, s) over the string by Gauss-Legendre quadrature.

    Each side of the damper is integrated separately with n_points nodes, since G is smooth there.

    Raises:
        ValueError: n_points is below 16.
        SingularPoint: G is undefined at s.
    """
    if n_points < 16:
        raise ValueError(f"Expected at least 16 quadrature points, but got {n_points!r}")
    damper.validate(params)

    nodes, weights = np.polynomial.legendre.leggauss(n_points)
    p, length = damper.position, params.length
    total = 0j
    for side, lo, hi in ((Side.LEFT, 0.0, p), (Side.RIGHT, p, length)):
        half = (hi - lo) / 2
        x = lo + half * (nodes + 1)
        values = g_branch(x, np.full(x.shape, s, dtype=complex), params, damper, forcing, side)
        total += half * np.dot(weights, values)
    return complex(total / length)


@dataclass(frozen=True)
class AnalyticResponse:
    """
    The output transfer function on the imaginary axis, omega -> H(i*omega).
    """

    params: StringParams
    damper: Damper
    forcing: Forcing

    def evaluate(self, omega: Union[float, np.ndarray]) -> ComplexLike:
        return output_h(1j * np.asarray(omega, dtype=float), self.params, self.damper, self.forcing)
