"""
H-infinity and H2 norms of a frequency response on the imaginary axis.

The H-infinity norm is found by scanning [0, omega_max] densely and refining every local
maximum of the scan with a golden-section search. The H2 norm integrates |H(i*omega)|**2 with
adaptive Gauss-Kronrod panels up to omega_max, and adds the integral of a fitted power law
asymptote beyond it.
"""

from __future__ import annotations

import dataclasses
import enum
import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, Optional, Protocol, runtime_checkable

import numpy as np

from .core import Forcing, StringParams, modal_spacing
from .errors import NormDiverged, PoleEncountered, SingularPencil, SingularPoint

__all__ = [
    "FrequencyResponse",
    "FunctionResponse",
    "H2Estimate",
    "NormConfig",
    "TailDecay",
    "h2_integral",
    "h2_norm",
    "hinf_norm",
]

LOG = logging.getLogger(__name__)

# 7-point Gauss and 15-point Kronrod rules on [-1, 1]
_KRONROD_NODES = np.array(
    [
        -0.991455371120812639206854697526329,
        -0.949107912342758524526189684047851,
        -0.864864423359769072789712788640926,
        -0.741531185599394439863864773280788,
        -0.586087235467691130294144845693013,
        -0.405845151377397166906606412076961,
        -0.207784955007898467600689403773245,
        0.0,
        0.207784955007898467600689403773245,
        0.405845151377397166906606412076961,
        0.586087235467691130294144845693013,
        0.741531185599394439863864773280788,
        0.864864423359769072789712788640926,
        0.949107912342758524526189684047851,
        0.991455371120812639206854697526329,
    ]
)
_KRONROD_WEIGHTS = np.array(
    [
        0.022935322010529224963732008058970,
        0.063092092629978553290700663189204,
        0.104790010322250183839876322541518,
        0.140653259715525918745189590510238,
        0.169004726639267902826583426598550,
        0.190350578064785409913256402421014,
        0.204432940075298892414161999234649,
        0.209482141084727828012999174891714,
        0.204432940075298892414161999234649,
        0.190350578064785409913256402421014,
        0.169004726639267902826583426598550,
        0.140653259715525918745189590510238,
        0.104790010322250183839876322541518,
        0.063092092629978553290700663189204,
        0.022935322010529224963732008058970,
    ]
)
_GAUSS_WEIGHTS = np.array(
    [
        0.0,
        0.129484966168869693270611432679082,
        0.0,
        0.279705391489276667901467771423780,
        0.0,
        0.381830050505118944950369775488975,
        0.0,
        0.417959183673469387755102040816327,
        0.0,
        0.381830050505118944950369775488975,
        0.0,
        0.279705391489276667901467771423780,
        0.0,
        0.129484966168869693270611432679082,
        0.0,
    ]
)

_INV_PHI = (math.sqrt(5) - 1) / 2

DEFAULT_INITIAL_PANELS = 64


@runtime_checkable
class FrequencyResponse(Protocol):
    """
    Anything that maps frequencies omega >= 0 to H(i*omega).

    evaluate must accept a float or a numpy array and return complex values of the same shape.
    Conjugate symmetry is assumed, so negative frequencies are never requested.
    A response that tends to a nonzero constant exposes it as a `feedthrough` attribute.
    """

    def evaluate(self, omega: Any) -> Any: ...


@dataclass(frozen=True)
class FunctionResponse:
    """
    Wrap a plain vectorized function omega -> H(i*omega) as a FrequencyResponse.
    """

    func: Callable[[np.ndarray], Any]

    def evaluate(self, omega):
        return np.asarray(self.func(np.asarray(omega, dtype=float)), dtype=complex)


class TailDecay(enum.Enum):
    """
    The assumed decay of |H(i*omega)| beyond omega_max.
    """

    INVERSE_OMEGA = "inverse_omega"
    INVERSE_OMEGA_SQ = "inverse_omega_sq"

    @property
    def exponent(self) -> int:
        return 1 if self is TailDecay.INVERSE_OMEGA else 2

    @classmethod
    def for_forcing(cls, forcing: Forcing) -> TailDecay:
        return cls.INVERSE_OMEGA_SQ if forcing is Forcing.UNIFORM else cls.INVERSE_OMEGA


@dataclass(frozen=True)
class NormConfig:
    """
    Settings for norm computations.

    Attributes:
        omega_max: The upper end of the scanned or integrated frequency range.
        quad_rel_tol: Relative tolerance of the H2 quadrature. Also sets the divergence
            threshold of the H-infinity scan: a peak larger than median/quad_rel_tol is
            reported as divergent.
        peak_samples_per_mode: Scan points per modal spacing pi*sqrt(k)/length.
        refine_iters: Golden-section iterations per local maximum.
        tail_decay: Asymptote used for the H2 tail beyond omega_max.
        initial_panels: Number of equal quadrature panels to start from.
        max_panels: Quadrature gives up with NormDiverged beyond this many panels.
        tail_period: Period of the oscillation of |H|**2 * omega**(2a) near omega_max. The tail
            constant is averaged over tail_periods whole periods ending at omega_max.
            Defaults to omega_max / (8 * tail_periods).
        tail_periods: Number of periods in the tail window.
    """

    omega_max: float
    quad_rel_tol: float = 1e-6
    peak_samples_per_mode: int = 16
    refine_iters: int = 40
    tail_decay: TailDecay = TailDecay.INVERSE_OMEGA_SQ
    initial_panels: Optional[int] = None
    max_panels: int = 20000
    tail_period: Optional[float] = None
    tail_periods: int = 8

    def __post_init__(self):
        if not self.omega_max > 0:
            raise ValueError(f"Expected a positive omega_max, but got {self.omega_max!r}")
        if not 0 < self.quad_rel_tol <= 1e-2:
            raise ValueError(f"Expected quad_rel_tol in (0, 1e-2], but got {self.quad_rel_tol!r}")
        if self.peak_samples_per_mode < 8:
            raise ValueError(f"Expected at least 8 peak samples per mode, but got {self.peak_samples_per_mode!r}")
        if self.refine_iters < 1:
            raise ValueError(f"Expected at least one refinement iteration, but got {self.refine_iters!r}")
        if self.initial_panels is not None and self.initial_panels < 1:
            raise ValueError(f"Expected a positive number of initial panels, but got {self.initial_panels!r}")
        if self.max_panels < self.panel_count:
            raise ValueError(f"Expected max_panels >= {self.panel_count}, but got {self.max_panels!r}")
        if self.tail_period is not None and not self.tail_period > 0:
            raise ValueError(f"Expected a positive tail_period, but got {self.tail_period!r}")
        if self.tail_periods < 2:
            raise ValueError(f"Expected at least two tail periods, but got {self.tail_periods!r}")
        if self.tail_window > self.omega_max * (1 + 1e-9):
            raise ValueError(f"Expected a tail window within omega_max, but got {self.tail_window!r}")

    @property
    def panel_count(self) -> int:
        return self.initial_panels if self.initial_panels is not None else DEFAULT_INITIAL_PANELS

    @property
    def tail_window(self) -> float:
        period = self.tail_period if self.tail_period is not None else self.omega_max / (8 * self.tail_periods)
        return period * self.tail_periods

    @classmethod
    def for_string(cls, params: StringParams, forcing: Forcing, **overrides) -> NormConfig:
        """
        Return the default configuration for a string and forcing.

        omega_max covers 50 modal spacings with two initial panels per spacing, and the tail
        asymptote matches the forcing: 1/omega**2 for uniform, 1/omega for boundary. The tail
        window holds up to 8 periods of two modal spacings, the period of |tanh(z*length/2)|
        on the imaginary axis.

        Args:
            params: The string.
            forcing: The forcing.
            **overrides: Field values that replace the defaults. None values are ignored.
        """
        spacing = modal_spacing(params)
        overrides = {key: value for key, value in overrides.items() if value is not None}
        omega_max = overrides.pop("omega_max", 50 * spacing)
        periods = min(8, math.floor(omega_max / (2 * spacing) + 1e-9))
        kwargs = dict(
            omega_max=omega_max,
            tail_decay=TailDecay.for_forcing(forcing),
            initial_panels=max(1, 2 * math.ceil(omega_max / spacing - 1e-9)),
            tail_period=2 * spacing if periods >= 2 else omega_max / 2,
            tail_periods=max(2, periods),
        )
        kwargs.update(overrides)
        return cls(**kwargs)

    def as_dict(self) -> dict:
        """
        Return the configuration as plain JSON-serializable values.
        """
        result = dataclasses.asdict(self)
        result["tail_decay"] = self.tail_decay.value
        return result


@dataclass(frozen=True)
class H2Estimate:
    """
    The parts of an H2 norm computation.

    Attributes:
        value: The H2 norm, sqrt((integral + tail) / pi).
        integral: The integral of |H(i*omega)|**2 over [0, omega_max].
        tail: The integral of the fitted asymptote over [omega_max, inf).
        tail_bound: Bound on the change of the norm when omega_max moves, from the spread of the
            per-period tail constants plus the quadrature tolerance.
        panels: The number of quadrature panels used.
    """

    value: float
    integral: float
    tail: float
    tail_bound: float
    panels: int


def _magnitude(resp: FrequencyResponse, omega: np.ndarray, cfg: NormConfig) -> np.ndarray:
    """
    Return |H(i*omega)|, converting evaluation failures into NormDiverged.
    """
    try:
        values = np.abs(np.asarray(resp.evaluate(omega), dtype=complex))
    except (PoleEncountered, SingularPoint, SingularPencil) as exc:
        raise NormDiverged(f"Response could not be evaluated: {exc}", cfg, "pole") from exc
    values = np.broadcast_to(values, np.shape(omega))
    if not np.all(np.isfinite(values)):
        bad = np.asarray(omega)[~np.isfinite(values)]
        raise NormDiverged(f"Response is not finite at omega = {bad}", cfg, "non-finite")
    return values


def _local_maxima(values: np.ndarray) -> np.ndarray:
    """
    Return the indices of all local maxima, endpoints included.
    """
    if values.size < 2:
        return np.arange(values.size)
    higher_than_left = np.concatenate(([True], values[1:] >= values[:-1]))
    higher_than_right = np.concatenate((values[:-1] >= values[1:], [True]))
    return np.flatnonzero(higher_than_left & higher_than_right)


def _golden_section(
    resp: FrequencyResponse, lo: np.ndarray, hi: np.ndarray, cfg: NormConfig
) -> tuple[np.ndarray, np.ndarray]:
    """
    Maximize |H| on every bracket [lo, hi] at once. Returns (omega, magnitude) of the best points.
    """
    a, b = lo.copy(), hi.copy()
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = _magnitude(resp, c, cfg), _magnitude(resp, d, cfg)
    for _ in range(cfg.refine_iters):
        right = fc < fd
        a = np.where(right, c, a)
        b = np.where(right, b, d)
        c_next = np.where(right, d, b - _INV_PHI * (b - a))
        d_next = np.where(right, a + _INV_PHI * (b - a), c)
        f_new = _magnitude(resp, np.where(right, d_next, c_next), cfg)
        fc, fd = np.where(right, fd, f_new), np.where(right, f_new, fc)
        c, d = c_next, d_next
    take_c = fc >= fd
    return np.where(take_c, c, d), np.where(take_c, fc, fd)


def hinf_norm(resp: FrequencyResponse, params: StringParams, cfg: NormConfig) -> tuple[float, float]:
    """
    Return the H-infinity norm of resp and the frequency where it is attained.

    Args:
        resp: The frequency response.
        params: The string, used for the modal spacing that sets the scan density.
        cfg: Norm settings.

    Returns:
        (value, argmax_omega)

    Raises:
        NormDiverged: The response is not finite on [0, omega_max], or its peak exceeds
            the median of the scan by more than 1/quad_rel_tol.
    """
    spacing = modal_spacing(params)
    count = max(2, math.ceil(cfg.omega_max / spacing * cfg.peak_samples_per_mode)) + 1
    omega = np.linspace(0.0, cfg.omega_max, count)
    values = _magnitude(resp, omega, cfg)

    peaks = _local_maxima(values)
    lo = omega[np.maximum(peaks - 1, 0)]
    hi = omega[np.minimum(peaks + 1, count - 1)]
    refined_omega, refined_values = _golden_section(resp, lo, hi, cfg)

    candidates_omega = np.concatenate((omega[peaks], refined_omega))
    candidates = np.concatenate((values[peaks], refined_values))
    best = int(np.argmax(candidates))
    value, argmax = float(candidates[best]), float(candidates_omega[best])

    threshold = max(float(np.median(values)), np.finfo(float).tiny) / cfg.quad_rel_tol
    if value > threshold:
        raise NormDiverged(
            f"Peak {value!r} at omega={argmax!r} exceeds the scan median by more than 1/{cfg.quad_rel_tol!r}",
            cfg,
            "unbounded peak",
        )
    LOG.debug("H-infinity norm %r at omega=%r from %d scan points, %d peaks", value, argmax, count, peaks.size)
    return value, argmax


def _kronrod_panels(
    resp: FrequencyResponse, lo: np.ndarray, hi: np.ndarray, cfg: NormConfig, power: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """
    Integrate |H|**2 * omega**(2*power) over each panel. Returns (Kronrod estimates, |Kronrod - Gauss| errors).
    """
    half = (hi - lo) / 2
    nodes = (lo + half)[:, None] + half[:, None] * _KRONROD_NODES[None, :]
    squared = _magnitude(resp, nodes.ravel(), cfg).reshape(nodes.shape) ** 2
    if power:
        squared = squared * nodes ** (2 * power)
    kronrod = half * (squared @ _KRONROD_WEIGHTS)
    gauss = half * (squared @ _GAUSS_WEIGHTS)
    return kronrod, np.abs(kronrod - gauss)


def _adaptive_integral(
    resp: FrequencyResponse, edges: np.ndarray, cfg: NormConfig, power: int = 0
) -> tuple[float, int]:
    """
    Integrate |H|**2 * omega**(2*power) from edges[0] to edges[-1], starting from the given panels.

    Panels whose error exceeds their share of quad_rel_tol*|integral| are halved until the
    total error estimate is within quad_rel_tol*|integral|. Returns (integral, panels).
    """
    span = float(edges[-1] - edges[0])
    lo, hi = edges[:-1], edges[1:]
    estimates, errors = _kronrod_panels(resp, lo, hi, cfg, power)
    accepted_total, accepted_error, accepted_count = 0.0, 0.0, 0

    while True:
        total = accepted_total + float(estimates.sum())
        total_error = accepted_error + float(errors.sum())
        if total_error <= cfg.quad_rel_tol * abs(total):
            break

        split = errors > cfg.quad_rel_tol * abs(total) * (hi - lo) / span
        if not np.any(split):
            split = errors == errors.max()
        accepted_total += float(estimates[~split].sum())
        accepted_error += float(errors[~split].sum())
        accepted_count += int(np.count_nonzero(~split))

        mid = (lo[split] + hi[split]) / 2
        lo, hi = np.concatenate((lo[split], mid)), np.concatenate((mid, hi[split]))
        if accepted_count + lo.size > cfg.max_panels:
            raise NormDiverged(
                f"H2 quadrature needs more than {cfg.max_panels} panels (error {total_error!r} for {total!r})",
                cfg,
                "panel budget exhausted",
            )
        estimates, errors = _kronrod_panels(resp, lo, hi, cfg, power)

    return total, accepted_count + lo.size


def _tail(resp: FrequencyResponse, cfg: NormConfig) -> np.ndarray:
    """
    Integrate the asymptote C/omega**(2a) from omega_max to infinity.

    C is the mean of |H|**2 * omega**(2a) over each period of the tail window. Returns the
    tail for the mean, the smallest and the largest of these per-period constants.
    """
    hi = cfg.omega_max
    window = min(cfg.tail_window, hi)
    edges = hi - window + window * np.arange(cfg.tail_periods + 1) / cfg.tail_periods
    edges[-1] = hi
    power = cfg.tail_decay.exponent

    constants = np.empty(cfg.tail_periods)
    for index, (lo_k, hi_k) in enumerate(zip(edges[:-1], edges[1:])):
        integral, _ = _adaptive_integral(resp, np.linspace(lo_k, hi_k, 5), cfg, power)
        constants[index] = integral / (hi_k - lo_k)

    scale = 1 / hi if power == 1 else 1 / (3 * hi**3)
    return scale * np.array([constants.mean(), constants.min(), constants.max()])


def h2_integral(resp: FrequencyResponse, cfg: NormConfig) -> H2Estimate:
    """
    Compute the H2 norm of resp together with its quadrature and tail contributions.

    The tail bound covers the spread of the per-period tail constants and the quadrature
    tolerance, so that moving omega_max changes the value by less than it.

    Raises:
        NormDiverged: The response is not finite, tends to a nonzero constant, or more than
            max_panels panels are needed.
    """
    feedthrough = getattr(resp, "feedthrough", 0.0)
    if feedthrough:
        raise NormDiverged(
            f"Response tends to the feedthrough {feedthrough!r}, so its H2 norm is infinite", cfg, "feedthrough"
        )

    edges = np.linspace(0.0, cfg.omega_max, cfg.panel_count + 1)
    total, panels = _adaptive_integral(resp, edges, cfg)
    tail, tail_low, tail_high = _tail(resp, cfg)
    value = math.sqrt((total + tail) / math.pi)
    spread = math.sqrt((total + tail_high) / math.pi) - math.sqrt((total + tail_low) / math.pi)
    tail_bound = spread + cfg.quad_rel_tol * value
    LOG.debug("H2 integral %r plus tail %r over %d panels", total, tail, panels)
    return H2Estimate(value=value, integral=total, tail=float(tail), tail_bound=tail_bound, panels=panels)


def h2_norm(resp: FrequencyResponse, cfg: NormConfig) -> float:
    """
    Return the H2 norm sqrt((1/pi) * integral of |H(i*omega)|**2 over [0, inf)).

    Raises:
        NormDiverged: See `h2_integral`.
    """
    return h2_integral(resp, cfg).value
