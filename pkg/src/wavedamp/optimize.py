"""
Sweeps and local optimization of a norm criterion over the damper position and gain.
"""

from __future__ import annotations

import concurrent.futures
import enum
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.optimize

from . import core_utils
from .analytic import AnalyticResponse
from .core import Damper, Forcing, StringParams
from .discrete import DiscreteResponse, discretize
from .errors import NoConvergence, NormDiverged
from .norms import FrequencyResponse, NormConfig, h2_norm, hinf_norm

__all__ = [
    "ANALYTIC",
    "Backend",
    "Criterion",
    "OptimResult",
    "SweepResult",
    "SweepSpec",
    "criterion_value",
    "default_starts",
    "minimize",
    "sweep",
]

LOG = logging.getLogger(__name__)

# simplex diameter in (p, log g) below which a start counts as converged
CONVERGED_DIAMETER = 1e-4
DEFAULT_MAX_ITER = 400


class Criterion(enum.Enum):
    H2 = "h2"
    HINF = "hinf"


@dataclass(frozen=True)
class Backend:
    """
    Where transfer function values come from: the closed form, or the finite-difference model
    with `intervals` subintervals.
    """

    intervals: Optional[int] = None

    def __post_init__(self):
        if self.intervals is not None and self.intervals < 4:
            raise ValueError(f"Expected at least 4 subintervals, but got {self.intervals!r}")

    def __str__(self):
        return "analytic" if self.intervals is None else f"discrete:{self.intervals}"

    @classmethod
    def parse(cls, text: str) -> Backend:
        """
        Parse 'analytic' or 'discrete:N'.
        """
        if text == "analytic":
            return cls()
        name, _, count = text.partition(":")
        if name == "discrete" and count.isdigit():
            return cls(int(count))
        raise ValueError(f"Expected 'analytic' or 'discrete:N', but got {text!r}")

    @property
    def is_analytic(self) -> bool:
        return self.intervals is None

    def response(self, params: StringParams, damper: Damper, forcing: Forcing) -> FrequencyResponse:
        if self.is_analytic:
            return AnalyticResponse(params, damper, forcing)
        return DiscreteResponse(discretize(self.intervals, params, damper, forcing))


ANALYTIC = Backend()


def criterion_value(
    criterion: Criterion,
    params: StringParams,
    damper: Damper,
    forcing: Forcing,
    cfg: NormConfig,
    backend: Backend = ANALYTIC,
) -> float:
    """
    Return the H2 or H-infinity norm for one damper configuration.

    Raises:
        NormDiverged: The norm could not be computed.
    """
    response = backend.response(params, damper, forcing)
    if criterion is Criterion.HINF:
        return hinf_norm(response, params, cfg)[0]
    return h2_norm(response, cfg)


@dataclass(frozen=True)
class SweepSpec:
    """
    A grid of damper configurations.

    Attributes:
        p_range: (lo, hi, count) of linearly spaced positions.
        g_range: (lo, hi, count) of logarithmically spaced gains.
        criterion: The norm to evaluate.
        forcing: The forcing.
        backend: The transfer function backend.
    """

    p_range: tuple[float, float, int]
    g_range: tuple[float, float, int]
    criterion: Criterion
    forcing: Forcing
    backend: Backend = ANALYTIC

    def __post_init__(self):
        p_lo, p_hi, p_count = self.p_range
        g_lo, g_hi, g_count = self.g_range
        if not 0 < p_lo < p_hi:
            raise ValueError(f"Expected 0 < p_lo < p_hi, but got {self.p_range!r}")
        if not 0 < g_lo < g_hi:
            raise ValueError(f"Expected 0 < g_lo < g_hi, but got {self.g_range!r}")
        if p_count < 2 or g_count < 2:
            raise ValueError(f"Expected at least 2 points per axis, but got {p_count!r} and {g_count!r}")

    def validate(self, params: StringParams) -> SweepSpec:
        if not self.p_range[1] < params.length:
            raise ValueError(f"Expected p_hi < {params.length!r}, but got {self.p_range[1]!r}")
        return self

    def positions(self) -> np.ndarray:
        lo, hi, count = self.p_range
        return np.linspace(lo, hi, count)

    def gains(self) -> np.ndarray:
        lo, hi, count = self.g_range
        return np.geomspace(lo, hi, count)


@dataclass(frozen=True, eq=False)
class SweepResult:
    """
    Criterion values on a sweep grid. values[i, j] belongs to gains[i] and positions[j].

    Cells whose norm diverged hold inf and are ignored by min_cell and max_cell.
    """

    spec: SweepSpec
    positions: np.ndarray
    gains: np.ndarray
    values: np.ndarray

    def _cell(self, pick) -> tuple[float, float, float]:
        finite = np.isfinite(self.values)
        if not np.any(finite):
            raise ValueError("Expected at least one finite sweep cell, but every cell diverged")
        row, col = np.unravel_index(pick(np.where(finite, self.values, np.nan)), self.values.shape)
        return float(self.positions[col]), float(self.gains[row]), float(self.values[row, col])

    @property
    def min_cell(self) -> tuple[float, float, float]:
        """
        The (p, g, value) of the smallest finite cell.
        """
        return self._cell(np.nanargmin)

    @property
    def max_cell(self) -> tuple[float, float, float]:
        """
        The (p, g, value) of the largest finite cell.
        """
        return self._cell(np.nanargmax)

    @property
    def diverged_cells(self) -> int:
        return int(np.count_nonzero(~np.isfinite(self.values)))


def sweep(spec: SweepSpec, params: StringParams, cfg: NormConfig) -> SweepResult:
    """
    Evaluate the criterion on every cell of the sweep grid.

    Cells are evaluated independently on a thread pool, so a divergent cell only sets that
    cell to inf.
    """
    spec.validate(params)
    positions, gains = spec.positions(), spec.gains()
    cells = [(g, p) for g in gains for p in positions]

    def evaluate(cell):
        gain, position = cell
        try:
            return criterion_value(spec.criterion, params, Damper(position, gain), spec.forcing, cfg, spec.backend)
        except NormDiverged as exc:
            LOG.warning("Sweep cell p=%r g=%r diverged: %s", position, gain, exc)
            return math.inf

    with concurrent.futures.ThreadPoolExecutor(max_workers=core_utils.thread_count()) as executor:
        values = np.array(list(executor.map(evaluate, cells)), dtype=float).reshape(gains.size, positions.size)

    result = SweepResult(spec=spec, positions=positions, gains=gains, values=values)
    LOG.info(
        "Swept %s for %s forcing over %d cells (%d diverged)",
        spec.criterion.value,
        spec.forcing.value,
        values.size,
        result.diverged_cells,
    )
    return result


@dataclass(frozen=True)
class OptimResult:
    """
    The outcome of a multi-start minimization.

    Attributes:
        p_star: The optimal position.
        g_star: The optimal gain.
        value: The criterion at (p_star, g_star), evaluated afresh.
        evaluations: Criterion evaluations over all starts.
        converged: Whether the start that produced this result converged.
    """

    p_star: float
    g_star: float
    value: float
    evaluations: int
    converged: bool


def default_starts(bounds: Sequence[tuple[float, float]], count: int = 5) -> list[tuple[float, float]]:
    """
    Return a count x count grid of starts at the cell centres of the bounds, gains spaced logarithmically.
    """
    (p_lo, p_hi), (g_lo, g_hi) = bounds
    fractions = (np.arange(count) + 0.5) / count
    positions = p_lo + (p_hi - p_lo) * fractions
    gains = np.exp(np.log(g_lo) + (np.log(g_hi) - np.log(g_lo)) * fractions)
    return [(float(p), float(g)) for g in gains for p in positions]


def _check_bounds(bounds: Sequence[tuple[float, float]], params: StringParams):
    (p_lo, p_hi), (g_lo, g_hi) = bounds
    if not 0 < p_lo <= p_hi < params.length:
        raise ValueError(f"Expected position bounds inside (0, {params.length!r}), but got {(p_lo, p_hi)!r}")
    if not 0 < g_lo <= g_hi:
        raise ValueError(f"Expected positive gain bounds, but got {(g_lo, g_hi)!r}")


def minimize(
    criterion: Criterion,
    forcing: Forcing,
    params: StringParams,
    bounds: Sequence[tuple[float, float]],
    starts: Optional[Sequence[tuple[float, float]]] = None,
    cfg: Optional[NormConfig] = None,
    backend: Backend = ANALYTIC,
    max_iter: int = DEFAULT_MAX_ITER,
) -> OptimResult:
    """
    Minimize the criterion over damper position and gain with Nelder-Mead from several starts.

    The search runs in (p, log g) with the bounds enforced by the simplex. A bound whose ends
    coincide fixes that coordinate. The best converged start wins.

    Args:
        criterion: The norm to minimize.
        forcing: The forcing.
        params: The string.
        bounds: ((p_lo, p_hi), (g_lo, g_hi)).
        starts: (p, g) starting points, by default a 5 x 5 grid inside the bounds.
        cfg: Norm settings, by default NormConfig.for_string.
        backend: The transfer function backend.
        max_iter: Nelder-Mead iteration budget per start.

    Raises:
        ValueError: The bounds are invalid or no start was given.
        NoConvergence: No start converged. The best attempt is attached to the error.
    """
    _check_bounds(bounds, params)
    cfg = cfg or NormConfig.for_string(params, forcing)
    starts = default_starts(bounds) if starts is None else list(starts)
    if not starts:
        raise ValueError("Expected at least one start, but got none")

    log_bounds = np.array([bounds[0], (math.log(bounds[1][0]), math.log(bounds[1][1]))], dtype=float)
    free = log_bounds[:, 1] > log_bounds[:, 0]
    widths = log_bounds[free, 1] - log_bounds[free, 0]

    def to_point(free_values: np.ndarray, start: np.ndarray) -> tuple[float, float]:
        full = start.copy()
        full[free] = free_values
        full = np.clip(full, log_bounds[:, 0], log_bounds[:, 1])
        gain = math.exp(full[1]) if free[1] else bounds[1][0]
        return float(full[0]), float(gain)

    def objective_at(position: float, gain: float) -> float:
        try:
            return criterion_value(criterion, params, Damper(position, gain), forcing, cfg, backend)
        except NormDiverged:
            return math.inf

    def run(start: tuple[float, float]) -> tuple[float, float, float, int, bool]:
        origin = np.clip([start[0], math.log(start[1])], log_bounds[:, 0], log_bounds[:, 1])
        if not np.any(free):
            position, gain = to_point(origin[free], origin)
            return position, gain, objective_at(position, gain), 1, True

        x0 = origin[free]
        simplex = [x0]
        for i, width in enumerate(widths):
            vertex = x0.copy()
            step = 0.1 * width
            vertex[i] = x0[i] + step if x0[i] + step <= log_bounds[free][i, 1] else x0[i] - step
            simplex.append(vertex)

        result = scipy.optimize.minimize(
            lambda x: objective_at(*to_point(x, origin)),
            x0,
            method="Nelder-Mead",
            bounds=[tuple(b) for b in log_bounds[free]],
            options=dict(maxiter=max_iter, xatol=1e-6, fatol=1e-10, initial_simplex=np.array(simplex)),
        )
        vertices = result.final_simplex[0]
        diameter = max(np.linalg.norm(a - b) for a in vertices for b in vertices)
        position, gain = to_point(result.x, origin)
        LOG.debug(
            "Start %r ended at p=%r g=%r value=%r after %d evaluations (diameter %.2g)",
            start, position, gain, result.fun, result.nfev, diameter,
        )
        return position, gain, float(result.fun), int(result.nfev), bool(diameter < CONVERGED_DIAMETER)

    with concurrent.futures.ThreadPoolExecutor(max_workers=core_utils.thread_count()) as executor:
        outcomes = list(executor.map(run, starts))

    evaluations = sum(outcome[3] for outcome in outcomes)
    converged = [outcome for outcome in outcomes if outcome[4]]
    for outcome in outcomes:
        if not outcome[4]:
            LOG.warning("Start at p=%r g=%r did not converge", outcome[0], outcome[1])

    candidates = converged or outcomes
    position, gain, _, _, is_converged = min(candidates, key=lambda outcome: outcome[2])
    result = OptimResult(
        p_star=position,
        g_star=gain,
        value=objective_at(position, gain),
        evaluations=evaluations,
        converged=is_converged,
    )
    if not converged:
        raise NoConvergence(f"None of {len(starts)} starts converged within {max_iter} iterations", result)

    LOG.info("Minimum %s=%r at p=%r g=%r", criterion.value, result.value, position, gain)
    return result
