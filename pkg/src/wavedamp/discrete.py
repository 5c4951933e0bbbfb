"""
Finite-difference model of the damped string.

The string is split into n equal subintervals of width h = length/n. The unknowns are the
displacements of the n-1 interior nodes, which gives the second-order system

    M q'' + D q' + K q = B w,    y = C q + feedthrough * w

with M = I, K = (k/h**2) * tridiag(-1, 2, -1) and D = d*I + (g/h) e_j e_j^T, where j is the
grid node nearest to the damper.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
import scipy.linalg
import scipy.sparse

from .analytic import output_h
from .core import Damper, Forcing, StringParams
from .errors import FeedthroughNonzero, InvalidGrid, SingularPencil, UnstableSystem

__all__ = [
    "ConvergenceRow",
    "DiscreteResponse",
    "SecondOrderSystem",
    "convergence_order",
    "convergence_study",
    "discrete_h2_lyapunov",
    "discrete_tf",
    "discrete_tf_dense",
    "discretize",
]

LOG = logging.getLogger(__name__)

MIN_INTERVALS = 4
# largest n accepted by the dense Lyapunov solve
MAX_LYAPUNOV_INTERVALS = 400


@dataclass(frozen=True, eq=False)
class SecondOrderSystem:
    """
    The semi-discretized string.

    Attributes:
        n: The number of subintervals. The system has n - 1 unknowns.
        step: The grid spacing h = length / n.
        string_stiffness: The stiffness k of the string.
        internal_damping: The distributed damping d, so D = d*I plus the damper.
        damper_node: The grid node carrying the damper, in [1, n - 1].
        damper_gain_scaled: The damper gain divided by the grid spacing, g/h.
        input_vec: The input vector B.
        output_vec: The output weights C.
        feedthrough: The direct contribution of the input to the output.
    """

    n: int
    step: float
    string_stiffness: float
    internal_damping: float
    damper_node: int
    damper_gain_scaled: float
    input_vec: np.ndarray
    output_vec: np.ndarray
    feedthrough: float

    @property
    def size(self) -> int:
        return self.n - 1

    @property
    def damper_index(self) -> int:
        """
        The position of the damper node in the vector of unknowns.
        """
        return self.damper_node - 1

    @property
    def stiffness_coeff(self) -> float:
        return self.string_stiffness / self.step**2

    def mass_matrix(self) -> scipy.sparse.spmatrix:
        return scipy.sparse.identity(self.size, format="csr")

    def stiffness_matrix(self) -> scipy.sparse.spmatrix:
        off = -self.stiffness_coeff * np.ones(self.size - 1)
        main = 2 * self.stiffness_coeff * np.ones(self.size)
        return scipy.sparse.diags([off, main, off], [-1, 0, 1], format="csr")

    def damping_matrix(self) -> scipy.sparse.spmatrix:
        diagonal = self.internal_damping * np.ones(self.size)
        diagonal[self.damper_index] += self.damper_gain_scaled
        return scipy.sparse.diags(diagonal, 0, format="csr")


def damper_node(n: int, params: StringParams, damper: Damper) -> int:
    """
    Return the grid node nearest to the damper, floor(p/h + 1/2), clamped to the interior nodes.
    """
    step = params.length / n
    return min(max(math.floor(damper.position / step + 0.5), 1), n - 1)


def discretize(n: int, params: StringParams, damper: Damper, forcing: Forcing) -> SecondOrderSystem:
    """
    Build the finite-difference system with n subintervals.

    For uniform forcing every node is loaded and the output weights are 1/n. For boundary
    forcing only the first interior node sees the input through the stiffness coupling, and
    the trapezoid rule gives the driven boundary node a feedthrough weight of 1/(2n).

    Raises:
        InvalidGrid: n is below 4.
        ValueError: The damper is not inside the string.
    """
    if n < MIN_INTERVALS:
        raise InvalidGrid(f"Expected at least {MIN_INTERVALS} subintervals, but got {n!r}")
    damper.validate(params)

    step = params.length / n
    node = damper_node(n, params, damper)
    if abs(node * step - damper.position) > 1e-12 * params.length:
        LOG.debug("Damper at %r moved to grid node %d at %r", damper.position, node, node * step)

    output_vec = np.full(n - 1, 1.0 / n)
    if forcing is Forcing.UNIFORM:
        input_vec = np.ones(n - 1)
        feedthrough = 0.0
    else:
        input_vec = np.zeros(n - 1)
        input_vec[0] = params.stiffness / step**2
        feedthrough = 1.0 / (2 * n)

    return SecondOrderSystem(
        n=n,
        step=step,
        string_stiffness=params.stiffness,
        internal_damping=params.internal_damping,
        damper_node=node,
        damper_gain_scaled=damper.gain / step,
        input_vec=input_vec,
        output_vec=output_vec,
        feedthrough=feedthrough,
    )


def _thomas(diagonal: np.ndarray, off: float, rhs: np.ndarray) -> np.ndarray:
    """
    Solve a batch of constant-diagonal tridiagonal systems.

    Args:
        diagonal: Array of shape (m,), the main diagonal of each system.
        off: The value on both off-diagonals, shared by all systems.
        rhs: Array of shape (m, r, N), r right-hand sides per system.

    Raises:
        SingularPencil: A pivot vanished.
    """
    size = rhs.shape[-1]
    scale = np.abs(diagonal) + 2 * abs(off)
    ratios = np.empty((diagonal.size, size), dtype=complex)
    work = np.empty(rhs.shape, dtype=complex)

    pivot = diagonal
    for i in range(size):
        if i > 0:
            pivot = diagonal - off * ratios[:, i - 1]
        if np.any(np.abs(pivot) <= np.finfo(float).eps * scale):
            raise SingularPencil(f"Tridiagonal factorization broke down at row {i}")
        ratios[:, i] = off / pivot
        previous = work[..., i - 1] if i > 0 else 0
        work[..., i] = (rhs[..., i] - off * previous) / pivot[:, None]

    for i in range(size - 2, -1, -1):
        work[..., i] -= ratios[:, i, None] * work[..., i + 1]
    return work


def discrete_tf(system: SecondOrderSystem, s: Union[complex, np.ndarray]) -> Union[complex, np.ndarray]:
    """
    Evaluate C (s**2 M + s D + K)^-1 B + feedthrough at one or more Laplace points.

    The tridiagonal part is factorized with the Thomas algorithm and the damper is added
    back with the Sherman-Morrison formula, so each point costs O(n).

    Raises:
        SingularPencil: The pencil is singular at one of the points.
    """
    shape = np.shape(s)
    points = np.asarray(s, dtype=complex).ravel()
    size = system.size

    diagonal = points**2 + system.internal_damping * points + 2 * system.stiffness_coeff
    unit = np.zeros(size)
    unit[system.damper_index] = 1.0
    rhs = np.broadcast_to(np.stack((system.input_vec, unit)), (points.size, 2, size))
    solved = _thomas(diagonal, -system.stiffness_coeff, rhs)
    response, influence = solved[:, 0], solved[:, 1]

    sigma = points * system.damper_gain_scaled
    denominator = 1 + sigma * influence[:, system.damper_index]
    if np.any(np.abs(denominator) <= np.finfo(float).eps * (1 + np.abs(sigma * influence[:, system.damper_index]))):
        raise SingularPencil("Rank-one damper update is singular")
    corrected = response - (sigma * response[:, system.damper_index] / denominator)[:, None] * influence

    values = corrected @ system.output_vec + system.feedthrough
    if shape == ():
        return complex(values[0])
    return values.reshape(shape)


def discrete_tf_dense(system: SecondOrderSystem, s: complex) -> complex:
    """
    Evaluate the discrete transfer function with a dense LU solve. Slow, used as a reference.

    Raises:
        SingularPencil: The pencil is singular at s.
    """
    pencil = (s**2 * system.mass_matrix() + s * system.damping_matrix() + system.stiffness_matrix()).toarray()
    try:
        solution = scipy.linalg.solve(pencil, system.input_vec.astype(complex))
    except scipy.linalg.LinAlgError as exc:
        raise SingularPencil(f"Pencil is singular at s = {s!r}") from exc
    return complex(system.output_vec @ solution + system.feedthrough)


def discrete_h2_lyapunov(system: SecondOrderSystem) -> float:
    """
    Return the H2 norm of the discrete system from its controllability Gramian.

    The first-order realization is x' = [[0, I], [-K, -D]] x + [0; B] w, y = [C, 0] x.

    Raises:
        FeedthroughNonzero: The system has a direct feedthrough, so its H2 norm is infinite.
        InvalidGrid: The system is too large for the dense solve.
        UnstableSystem: The realization is not asymptotically stable.
    """
    if system.feedthrough != 0:
        raise FeedthroughNonzero(
            f"Expected a system without feedthrough, but got feedthrough {system.feedthrough!r}"
        )
    if system.n > MAX_LYAPUNOV_INTERVALS:
        raise InvalidGrid(f"Expected at most {MAX_LYAPUNOV_INTERVALS} subintervals, but got {system.n!r}")
    if not np.any(system.input_vec):
        return 0.0

    size = system.size
    state = np.zeros((2 * size, 2 * size))
    state[:size, size:] = np.eye(size)
    state[size:, :size] = -system.stiffness_matrix().toarray()
    state[size:, size:] = -system.damping_matrix().toarray()

    eigenvalues = np.linalg.eigvals(state)
    abscissa = float(np.max(eigenvalues.real))
    # undamped modes come out with real parts of rounding size, either sign
    if abscissa >= -1e-10 * float(np.max(np.abs(eigenvalues))):
        raise UnstableSystem(f"Expected a stable system, but the spectral abscissa is {abscissa!r}")

    input_vec = np.concatenate((np.zeros(size), system.input_vec))[:, None]
    output_vec = np.concatenate((system.output_vec, np.zeros(size)))
    gramian = scipy.linalg.solve_continuous_lyapunov(state, -input_vec @ input_vec.T)
    return math.sqrt(max(float(output_vec @ gramian @ output_vec), 0.0))


@dataclass(frozen=True)
class DiscreteResponse:
    """
    The discrete transfer function on the imaginary axis, omega -> H_n(i*omega).
    """

    system: SecondOrderSystem

    def evaluate(self, omega):
        return discrete_tf(self.system, 1j * np.asarray(omega, dtype=float))

    @property
    def feedthrough(self) -> float:
        return self.system.feedthrough


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    h: float
    abs_error: float
    discrete_value: complex
    analytic_value: complex


def convergence_study(
    params: StringParams, damper: Damper, forcing: Forcing, s: complex, n_list: Sequence[int]
) -> list[ConvergenceRow]:
    """
    Compare the discrete transfer function with the closed form at s for every n in n_list.

    Raises:
        InvalidGrid: An n is below 4.
        PoleEncountered: The closed form has a pole at s.
        SingularPencil: A discrete pencil is singular at s.
    """
    analytic_value = complex(output_h(s, params, damper, forcing))
    rows = []
    for n in n_list:
        system = discretize(n, params, damper, forcing)
        discrete_value = complex(discrete_tf(system, s))
        rows.append(
            ConvergenceRow(
                n=n,
                h=system.step,
                abs_error=abs(discrete_value - analytic_value),
                discrete_value=discrete_value,
                analytic_value=analytic_value,
            )
        )
        LOG.debug("n=%d: |H_n - H| = %r", n, rows[-1].abs_error)
    return rows


def convergence_order(rows: Sequence[ConvergenceRow]) -> float:
    """
    Return the least-squares slope of log(abs_error) against log(h).

    Raises:
        ValueError: Fewer than two rows have distinct h and a positive error.
    """
    usable = [row for row in rows if row.abs_error > 0]
    if len({row.h for row in usable}) < 2:
        raise ValueError(f"Expected two or more rows with distinct h and non-zero error, but got {len(usable)}")
    log_h = np.log([row.h for row in usable])
    log_error = np.log([row.abs_error for row in usable])
    slope, _ = np.polyfit(log_h, log_error, 1)
    return float(slope)
