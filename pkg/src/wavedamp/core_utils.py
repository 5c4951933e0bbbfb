"""
Numerical helpers shared by the wavedamp modules.

Power series here are coefficient arrays in u = z**2, lowest order first, with the last
axis indexing the power so a batch of series can be handled at once.
"""

from __future__ import annotations

import logging
import math
import os

import numpy as np

__all__ = [
    "THREADS_ENV",
    "cosh_minus_one_series",
    "format_float",
    "one_minus_exp",
    "series_divide",
    "series_evaluate",
    "series_multiply",
    "sinh_over_z_series",
    "thread_count",
]

LOG = logging.getLogger(__name__)

# caps the worker threads used by sweeps and multi-start optimization
THREADS_ENV = "WAVEDAMP_THREADS"


def one_minus_exp(w: np.ndarray) -> np.ndarray:
    """
    Return 1 - exp(-w) without cancellation for small |w|.
    """
    return -np.expm1(-np.asarray(w))


def sinh_over_z_series(t: float, terms: int) -> np.ndarray:
    """
    Return the coefficients of sinh(z*t)/z as a series in u = z**2.

    Args:
        t: The length multiplying z.
        terms: The number of coefficients to return.
    """
    return np.array([t ** (2 * j + 1) / math.factorial(2 * j + 1) for j in range(terms)])


def cosh_minus_one_series(t: float, terms: int) -> np.ndarray:
    """
    Return the coefficients of cosh(z*t) - 1 as a series in u = z**2. The constant term is zero.
    """
    return np.array([0.0] + [t ** (2 * j) / math.factorial(2 * j) for j in range(1, terms)])


def series_multiply(a: np.ndarray, b: np.ndarray, terms: int) -> np.ndarray:
    """
    Return the truncated product of two series.
    """
    return np.polynomial.polynomial.polymul(a, b)[:terms]


def series_divide(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    """
    Return the truncated quotient num/den of two batches of series.

    Args:
        num: Array of shape (..., m), numerator coefficients.
        den: Array of shape (..., m), denominator coefficients with a non-zero constant term.

    Returns:
        Array of shape (..., m) holding the first m coefficients of the quotient.
    """
    num, den = np.broadcast_arrays(np.asarray(num, dtype=complex), np.asarray(den, dtype=complex))
    quot = np.zeros_like(num)
    for j in range(num.shape[-1]):
        acc = num[..., j].copy()
        for i in range(1, j + 1):
            acc -= den[..., i] * quot[..., j - i]
        quot[..., j] = acc / den[..., 0]
    return quot


def series_evaluate(coeffs: np.ndarray, u: np.ndarray) -> np.ndarray:
    """
    Evaluate a batch of series at u using Horner's scheme.

    Args:
        coeffs: Array of shape (..., m).
        u: Array broadcastable to coeffs.shape[:-1].
    """
    result = np.zeros(np.broadcast(coeffs[..., 0], u).shape, dtype=complex)
    for j in range(coeffs.shape[-1] - 1, -1, -1):
        result = result * u + coeffs[..., j]
    return result


def thread_count() -> int:
    """
    Return the number of worker threads to use, honouring the WAVEDAMP_THREADS environment variable.
    """
    value = os.environ.get(THREADS_ENV)
    if value:
        try:
            count = int(value)
        except ValueError:
            LOG.warning("Ignoring non-integer %s=%r", THREADS_ENV, value)
        else:
            if count >= 1:
                return count
            LOG.warning("Ignoring non-positive %s=%r", THREADS_ENV, value)
    return os.cpu_count() or 1


def format_float(value: float) -> str:
    """
    Return the shortest string that round-trips to the same float, e.g. '8.333333333333334' or 'inf'.
    """
    return repr(float(value))
