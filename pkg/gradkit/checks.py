from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from utils.errors import ArgumentError

DEFAULT_STEP = 1e-6
DEFAULT_ABS_FLOOR = 1e-8


@dataclass(frozen=True, eq=False)
class GradientCheckReport:
    """
    Comparison of an analytic gradient against central differences.

    ``max_relative_error`` is taken entrywise; entries where both values are
    below ``abs_floor`` in magnitude are compared absolutely.
    ``max_scaled_error`` divides the worst absolute error by the largest
    analytic entry instead.
    """

    numeric: np.ndarray
    analytic: np.ndarray
    max_relative_error: float
    max_scaled_error: float
    worst_index: int
    checked: int


def numeric_gradient(
    f: Callable[[np.ndarray], float],
    point: np.ndarray,
    step: float = DEFAULT_STEP,
    coordinates: Optional[Sequence[int]] = None,
) -> np.ndarray:
    """Central differences of ``f`` at ``point``; coordinates not listed are left at zero."""
    if step <= 0:
        raise ArgumentError(f"Finite-difference step must be positive, got {step}")
    x = np.array(point, dtype=np.float64)
    grad = np.zeros_like(x)
    indices = range(x.size) if coordinates is None else coordinates
    for i in indices:
        original = x.flat[i]
        hi, lo = original + step, original - step
        x.flat[i] = hi
        f_hi = float(f(x))
        x.flat[i] = lo
        f_lo = float(f(x))
        x.flat[i] = original
        grad.flat[i] = (f_hi - f_lo) / (hi - lo)
    return grad


def finite_difference_check(
    f: Callable[[np.ndarray], float],
    point: np.ndarray,
    analytic: np.ndarray,
    step: float = DEFAULT_STEP,
    abs_floor: float = DEFAULT_ABS_FLOOR,
    coordinates: Optional[Sequence[int]] = None,
) -> GradientCheckReport:
    """
    Check an analytic gradient of a scalar function against central differences.

    Args:
        f: Scalar function of a parameter array
        point: Where to differentiate
        analytic: Gradient claimed at ``point``, same shape
        step: Perturbation per coordinate
        abs_floor: Magnitude below which entries are compared absolutely
        coordinates: Flat indices to check; all when omitted

    Returns:
        GradientCheckReport: The worst coordinate and both error measures
    """
    x = np.asarray(point, dtype=np.float64)
    analytic = np.asarray(analytic, dtype=np.float64)
    if analytic.shape != x.shape:
        raise ArgumentError(f"Analytic gradient shape {analytic.shape} differs from point shape {x.shape}")

    numeric = numeric_gradient(f, x, step, coordinates)
    indices = np.arange(x.size) if coordinates is None else np.asarray(coordinates, dtype=np.int64)
    if indices.size == 0:
        return GradientCheckReport(numeric, analytic, 0.0, 0.0, -1, 0)

    a = analytic.ravel()[indices]
    n = numeric.ravel()[indices]
    diff = np.abs(a - n)
    magnitude = np.maximum(np.abs(a), np.abs(n))
    relative = np.where(magnitude < abs_floor, diff, diff / np.maximum(magnitude, abs_floor))
    worst = int(np.argmax(relative))
    scale = max(float(np.max(np.abs(a))), abs_floor)
    return GradientCheckReport(
        numeric=numeric,
        analytic=analytic,
        max_relative_error=float(relative[worst]),
        max_scaled_error=float(np.max(diff)) / scale,
        worst_index=int(indices[worst]),
        checked=int(indices.size),
    )
