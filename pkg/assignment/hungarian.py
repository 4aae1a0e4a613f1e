"""
Optimal one-to-one assignment of M ground-truth rows into N >= M prediction columns.

The solver pads the matrix to N x N with a sentinel row value and runs the
potential-based Kuhn-Munkres algorithm. Among all optimal assignments it
returns the lexicographically smallest one: with optimal potentials, an
assignment is optimal exactly when it only uses tight edges, so rows are
fixed greedily to their smallest tight column that still admits a perfect
tight matching for the rows that follow.
"""

import itertools
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from utils.errors import ArgumentError

MAX_BRUTE_FORCE_COLUMNS = 8


@dataclass(frozen=True, eq=False)
class CostMatrix:
    """
    Matching costs, rows = ground truth, columns = predictions.

    The optional component matrices hold the classification, box and
    recognition terms that were summed into ``values``.
    """

    values: np.ndarray
    classification: Optional[np.ndarray] = None
    box: Optional[np.ndarray] = None
    recognition: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "values", _validated(self.values))

    @property
    def shape(self) -> Tuple[int, int]:
        rows, cols = self.values.shape
        return rows, cols


@dataclass(frozen=True)
class PairCost:
    row: int
    col: int
    cost: float
    classification: float = 0.0
    box: float = 0.0
    recognition: float = 0.0


@dataclass(frozen=True)
class MatchResult:
    """``assignment[i]`` is the prediction matched to ground-truth row i."""

    assignment: Tuple[int, ...]
    total_cost: float
    pairs: Tuple[PairCost, ...]

    def column_to_row(self) -> dict:
        return {col: row for row, col in enumerate(self.assignment)}


CostInput = Union[CostMatrix, np.ndarray, Sequence[Sequence[float]]]


def _validated(values) -> np.ndarray:
    matrix = np.asarray(values, dtype=np.float64)
    if matrix.ndim != 2:
        if matrix.size == 0:
            matrix = matrix.reshape(0, 0)
        else:
            raise ArgumentError(f"Cost matrix must be 2-D, got shape {matrix.shape}")
    rows, cols = matrix.shape
    if rows > cols:
        raise ArgumentError(f"Cost matrix has more rows ({rows}) than columns ({cols})")
    if not np.all(np.isfinite(matrix)):
        raise ArgumentError("Cost matrix entries must be finite")
    return matrix


def _as_cost_matrix(costs: CostInput) -> CostMatrix:
    if isinstance(costs, CostMatrix):
        return costs
    return CostMatrix(np.asarray(costs, dtype=np.float64))


def _tolerance(matrix: np.ndarray) -> float:
    scale = float(np.max(np.abs(matrix))) if matrix.size else 0.0
    return 1e-9 * max(1.0, scale)


def _build_result(costs: CostMatrix, assignment: Sequence[int]) -> MatchResult:
    pairs = []
    total = 0.0
    for row, col in enumerate(assignment):
        cost = float(costs.values[row, col])
        total += cost
        pairs.append(
            PairCost(
                row=row,
                col=int(col),
                cost=cost,
                classification=float(costs.classification[row, col]) if costs.classification is not None else 0.0,
                box=float(costs.box[row, col]) if costs.box is not None else 0.0,
                recognition=float(costs.recognition[row, col]) if costs.recognition is not None else 0.0,
            )
        )
    return MatchResult(assignment=tuple(int(c) for c in assignment), total_cost=total, pairs=tuple(pairs))


def _kuhn_munkres(cost: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Square Kuhn-Munkres with row potentials ``u`` and column potentials ``v``
    (1-based, index 0 is the virtual root). Returns (row_to_col, u, v).
    """
    n = cost.shape[0]
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    # owner[j] = row matched to column j (1-based, 0 = free)
    owner = np.zeros(n + 1, dtype=np.int64)
    way = np.zeros(n + 1, dtype=np.int64)

    for i in range(1, n + 1):
        owner[0] = i
        j0 = 0
        min_to = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = owner[j0]
            free = ~used[1:]
            reduced = cost[i0 - 1] - u[i0] - v[1:]
            better = free & (reduced < min_to[1:])
            min_to[1:][better] = reduced[better]
            way[1:][better] = j0
            candidates = np.where(free, min_to[1:], np.inf)
            j1 = int(np.argmin(candidates)) + 1
            delta = candidates[j1 - 1]
            u[owner[used]] += delta
            v[used] -= delta
            min_to[~used] -= delta
            j0 = j1
            if owner[j0] == 0:
                break
        # flip the augmenting path
        while j0 != 0:
            j1 = way[j0]
            owner[j0] = owner[j1]
            j0 = j1

    row_to_col = np.zeros(n, dtype=np.int64)
    for j in range(1, n + 1):
        row_to_col[owner[j] - 1] = j - 1
    return row_to_col, u[1:], v[1:]


def _augment(row: int, tight: np.ndarray, col_owner: List[int], seen: List[bool]) -> bool:
    for col in np.flatnonzero(tight[row]):
        if seen[col]:
            continue
        seen[col] = True
        if col_owner[col] < 0 or _augment(col_owner[col], tight, col_owner, seen):
            col_owner[col] = row
            return True
    return False


def _has_perfect_matching(tight: np.ndarray) -> bool:
    rows, cols = tight.shape
    col_owner = [-1] * cols
    for row in range(rows):
        if not _augment(row, tight, col_owner, [False] * cols):
            return False
    return True


def _lexicographic_optimum(tight: np.ndarray, rows: int, start: np.ndarray) -> List[int]:
    """Smallest assignment vector for the first ``rows`` rows among perfect tight matchings."""
    n = tight.shape[0]
    taken = np.zeros(n, dtype=bool)
    chosen: List[int] = []
    for row in range(rows):
        for col in np.flatnonzero(tight[row] & ~taken):
            if col == start[row] and all(chosen[r] == start[r] for r in range(row)):
                # the solver's own matching completes this prefix
                chosen.append(int(col))
                break
            rest = tight[row + 1 :][:, ~taken]
            rest = np.delete(rest, int(np.sum(~taken[:col])), axis=1)
            if _has_perfect_matching(rest):
                chosen.append(int(col))
                break
        taken[chosen[-1]] = True
    return chosen


def solve_assignment(costs: CostInput) -> MatchResult:
    """
    Globally minimal injective row -> column assignment.

    Args:
        costs: M x N cost matrix with M <= N and finite entries

    Returns:
        MatchResult: The lexicographically smallest optimal assignment

    Raises:
        ArgumentError: M > N or a non-finite entry
    """
    matrix = _as_cost_matrix(costs)
    rows, cols = matrix.shape
    if rows == 0:
        return MatchResult(assignment=(), total_cost=0.0, pairs=())

    values = matrix.values
    sentinel = float(np.max(values)) + 1.0
    padded = np.full((cols, cols), sentinel)
    padded[:rows] = values

    row_to_col, u, v = _kuhn_munkres(padded)
    reduced = padded - u[:, None] - v[None, :]
    tight = reduced <= _tolerance(values)
    assignment = _lexicographic_optimum(tight, rows, row_to_col)
    return _build_result(matrix, assignment)


def brute_force_assignment(costs: CostInput) -> MatchResult:
    """
    Exhaustive oracle: enumerates every injective map in lexicographic order
    and keeps the first one reaching the minimum.

    Raises:
        ArgumentError: M > N, a non-finite entry, or N > 8
    """
    matrix = _as_cost_matrix(costs)
    rows, cols = matrix.shape
    if cols > MAX_BRUTE_FORCE_COLUMNS:
        raise ArgumentError(f"Brute force refuses N={cols} > {MAX_BRUTE_FORCE_COLUMNS} columns")
    if rows == 0:
        return MatchResult(assignment=(), total_cost=0.0, pairs=())

    values = matrix.values
    tolerance = _tolerance(values)
    best: Optional[Tuple[int, ...]] = None
    best_cost = np.inf
    for candidate in itertools.permutations(range(cols), rows):
        cost = 0.0
        for row, col in enumerate(candidate):
            cost += values[row, col]
        if best is None or cost < best_cost - tolerance:
            best, best_cost = candidate, cost
    assert best is not None
    return _build_result(matrix, best)
