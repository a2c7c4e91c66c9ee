"""Income circulation matrices, wealth vectors and their evolution.

An income circulation matrix ``F`` is column-stochastic: ``F[i, j]`` is the
fraction of agent ``j``'s wealth paid to agent ``i`` over one time step, and
the diagonal ``F[j, j]`` is what agent ``j`` keeps (its savings fraction).
Wealth evolves as ``x(t+1) = F_t @ x(t)`` and the coordinate sum of ``x``
(the monetary base) never changes.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import (
    ColumnSumViolation,
    DimensionMismatch,
    InvalidWealth,
    NegativeEntry,
    NonFinite,
    OverSpending,
    SizeCapExceeded,
)

DEFAULT_TOLERANCE = 1e-9
# entries below this magnitude are structural zeros
ZERO_THRESHOLD = 1e-15
DENSE_CAP = 5000


@dataclass(frozen=True, eq=False)
class IncomeCirculationMatrix:
    """Validated, immutable column-stochastic matrix in CSC storage.

    Build instances with :func:`validate` (or the ``from_*`` helpers), not
    directly: the constructor trusts its input.
    """

    csc: sp.csc_matrix
    tolerance: float = DEFAULT_TOLERANCE

    @property
    def n(self) -> int:
        return self.csc.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.csc.shape

    @property
    def nnz(self) -> int:
        return self.csc.nnz

    def toarray(self) -> np.ndarray:
        return self.csc.toarray()

    def diagonal(self) -> np.ndarray:
        """Savings fractions ``s_j = F[j, j]``."""
        return self.csc.diagonal()

    def column_sums(self) -> np.ndarray:
        return np.asarray(self.csc.sum(axis=0)).ravel()

    def entries(self) -> list[tuple[int, int, float]]:
        """``(row, col, value)`` triples of the stored nonzeros, column-major."""
        coo = self.csc.tocoo()
        order = np.lexsort((coo.row, coo.col))
        return [(int(coo.row[k]), int(coo.col[k]), float(coo.data[k])) for k in order]

    def __matmul__(self, other):
        if isinstance(other, IncomeCirculationMatrix):
            return self.csc @ other.csc
        return self.csc @ other

    def __repr__(self) -> str:
        return f"IncomeCirculationMatrix(n={self.n}, nnz={self.nnz})"

    @classmethod
    def from_dense(cls, array, tolerance: float = DEFAULT_TOLERANCE) -> IncomeCirculationMatrix:
        return validate(np.asarray(array, dtype=float), tolerance)

    @classmethod
    def from_entries(
        cls,
        n: int,
        entries: Iterable[Sequence[float]],
        tolerance: float = DEFAULT_TOLERANCE,
    ) -> IncomeCirculationMatrix:
        entries = list(entries)
        if entries:
            rows, cols, vals = (np.asarray(a) for a in zip(*entries))
        else:
            rows = cols = np.zeros(0, dtype=int)
            vals = np.zeros(0)
        raw = sp.coo_matrix(
            (vals.astype(float), (rows.astype(int), cols.astype(int))), shape=(n, n)
        )
        return validate(raw, tolerance)

    @classmethod
    def identity(cls, n: int) -> IncomeCirculationMatrix:
        return cls(sp.identity(n, format="csc", dtype=float))


def _to_csc(candidate) -> sp.csc_matrix:
    if isinstance(candidate, IncomeCirculationMatrix):
        return candidate.csc.copy()
    if sp.issparse(candidate):
        # coo -> csc sums duplicate coordinates
        return sp.csc_matrix(candidate, dtype=float)
    return sp.csc_matrix(np.asarray(candidate, dtype=float))


def validate(candidate, tolerance: float = DEFAULT_TOLERANCE) -> IncomeCirculationMatrix:
    """Check and normalize a raw square matrix into an income circulation matrix.

    Entries with magnitude below ``ZERO_THRESHOLD`` are dropped, small
    negatives within ``tolerance`` are clipped to zero, and every column is
    rescaled to sum to exactly one provided it already sums to one within
    ``tolerance``.

    Parameters
    ----------
    candidate : array_like or scipy sparse matrix
        Square matrix of payment fractions.
    tolerance : float
        Allowed slack on entry signs and column sums.

    Returns
    -------
    IncomeCirculationMatrix

    Raises
    ------
    NonFinite, NegativeEntry, ColumnSumViolation, DimensionMismatch
    """
    if tolerance < 0:
        raise ValueError("tolerance must be nonnegative")
    m = _to_csc(candidate)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise DimensionMismatch(f"expected a nonempty square matrix, got shape {m.shape}")
    m.sum_duplicates()
    if not np.all(np.isfinite(m.data)):
        raise NonFinite("matrix contains NaN or infinite entries")
    bad = m.data < -tolerance
    if np.any(bad):
        coo = m.tocoo()
        k = int(np.flatnonzero(coo.data < -tolerance)[0])
        raise NegativeEntry(
            f"entry ({coo.row[k]}, {coo.col[k]}) = {coo.data[k]!r} is negative"
        )
    m.data[m.data < ZERO_THRESHOLD] = 0.0
    m.eliminate_zeros()

    sums = np.asarray(m.sum(axis=0)).ravel()
    off = np.abs(sums - 1.0) > tolerance
    if np.any(off):
        j = int(np.flatnonzero(off)[0])
        raise ColumnSumViolation(f"column {j} sums to {sums[j]!r}, expected 1")
    counts = np.diff(m.indptr)
    m.data /= np.repeat(sums, counts)
    m.data[m.data < ZERO_THRESHOLD] = 0.0
    m.eliminate_zeros()
    m.sort_indices()
    return IncomeCirculationMatrix(m, float(tolerance))


def savings_diagonal(off_diagonal, tolerance: float = DEFAULT_TOLERANCE) -> IncomeCirculationMatrix:
    """Complete a matrix of purchase fractions with each agent's savings.

    Sets ``F[j, j] = 1 - sum_{i != j} F[i, j]``. The input diagonal must be
    empty: agents do not sell to themselves.

    Raises
    ------
    OverSpending
        If some column's off-diagonal sum exceeds ``1 + tolerance``.
    """
    m = _to_csc(off_diagonal)
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    if np.any(m.diagonal() != 0):
        raise ValueError("off-diagonal input has nonzero diagonal entries")
    spent = np.asarray(m.sum(axis=0)).ravel()
    over = spent > 1.0 + tolerance
    if np.any(over):
        j = int(np.flatnonzero(over)[0])
        raise OverSpending(f"agent {j} spends a fraction {spent[j]!r} > 1 of its wealth")
    saved = np.clip(1.0 - spent, 0.0, None)
    return validate(m + sp.diags(saved, format="csc"), tolerance)


@dataclass(frozen=True, eq=False)
class WealthVector:
    """Nonnegative wealth per agent at a given time step."""

    values: np.ndarray
    time_index: int = 0

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1:
            raise InvalidWealth("wealth must be a 1-d vector")
        if not np.all(np.isfinite(v)):
            raise InvalidWealth("wealth contains NaN or infinite values")
        if np.any(v < 0):
            raise InvalidWealth("wealth must be nonnegative")
        if self.time_index < 0:
            raise InvalidWealth("time_index must be >= 0")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def monetary_base(self) -> float:
        return float(self.values.sum())

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"WealthVector(t={self.time_index}, values={self.values!r})"


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Consecutive wealth states; row ``k`` of ``states`` is time ``t0 + k``."""

    states: np.ndarray
    t0: int = 0
    matrix_ids: list = field(default_factory=list)

    def __len__(self) -> int:
        return self.states.shape[0]

    def state(self, k: int) -> WealthVector:
        return WealthVector(self.states[k], self.t0 + k)

    @property
    def final(self) -> WealthVector:
        return self.state(len(self) - 1)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(len(self))

    def monetary_base(self) -> np.ndarray:
        return self.states.sum(axis=1)

    def base_drift_per_step(self) -> float:
        """Largest relative change of the monetary base between consecutive states."""
        m = self.monetary_base()
        if len(m) < 2 or m[0] == 0:
            return 0.0
        return float(np.max(np.abs(np.diff(m))) / abs(m[0]))

    def base_drift(self) -> float:
        """Largest relative deviation of the monetary base from its initial value."""
        m = self.monetary_base()
        if m[0] == 0:
            return float(np.max(np.abs(m)))
        return float(np.max(np.abs(m - m[0])) / abs(m[0]))

    def to_csv(self, path) -> None:
        write_trajectory_csv(self, path)


def _check_dims(F: IncomeCirculationMatrix, n: int) -> None:
    if F.n != n:
        raise DimensionMismatch(f"matrix is {F.n}x{F.n} but wealth vector has length {n}")


def step(F: IncomeCirculationMatrix, x: WealthVector) -> WealthVector:
    """One time step ``x(t+1) = F x(t)``."""
    _check_dims(F, x.n)
    return WealthVector(F.csc @ x.values, x.time_index + 1)


def iterate(schedule: Iterable[IncomeCirculationMatrix], x0: np.ndarray) -> Iterator[np.ndarray]:
    """Yield ``F_k ... F_0 x0`` for each matrix in ``schedule`` (x0 itself excluded).

    Lazily consumes ``schedule``; used for long horizons where storing the
    whole trajectory is wasteful.
    """
    x = np.asarray(x0, dtype=float)
    for F in schedule:
        _check_dims(F, x.shape[0])
        x = F.csc @ x
        yield x


def evolve(
    schedule: Sequence[IncomeCirculationMatrix],
    x0: WealthVector,
    matrix_ids: Sequence | None = None,
) -> Trajectory:
    """Apply an inhomogeneous sequence of matrices to ``x0``.

    Uses repeated matrix-vector products only; the matrix product is never
    formed.
    """
    schedule = list(schedule)
    if matrix_ids is None:
        matrix_ids = list(range(len(schedule)))
    elif len(matrix_ids) != len(schedule):
        raise ValueError("matrix_ids must have one entry per matrix in the schedule")
    states = np.empty((len(schedule) + 1, x0.n))
    states[0] = x0.values
    for k, x in enumerate(iterate(schedule, x0.values), start=1):
        states[k] = x
    return Trajectory(states, x0.time_index, list(matrix_ids))


def matrix_power(F: IncomeCirculationMatrix, k: int, cap: int = DENSE_CAP) -> np.ndarray:
    """Dense ``F**k`` by repeated squaring.

    Raises
    ------
    SizeCapExceeded
        If ``F.n > cap``.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    if F.n > cap:
        raise SizeCapExceeded(f"n={F.n} exceeds the dense size cap {cap}")
    result = np.eye(F.n)
    base = F.toarray()
    while k:
        if k & 1:
            result = result @ base
        k >>= 1
        if k:
            base = base @ base
    return result


# file formats

def matrix_to_json(F: IncomeCirculationMatrix) -> dict:
    return {
        "n": F.n,
        "tolerance": F.tolerance,
        "entries": [[i, j, v] for i, j, v in F.entries()],
    }


def matrix_from_json(doc: dict) -> IncomeCirculationMatrix:
    return IncomeCirculationMatrix.from_entries(
        int(doc["n"]), doc.get("entries", []), float(doc.get("tolerance", DEFAULT_TOLERANCE))
    )


def load_matrix(path) -> IncomeCirculationMatrix:
    return matrix_from_json(json.loads(Path(path).read_text()))


def save_matrix(F: IncomeCirculationMatrix, path) -> None:
    Path(path).write_text(json.dumps(matrix_to_json(F), indent=2) + "\n")


def wealth_to_json(x: WealthVector) -> dict:
    return {"time": x.time_index, "values": [float(v) for v in x.values]}


def wealth_from_json(doc: dict) -> WealthVector:
    return WealthVector(np.asarray(doc["values"], dtype=float), int(doc.get("time", 0)))


def load_wealth(path) -> WealthVector:
    return wealth_from_json(json.loads(Path(path).read_text()))


def save_wealth(x: WealthVector, path) -> None:
    Path(path).write_text(json.dumps(wealth_to_json(x), indent=2) + "\n")


def write_trajectory_csv(traj: Trajectory, path) -> None:
    n = traj.states.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"agent_{i}" for i in range(n)])
        for t, row in zip(traj.times, traj.states):
            w.writerow([int(t)] + [f"{v:.12g}" for v in row])
