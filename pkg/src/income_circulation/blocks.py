"""Block decompositions: cash hoarders and wealthy/marginalized splits.

A *pure cash hoarder* is an agent that earns income from others but buys
nothing (``F = [[F11, 0], [c^T, 1]]`` with ``c != 0``). When the rest of the
economy is whole, the hoarder eventually absorbs all of the money::

    F**k  = [[F11**k, 0], [c^T sum_{i<k} F11**i, 1]]
    F**oo = [[0, 0], [c^T (I - F11)^{-1}, 1]]

The two-group split ``F = [[F11, F12], [F21, F22]]`` (wealthy first,
marginalized last) describes fragmented societies where one cross block is
empty and the other group drains all wealth.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from itertools import repeat
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .core import (
    DENSE_CAP,
    ZERO_THRESHOLD,
    IncomeCirculationMatrix,
    WealthVector,
    iterate,
)
from .errors import (
    DimensionMismatch,
    NotPureHoarder,
    SingularSystem,
    SizeCapExceeded,
    SubEconomyNotWhole,
)
from .graph import is_strongly_connected

# condition number above which (I - F11) is treated as singular
MAX_CONDITION = 1e12


def permute(F: IncomeCirculationMatrix, perm: Sequence[int]) -> IncomeCirculationMatrix:
    """Symmetric relabeling: new agent ``k`` is old agent ``perm[k]``."""
    perm = np.asarray(perm)
    m = F.csc[perm][:, perm].tocsc()
    m.sort_indices()
    return IncomeCirculationMatrix(m, F.tolerance)


def order_by_wealth(
    F: IncomeCirculationMatrix, x: WealthVector
) -> tuple[IncomeCirculationMatrix, np.ndarray]:
    """Relabel agents by decreasing wealth, ties kept in index order.

    Returns the permuted matrix and ``perm`` with ``perm[new] = old``.
    """
    if F.n != x.n:
        raise DimensionMismatch(f"matrix is {F.n}x{F.n} but wealth has length {x.n}")
    perm = np.argsort(-x.values, kind="stable")
    return permute(F, perm), perm


# cash hoarder

@dataclass(frozen=True, eq=False)
class HoarderDecomposition:
    F11: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: float
    tolerance: float = 1e-9

    @property
    def n(self) -> int:
        return self.F11.shape[0] + 1

    @property
    def pure_cash_hoarder(self) -> bool:
        return (
            not np.any(self.b > ZERO_THRESHOLD)
            and bool(np.any(self.c > ZERO_THRESHOLD))
            and abs(self.d - 1.0) <= self.tolerance
        )

    def assemble(self) -> np.ndarray:
        return np.block([[self.F11, self.b[:, None]], [self.c[None, :], np.array([[self.d]])]])

    def to_json(self) -> dict:
        return {
            "F11": self.F11.tolist(),
            "b": self.b.tolist(),
            "c": self.c.tolist(),
            "d": self.d,
            "pure_cash_hoarder": self.pure_cash_hoarder,
        }


def hoarder_decompose(F: IncomeCirculationMatrix, cap: int = DENSE_CAP) -> HoarderDecomposition:
    """Split off the last agent as a candidate hoarder."""
    if F.n < 2:
        raise ValueError("need at least two agents")
    if F.n > cap:
        raise SizeCapExceeded(f"n={F.n} exceeds the dense size cap {cap}")
    a = F.toarray()
    return HoarderDecomposition(
        F11=a[:-1, :-1].copy(),
        b=a[:-1, -1].copy(),
        c=a[-1, :-1].copy(),
        d=float(a[-1, -1]),
        tolerance=F.tolerance,
    )


def _check_hoarder_shape(dec: HoarderDecomposition) -> None:
    if np.any(dec.b > ZERO_THRESHOLD) or abs(dec.d - 1.0) > dec.tolerance:
        raise NotPureHoarder("the last agent buys from others (b != 0 or d != 1)")
    sub = IncomeCirculationMatrix(sp.csc_matrix(dec.F11 != 0, dtype=float))
    if not is_strongly_connected(sub):
        raise SubEconomyNotWhole("the economy without the hoarder is not strongly connected")


def hoarder_power_closed_form(dec: HoarderDecomposition, k: int) -> np.ndarray:
    """``F**k`` assembled from ``F11**k`` and ``c^T sum_{i<k} F11**i``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not dec.pure_cash_hoarder:
        raise NotPureHoarder("the last agent is not a pure cash hoarder")
    _check_hoarder_shape(dec)
    m = dec.F11.shape[0]
    power = np.eye(m)
    partial = np.zeros((m, m))
    for _ in range(k):
        partial += power
        power = power @ dec.F11
    out = np.zeros((m + 1, m + 1))
    out[:m, :m] = power
    out[m, :m] = dec.c @ partial
    out[m, m] = 1.0
    return out


def hoarder_limit(dec: HoarderDecomposition) -> np.ndarray:
    """``lim F**k``: all money ends with the hoarder.

    Solves ``(I - F11)^T y = c`` instead of inverting. A singular or
    ill-conditioned system (for instance ``c = 0``, where ``F11`` is itself
    stochastic) raises :class:`SingularSystem`.
    """
    _check_hoarder_shape(dec)
    m = dec.F11.shape[0]
    system = (np.eye(m) - dec.F11).T
    # leaked mass after m steps is strictly positive iff the spectral radius is < 1
    leak = 1.0 - np.linalg.matrix_power(dec.F11, m).sum(axis=0).max()
    if leak <= 1e-13 or np.linalg.cond(system) > MAX_CONDITION:
        raise SingularSystem("I - F11 is singular: the hoarder receives no income")
    try:
        y = sla.solve(system, dec.c)
    except sla.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    out = np.zeros((m + 1, m + 1))
    out[m, :m] = y
    out[m, m] = 1.0
    return out


# class partition

@dataclass(frozen=True, eq=False)
class ClassPartition:
    """Wealthy ``H``, middle ``M`` and marginalized ``L`` groups.

    ``order`` lists the original agent ids as ``H + M + L``; ``F`` and
    ``wealth`` are already relabeled in that order. The two-way blocks split
    after the first ``len(H) + len(M)`` agents.
    """

    H: tuple[int, ...]
    M: tuple[int, ...]
    L: tuple[int, ...]
    order: np.ndarray
    F: IncomeCirculationMatrix
    wealth: WealthVector

    @property
    def split(self) -> int:
        return len(self.H) + len(self.M)

    def blocks(self) -> dict[str, sp.csc_matrix]:
        s = self.split
        m = self.F.csc
        return {
            "F11": m[:s, :s].tocsc(),
            "F12": m[:s, s:].tocsc(),
            "F21": m[s:, :s].tocsc(),
            "F22": m[s:, s:].tocsc(),
        }


def make_partition(
    F: IncomeCirculationMatrix,
    x: WealthVector,
    h_frac: float = 0.1,
    l_frac: float = 0.1,
    H: Sequence[int] | None = None,
    L: Sequence[int] | None = None,
) -> ClassPartition:
    """Pick the top/bottom groups by wealth fraction, or take explicit id lists."""
    n = F.n
    if (H is None) != (L is None):
        raise ValueError("give both H and L explicitly, or neither")
    if H is None:
        _, by_wealth = order_by_wealth(F, x)
        h = math.ceil(h_frac * n)
        l = math.ceil(l_frac * n)
        if h + l > n:
            raise ValueError(f"H ({h}) and L ({l}) overlap for n={n}")
        H = [int(i) for i in by_wealth[:h]]
        L = [int(i) for i in by_wealth[n - l:]]
        M = [int(i) for i in by_wealth[h:n - l]]
    else:
        H, L = [int(i) for i in H], [int(i) for i in L]
        if set(H) & set(L):
            raise ValueError("H and L must be disjoint")
        if not set(H) | set(L) <= set(range(n)):
            raise ValueError("agent id out of range")
        taken = set(H) | set(L)
        M = [i for i in range(n) if i not in taken]
    order = np.array(H + M + L, dtype=int)
    return ClassPartition(
        tuple(H), tuple(M), tuple(L), order,
        permute(F, order), WealthVector(x.values[order], x.time_index),
    )


def load_partition_config(path) -> dict:
    """``{"h_frac": .., "l_frac": ..}`` or ``{"H": [...], "L": [...]}``."""
    doc = json.loads(Path(path).read_text())
    allowed = {"h_frac", "l_frac", "H", "L"}
    unknown = set(doc) - allowed
    if unknown:
        raise ValueError(f"unknown partition keys: {sorted(unknown)}")
    return doc


class Regime(str, Enum):
    POOR_ABSORB = "PoorAbsorb"
    WEALTHY_ABSORB = "WealthyAbsorb"
    DISCONNECTED = "Disconnected"
    COUPLED = "Coupled"


@dataclass(frozen=True)
class FragmentedDiagnosis:
    regime: Regime
    top_share: float
    bottom_share: float
    steps: int
    f12_mass: float
    f21_mass: float
    base_drift_per_step: float

    def to_json(self) -> dict:
        return {
            "regime": self.regime.value,
            "top_share": self.top_share,
            "bottom_share": self.bottom_share,
            "steps": self.steps,
            "f12_mass": self.f12_mass,
            "f21_mass": self.f21_mass,
            "base_drift_per_step": self.base_drift_per_step,
        }


def fragmented_asymptotics(
    partition: ClassPartition,
    horizon: int = 10_000,
    stop_share: float | None = None,
) -> FragmentedDiagnosis:
    """Which group ends up with the money.

    Simulates ``horizon`` steps from the partition's wealth vector and reports
    each group's share of the monetary base. With ``stop_share`` the run ends
    as soon as the absorbing group (for the one-sided regimes) holds at least
    that share.
    """
    blocks = partition.blocks()
    f12 = blocks["F12"]
    f21 = blocks["F21"]
    has12 = bool(np.any(f12.data > ZERO_THRESHOLD))
    has21 = bool(np.any(f21.data > ZERO_THRESHOLD))
    if has21 and not has12:
        regime = Regime.POOR_ABSORB
    elif has12 and not has21:
        regime = Regime.WEALTHY_ABSORB
    elif not has12 and not has21:
        regime = Regime.DISCONNECTED
    else:
        regime = Regime.COUPLED

    s = partition.split
    x = partition.wealth.values
    base = x.sum()
    top, bottom = x[:s].sum() / base, x[s:].sum() / base
    steps, drift, prev = 0, 0.0, base
    if horizon > 0:
        for x in iterate(repeat(partition.F, horizon), x):
            steps += 1
            total = x.sum()
            drift = max(drift, abs(total - prev) / base)
            prev = total
            if stop_share is not None:
                share = (x[s:].sum() if regime is Regime.POOR_ABSORB else x[:s].sum()) / total
                if regime in (Regime.POOR_ABSORB, Regime.WEALTHY_ABSORB) and share >= stop_share:
                    break
        top, bottom = x[:s].sum() / x.sum(), x[s:].sum() / x.sum()
    return FragmentedDiagnosis(
        regime,
        float(top),
        float(bottom),
        steps,
        float(abs(f12).sum()),
        float(abs(f21).sum()),
        float(drift),
    )
