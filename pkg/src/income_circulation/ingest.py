"""Estimating income circulation matrices from payments, and synthetic economies."""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .core import (
    DEFAULT_TOLERANCE,
    IncomeCirculationMatrix,
    WealthVector,
    savings_diagonal,
    validate,
)
from .errors import (
    DimensionMismatch,
    EmptyWindow,
    OverSpending,
    UnknownProfile,
    ZeroWealthPayer,
)
from .graph import Verdict, classify


@dataclass(frozen=True)
class TransactionRecord:
    time: int
    payer: int
    payee: int
    amount: float

    def __post_init__(self):
        if self.payer == self.payee:
            raise ValueError(f"agent {self.payer} cannot pay itself")
        if not (math.isfinite(self.amount) and self.amount > 0):
            raise ValueError(f"amount must be finite and positive, got {self.amount!r}")


@dataclass(frozen=True)
class EstimationWindow:
    t_start: int
    t_end: int

    def __post_init__(self):
        if self.t_start > self.t_end:
            raise ValueError("t_start must not exceed t_end")

    @classmethod
    def parse(cls, text: str) -> EstimationWindow:
        a, _, b = text.partition(":")
        return cls(int(a), int(b if b else a))

    def steps(self) -> range:
        return range(self.t_start, self.t_end + 1)


def estimate_icm(
    transactions: Iterable[TransactionRecord],
    wealth: WealthVector,
    step: int,
    tolerance: float = DEFAULT_TOLERANCE,
) -> IncomeCirculationMatrix:
    """Fractions ``F[payee, payer] = amount / x_payer`` for one step.

    Wealth is the payer's holding at the start of the step. A step without
    payments gives the identity.

    Raises
    ------
    ZeroWealthPayer
        A payer starts the step with nothing.
    OverSpending
        A payer's outflow exceeds its wealth.
    """
    n = wealth.n
    x = wealth.values
    paid = defaultdict(float)
    for rec in transactions:
        if rec.time != step:
            raise ValueError(f"record at t={rec.time} passed for step {step}")
        if not (0 <= rec.payer < n and 0 <= rec.payee < n):
            raise DimensionMismatch(f"agent id out of range in {rec}")
        if x[rec.payer] <= 0:
            raise ZeroWealthPayer(f"agent {rec.payer} pays with zero wealth at t={step}")
        paid[rec.payee, rec.payer] += rec.amount
    if not paid:
        return IncomeCirculationMatrix.identity(n)
    keys = list(paid)
    rows = np.array([k[0] for k in keys])
    cols = np.array([k[1] for k in keys])
    vals = np.array([paid[k] for k in keys]) / x[cols]
    outflow = np.bincount(cols, weights=vals, minlength=n)
    over = outflow > 1.0 + tolerance
    if np.any(over):
        j = int(np.flatnonzero(over)[0])
        raise OverSpending(f"agent {j} pays {outflow[j] * x[j]!r} but holds {x[j]!r} at t={step}")
    return savings_diagonal(sp.coo_matrix((vals, (rows, cols)), shape=(n, n)), tolerance)


def average_icm(
    matrices: Sequence[IncomeCirculationMatrix] | dict,
    window: EstimationWindow | None = None,
) -> IncomeCirculationMatrix:
    """Entrywise mean of the matrices whose step index falls inside ``window``.

    ``matrices`` is indexed by step: a list (step = position) or a dict.
    """
    if not isinstance(matrices, dict):
        matrices = dict(enumerate(matrices))
    steps = sorted(matrices) if window is None else [t for t in window.steps() if t in matrices]
    if not steps:
        raise EmptyWindow("no matrices inside the averaging window")
    n = matrices[steps[0]].n
    total = sp.csc_matrix((n, n))
    for t in steps:
        if matrices[t].n != n:
            raise DimensionMismatch("all matrices must have the same size")
        total = total + matrices[t].csc
    return validate(total / len(steps), matrices[steps[0]].tolerance)


def synthetic_transactions(F: IncomeCirculationMatrix, x: WealthVector, step: int = 0) -> list[TransactionRecord]:
    """The payments one step of ``F`` implies for wealth ``x``."""
    out = []
    for i, j, f in F.entries():
        if i != j and x.values[j] > 0:
            out.append(TransactionRecord(step, j, i, f * x.values[j]))
    return out


# csv formats

def read_transactions(path) -> list[TransactionRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or set(reader.fieldnames) != {"t", "payer", "payee", "amount"}:
            raise ValueError(f"{path}: expected header t,payer,payee,amount")
        return [
            TransactionRecord(int(r["t"]), int(r["payer"]), int(r["payee"]), float(r["amount"]))
            for r in reader
        ]


def write_transactions(records: Iterable[TransactionRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "payer", "payee", "amount"])
        for r in records:
            w.writerow([r.time, r.payer, r.payee, repr(r.amount)])


def read_wealth_csv(path) -> dict:
    """Per-step wealth from ``agent,wealth`` or ``agent,wealth_<t>,...`` columns.

    Returns ``{step: values}``; a bare ``wealth`` column is keyed ``None`` and
    stands for whichever single step is estimated.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        if not fields or fields[0] != "agent" or len(fields) < 2:
            raise ValueError(f"{path}: expected header agent,wealth")
        rows = sorted(reader, key=lambda r: int(r["agent"]))
    if [int(r["agent"]) for r in rows] != list(range(len(rows))):
        raise ValueError(f"{path}: agent ids must be 0..n-1")
    out = {}
    for col in fields[1:]:
        if col == "wealth":
            key = None
        elif col.startswith("wealth_"):
            key = int(col[len("wealth_"):])
        else:
            raise ValueError(f"{path}: unexpected column {col!r}")
        out[key] = np.array([float(r[col]) for r in rows])
    return out


def estimate_window(
    transactions: Sequence[TransactionRecord],
    wealth: dict,
    window: EstimationWindow,
    tolerance: float = DEFAULT_TOLERANCE,
) -> dict:
    """One estimated matrix per step of ``window``.

    Fractions need each step's starting wealth; a single bare ``wealth``
    column is accepted only for one-step windows.
    """
    by_step = defaultdict(list)
    for r in transactions:
        by_step[r.time].append(r)
    out = {}
    for t in window.steps():
        if t in wealth:
            x = wealth[t]
        elif None in wealth and len(window.steps()) == 1:
            x = wealth[None]
        else:
            raise ValueError(f"no observed wealth column for step {t} (expected wealth_{t})")
        out[t] = estimate_icm(by_step.get(t, []), WealthVector(x, t), t, tolerance)
    return out


# synthetic economies

PROFILES = ("cohesive-random", "ring", "two-class", "hoarder")


def _strong_pattern(rng, n: int, density: float) -> np.ndarray:
    """Random off-diagonal pattern containing a Hamiltonian cycle."""
    pat = rng.random((n, n)) < density
    if n > 1:
        cyc = rng.permutation(n)
        pat[cyc, np.roll(cyc, -1)] = True
    np.fill_diagonal(pat, False)
    return pat


def _weights(rng, pat: np.ndarray) -> np.ndarray:
    w = np.where(pat, rng.uniform(0.2, 1.0, pat.shape), 0.0)
    s = w.sum(axis=0)
    s[s == 0] = 1.0
    return w / s


def _cohesive_block(rng, n: int, density: float, savers: int | None, save_range) -> np.ndarray:
    pat = _strong_pattern(rng, n, density)
    off = _weights(rng, pat)
    if savers is None:
        savers = int(rng.integers(1, n + 1))
    save = np.zeros(n)
    who = rng.choice(n, size=max(1, min(savers, n)), replace=False)
    save[who] = rng.uniform(*save_range, size=who.size)
    if n == 1:
        save[:] = 1.0
    return off * (1.0 - save) + np.diag(save)


def _wealth(rng, n: int) -> np.ndarray:
    return np.sort(rng.pareto(1.5, n) + 1.0)[::-1] * 100.0


def synthesize_economy(
    n: int,
    profile: str = "cohesive-random",
    seed: int = 0,
    *,
    density: float | None = None,
    savers: int | None = None,
    m: int | None = None,
    f12: bool = False,
    f21: bool = True,
    cross_fraction: float = 0.05,
    cross_density: float = 0.3,
) -> tuple[IncomeCirculationMatrix, WealthVector]:
    """Deterministic demo and test economies.

    Profiles
    --------
    ``cohesive-random``
        Random strongly connected pattern with at least one saver.
    ``ring``
        Agent ``i`` buys everything from agent ``i - 1``: a periodic society.
    ``two-class``
        Two cohesive blocks, top ``n - m`` agents and bottom ``m``; ``f21``
        lets the top pay the bottom, ``f12`` lets the bottom pay the top.
    ``hoarder``
        Whole sub-economy of ``n - 1`` agents plus a last agent that only
        receives.
    """
    if n < 2:
        raise ValueError("need at least two agents")
    if profile not in PROFILES:
        raise UnknownProfile(f"unknown profile {profile!r}; choose from {PROFILES}")
    rng = np.random.default_rng(seed)
    x = WealthVector(_wealth(rng, n))

    if profile == "ring":
        a = np.zeros((n, n))
        a[np.arange(n), (np.arange(n) + 1) % n] = 1.0
        return validate(a), WealthVector(np.ones(n))

    if profile == "cohesive-random":
        dens = 0.3 if density is None else density
        for _ in range(100):
            F = validate(_cohesive_block(rng, n, dens, savers, (0.05, 0.5)))
            if classify(F).verdict is Verdict.COHESIVE:
                return F, x
        raise RuntimeError("failed to draw a cohesive economy in 100 attempts")

    if profile == "two-class":
        m = max(1, math.ceil(0.3 * n)) if m is None else m
        top = n - m
        if not 1 <= top < n:
            raise ValueError("two-class needs 1 <= m < n")
        dens = 0.4 if density is None else density
        a = np.zeros((n, n))
        a[:top, :top] = _cohesive_block(rng, top, dens, savers, (0.05, 0.5))
        a[top:, top:] = _cohesive_block(rng, m, dens, savers, (0.05, 0.5))
        if f21:  # top agents (columns) pay bottom agents (rows)
            _add_cross(rng, a, rows=slice(top, n), cols=slice(0, top), frac=cross_fraction,
                       density=cross_density)
        if f12:
            _add_cross(rng, a, rows=slice(0, top), cols=slice(top, n), frac=cross_fraction,
                       density=cross_density)
        return validate(a), x

    # hoarder
    dens = 0.3 if density is None else density
    sub = _cohesive_block(rng, n - 1, dens, savers, (0.05, 0.5))
    payers = rng.random(n - 1) < cross_density
    payers[rng.integers(n - 1)] = True
    c = np.where(payers, rng.uniform(0.05, 0.3, n - 1), 0.0)
    a = np.zeros((n, n))
    a[:-1, :-1] = sub * (1.0 - c)
    a[-1, :-1] = c
    a[-1, -1] = 1.0
    xv = x.values.copy()
    xv[-1] = xv.min() / 10.0
    return validate(a), WealthVector(xv)


def _add_cross(rng, a, rows: slice, cols: slice, frac: float, density: float) -> None:
    """Divert ``frac`` of some paying columns into the cross block."""
    block = a[rows, cols]
    r, c = block.shape
    pat = rng.random((r, c)) < density
    pat[rng.integers(r), rng.integers(c)] = True
    w = _weights(rng, pat)
    paying = np.arange(a.shape[1])[cols][pat.any(axis=0)]
    a[:, paying] *= 1.0 - frac
    a[rows, paying] += frac * w[:, pat.any(axis=0)]
