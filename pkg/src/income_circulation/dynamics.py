"""The eps-support experiment and its perturbed, inhomogeneous variant.

A wealthy agent ``h0`` hands ``eps`` to a poor agent ``l0`` at time ``t0``.
Since the dynamics are linear, the supported trajectory differs from the
baseline by ``eps * F**k (e_l0 - e_h0)``. That difference is propagated
directly, next to the two trajectories, so that the deviation is not lost to
cancellation when ``eps`` is tiny against the wealth levels.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
import scipy.sparse as sp

from .core import ZERO_THRESHOLD, IncomeCirculationMatrix, Trajectory, WealthVector, evolve
from .errors import InsufficientDonorWealth, NotCohesive, PatternBroken
from .generosity import GenerosityProfile, auto_horizon, beta, bound_curve, generosity_profile
from .graph import Verdict, classify

log = logging.getLogger(__name__)

SMALLNESS_RATIO = 0.1
RECOVERY_THRESHOLD = 0.01
MAX_AUTO_HORIZON = 1_000_000
BOUND_ATOL = 1e-9
MONOTONE_ATOL = 1e-12


@dataclass(frozen=True)
class SupportEvent:
    t0: int
    h0: int
    l0: int
    epsilon: float

    def check(self, x: WealthVector, smallness_ratio: float = SMALLNESS_RATIO) -> None:
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.h0 == self.l0:
            raise ValueError("donor and recipient must differ")
        if self.epsilon > x.values[self.h0]:
            raise InsufficientDonorWealth(
                f"donor {self.h0} holds {x.values[self.h0]!r} < epsilon={self.epsilon!r}"
            )
        if self.epsilon > smallness_ratio * x.values[self.l0]:
            warnings.warn(
                f"epsilon={self.epsilon!r} is not small next to the recipient's wealth "
                f"{x.values[self.l0]!r}; the fixed-matrix assumption may not hold",
                stacklevel=3,
            )


@dataclass(frozen=True)
class PerturbationSpec:
    """Multiplicative Gaussian noise on the nonzero entries, then column renormalization."""

    sigma: float = 0.01
    seed: int = 0
    check_every: int = 16


@dataclass(eq=False)
class SupportExperimentResult:
    event: SupportEvent
    baseline: Trajectory
    supported: Trajectory
    difference: np.ndarray  # row k: x_eps(t0 + k) - x(t0 + k)
    deviation: np.ndarray
    bound: np.ndarray | None = None
    profile: GenerosityProfile | None = None
    beta: float | None = None
    recovery_threshold: float = RECOVERY_THRESHOLD
    notes: list = field(default_factory=list)

    @property
    def horizon(self) -> int:
        return len(self.deviation) - 1

    @property
    def recovery_k(self) -> int | None:
        hit = np.flatnonzero(self.deviation <= self.recovery_threshold * self.event.epsilon)
        return int(hit[0]) if hit.size else None

    def summary(self) -> dict:
        out = {
            "t0": self.event.t0,
            "h0": self.event.h0,
            "l0": self.event.l0,
            "epsilon": self.event.epsilon,
            "horizon": self.horizon,
            "recovery_threshold": self.recovery_threshold,
            "recovery_k": self.recovery_k,
            "final_deviation": float(self.deviation[-1]),
            "base_drift_per_step": max(
                self.baseline.base_drift_per_step(), self.supported.base_drift_per_step()
            ),
        }
        if self.profile is not None:
            out["k0"] = self.profile.k0
            out["g"] = self.profile.g
            out["beta"] = self.beta
            out["gamma0"] = float(self.bound[0]) if self.bound is not None else None
        if self.notes:
            out["notes"] = list(self.notes)
        return out


def apply_support(x: WealthVector, ev: SupportEvent) -> WealthVector:
    """Move ``eps`` from ``h0`` to ``l0``; nothing else changes."""
    if x.time_index != ev.t0:
        raise ValueError(f"wealth is at t={x.time_index}, event is at t0={ev.t0}")
    ev.check(x)
    v = x.values.copy()
    v[ev.h0] -= ev.epsilon
    v[ev.l0] += ev.epsilon
    return WealthVector(v, x.time_index)


def _advance_to(F: IncomeCirculationMatrix, x0: WealthVector, t0: int) -> WealthVector:
    if t0 < x0.time_index:
        raise ValueError(f"support time t0={t0} precedes the initial state t={x0.time_index}")
    return evolve([F] * (t0 - x0.time_index), x0).final


def _run_pair(schedule, x: WealthVector, xe: WealthVector, ev: SupportEvent, horizon: int, ids):
    n = x.n
    base = np.empty((horizon + 1, n))
    supp = np.empty((horizon + 1, n))
    diff = np.empty((horizon + 1, n))
    base[0], supp[0] = x.values, xe.values
    diff[0] = 0.0
    diff[0, ev.l0] += ev.epsilon
    diff[0, ev.h0] -= ev.epsilon
    for k, F in enumerate(schedule, start=1):
        m = F.csc
        base[k] = m @ base[k - 1]
        supp[k] = m @ supp[k - 1]
        diff[k] = m @ diff[k - 1]
    deviation = np.abs(diff).sum(axis=1)
    return (
        Trajectory(base, ev.t0, list(ids)),
        Trajectory(supp, ev.t0, list(ids)),
        diff,
        deviation,
    )


def _default_horizon(profile, beta_value, eps, threshold) -> int:
    h = auto_horizon(profile, beta_value, eps, threshold)
    if h > MAX_AUTO_HORIZON:
        raise ValueError(
            f"the bound predicts recovery only after {h} steps; pass an explicit horizon"
        )
    return h


def support_experiment(
    F: IncomeCirculationMatrix,
    x0: WealthVector,
    ev: SupportEvent,
    horizon: int | None = None,
    recovery_threshold: float = RECOVERY_THRESHOLD,
) -> SupportExperimentResult:
    """Baseline and supported runs under a constant ``F``.

    For a cohesive ``F`` the deviation is checked against the generosity
    bound at every step; ``horizon`` then defaults to the step at which the
    bound reaches ``recovery_threshold * eps``. Other societies need an
    explicit horizon and get no bound.
    """
    cls = classify(F)
    profile = b = None
    notes = []
    if cls.verdict is Verdict.COHESIVE:
        profile = generosity_profile(F, cls)
        b = beta(F, ev.h0, ev.l0, profile.k0)
        if horizon is None:
            horizon = _default_horizon(profile, b, ev.epsilon, recovery_threshold)
    else:
        notes.append(f"bound unavailable: society is {cls.verdict.value}")
        if horizon is None:
            raise NotCohesive("no automatic horizon for a non-cohesive society")
    if horizon < 0:
        raise ValueError("horizon must be >= 0")

    x = _advance_to(F, x0, ev.t0)
    xe = apply_support(x, ev)
    baseline, supported, diff, dev = _run_pair([F] * horizon, x, xe, ev, horizon, ["F"] * horizon)
    bound = None
    if profile is not None:
        bound = bound_curve(profile, b, ev.epsilon, np.arange(horizon + 1))
        worst = float(np.max(dev - bound))
        if worst > BOUND_ATOL:
            raise AssertionError(f"deviation exceeds the generosity bound by {worst!r}")
        if np.any(np.diff(dev) > MONOTONE_ATOL):
            raise AssertionError("deviation increased between steps")
    return SupportExperimentResult(
        ev, baseline, supported, diff, dev, bound, profile, b, recovery_threshold, notes
    )


def recovery_rate(result: SupportExperimentResult, group: Iterable[int]) -> np.ndarray:
    """Per-step aggregate gain of ``group``: ``sum_{i in group} (x_eps - x)_i``."""
    idx = np.asarray(sorted(set(int(i) for i in group)), dtype=int)
    if idx.size == 0:
        raise ValueError("group must be nonempty")
    return result.difference[:, idx].sum(axis=1)


def perturb(F: IncomeCirculationMatrix, sigma: float, rng: np.random.Generator) -> IncomeCirculationMatrix:
    """One noisy copy of ``F`` with the same nonzero pattern.

    Raises
    ------
    PatternBroken
        If noise drives a nonzero entry to the structural-zero floor.
    """
    m = F.csc
    data = m.data * (1.0 + sigma * rng.standard_normal(m.data.shape[0]))
    if np.any(data <= ZERO_THRESHOLD):
        raise PatternBroken(f"sigma={sigma!r} zeroed an entry of the circulation matrix")
    sums = np.add.reduceat(data, m.indptr[:-1])
    data /= np.repeat(sums, np.diff(m.indptr))
    out = sp.csc_matrix((data, m.indices.copy(), m.indptr.copy()), shape=m.shape)
    return IncomeCirculationMatrix(out, F.tolerance)


def perturbed_evolve(
    F: IncomeCirculationMatrix,
    x0: WealthVector,
    spec: PerturbationSpec,
    ev: SupportEvent | None = None,
    horizon: int | None = None,
    recovery_threshold: float = RECOVERY_THRESHOLD,
) -> SupportExperimentResult:
    """Support experiment with a fresh noisy ``F_t`` at every step.

    Both runs see the same matrix sequence. Without an event, a zero-size
    event at ``h0 = 0, l0 = 1`` is used so that only the baseline matters.
    The constant-``F`` bound is not reported since it does not apply here.
    """
    if ev is None:
        ev = SupportEvent(x0.time_index, 0, 1 if x0.n > 1 else 0, 0.0)
    if spec.sigma == 0:
        return support_experiment(F, x0, ev, horizon, recovery_threshold)

    cls = classify(F)
    if horizon is None:
        if cls.verdict is not Verdict.COHESIVE:
            raise NotCohesive("no automatic horizon for a non-cohesive society")
        profile = generosity_profile(F, cls)
        horizon = _default_horizon(profile, beta(F, ev.h0, ev.l0, profile.k0), ev.epsilon or 1.0,
                                   recovery_threshold)

    rng = np.random.default_rng(spec.seed)
    pre = [perturb(F, spec.sigma, rng) for _ in range(ev.t0 - x0.time_index)]
    x = evolve(pre, x0).final if pre else x0
    if x.time_index != ev.t0:
        raise ValueError(f"support time t0={ev.t0} precedes the initial state t={x0.time_index}")
    xe = apply_support(x, ev) if ev.epsilon > 0 else x

    notes = []
    schedule = []
    for k in range(horizon):
        Ft = perturb(F, spec.sigma, rng)
        if spec.check_every and k % spec.check_every == 0:
            v = classify(Ft, exponent_cap=None).verdict
            if v is not Verdict.COHESIVE and cls.verdict is Verdict.COHESIVE:
                notes.append(f"step {ev.t0 + k}: perturbed matrix is {v.value}")
        schedule.append(Ft)
    ids = [f"seed{spec.seed}:t{ev.t0 + k}" for k in range(horizon)]
    baseline, supported, diff, dev = _run_pair(schedule, x, xe, ev, horizon, ids)
    return SupportExperimentResult(
        ev, baseline, supported, diff, dev, None, None, None, recovery_threshold, notes
    )
