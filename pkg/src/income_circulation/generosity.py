"""Generosity matrix and the l1 contraction bound for cohesive economies.

For a cohesive economy with exponent ``k0`` the generosity matrix
``G = F**k0`` is entrywise positive. Its row minima ``alpha_i`` sum to the
overall generosity ``g``, and ``G`` shrinks every zero-sum vector by at least
the factor ``1 - g`` in the l1 norm. Chaining that over blocks of ``k0`` steps
gives::

    ||x_eps(t0 + k) - x(t0 + k)||_1 <= gamma0 * ((1 - g)**C)**k
    gamma0 = eps * beta / (1 - g)**(1 - C),   C = 1 / k0
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DENSE_CAP, IncomeCirculationMatrix, matrix_power
from .errors import NotCohesive, NotPositive, NotZeroSum
from .graph import SocietyClassification, Verdict, classify

ZERO_SUM_RTOL = 1e-12
CONTRACTION_ATOL = 1e-12


@dataclass(frozen=True, eq=False)
class GenerosityProfile:
    k0: int
    G: np.ndarray
    alpha: np.ndarray
    g: float

    @property
    def cohesiveness(self) -> float:
        return 1.0 / self.k0

    @property
    def contraction_factor(self) -> float:
        return 1.0 - self.g

    @property
    def rate(self) -> float:
        """Per-step decay factor ``(1 - g)**C`` of the bound."""
        return self.contraction_factor ** self.cohesiveness

    def to_json(self) -> dict:
        return {
            "k0": self.k0,
            "cohesiveness": self.cohesiveness,
            "alpha": [float(a) for a in self.alpha],
            "g": self.g,
            "contraction_factor": self.contraction_factor,
        }


def _row_minima(G: np.ndarray) -> tuple[np.ndarray, float]:
    alpha = G.min(axis=1)
    # rounding can push the sum a hair above 1 for a near-uniform G
    g = min(float(alpha.sum()), 1.0)
    return alpha, g


def generosity_profile(
    F: IncomeCirculationMatrix,
    classification: SocietyClassification | None = None,
    cap: int = DENSE_CAP,
) -> GenerosityProfile:
    """``G = F**k0`` with its generosity coefficients.

    Raises
    ------
    NotCohesive
        If ``F`` is fragmented or periodic.
    SizeCapExceeded
        If ``n`` is above the dense cap.
    """
    if classification is None:
        classification = classify(F)
    if classification.verdict is not Verdict.COHESIVE:
        raise NotCohesive(f"society is {classification.verdict.value}, not Cohesive")
    k0 = classification.exponent_k0
    G = matrix_power(F, k0, cap=cap)
    if not np.all(G > 0):
        raise RuntimeError(
            f"F**{k0} has a nonpositive entry although k0 is the exponent of F"
        )
    alpha, g = _row_minima(G)
    return GenerosityProfile(k0, G, alpha, g)


def contraction_check(G: np.ndarray, u: np.ndarray) -> tuple[float, float, bool]:
    """Compare ``||G u||_1`` with ``(1 - g) ||u||_1`` for a zero-sum ``u``.

    Returns
    -------
    lhs, rhs : float
    holds : bool
        ``lhs <= rhs + 1e-12``.
    """
    G = np.asarray(G, dtype=float)
    u = np.asarray(u, dtype=float)
    if not np.all(G > 0):
        raise NotPositive("G must be entrywise positive")
    norm_u = float(np.abs(u).sum())
    if abs(u.sum()) > ZERO_SUM_RTOL * norm_u:
        raise NotZeroSum(f"coordinates of u sum to {u.sum()!r}")
    _, g = _row_minima(G)
    lhs = float(np.abs(G @ u).sum())
    rhs = (1.0 - g) * norm_u
    return lhs, rhs, lhs <= rhs + CONTRACTION_ATOL


def beta(F: IncomeCirculationMatrix, h0: int, l0: int, k0: int) -> float:
    """``max_{0 <= r < k0} ||F**r (e_l0 - e_h0)||_1`` by sparse mat-vec products."""
    u = np.zeros(F.n)
    u[l0] += 1.0
    u[h0] -= 1.0
    best = float(np.abs(u).sum())
    for _ in range(k0 - 1):
        u = F.csc @ u
        best = max(best, float(np.abs(u).sum()))
    return best


def gamma0(profile: GenerosityProfile, beta_value: float, epsilon: float) -> float:
    """Prefactor ``eps * beta / (1 - g)**(1 - C)`` (infinite when ``g == 1`` and ``k0 > 1``)."""
    c = profile.cohesiveness
    if profile.g >= 1.0:
        return epsilon * beta_value if c == 1.0 else math.inf
    return epsilon * beta_value * math.exp(-(1.0 - c) * math.log1p(-profile.g))


def bound_curve(
    profile: GenerosityProfile, beta_value: float, epsilon: float, ks
) -> np.ndarray:
    """``gamma0 * ((1 - g)**C)**k`` for every ``k`` in ``ks``, evaluated in log space.

    When ``g == 1`` the block bound ``eps * beta * (1 - g)**floor(k / k0)`` is
    used instead, which collapses to zero after the first ``k0`` steps.
    """
    ks = np.asarray(ks, dtype=float)
    if np.any(ks < 0):
        raise ValueError("k must be >= 0")
    if epsilon * beta_value == 0:
        return np.zeros_like(ks)
    if profile.g >= 1.0:
        return np.where(ks < profile.k0, epsilon * beta_value, 0.0)
    log_rate = profile.cohesiveness * math.log1p(-profile.g)
    log_g0 = math.log(epsilon * beta_value) - (1.0 - profile.cohesiveness) * math.log1p(-profile.g)
    return np.exp(log_g0 + ks * log_rate)


def convergence_bound(
    profile: GenerosityProfile,
    F: IncomeCirculationMatrix,
    h0: int,
    l0: int,
    epsilon: float,
    k: int,
) -> float:
    """Upper bound on ``||x_eps(t0 + k) - x(t0 + k)||_1`` after an eps-support."""
    if profile is None:
        raise NotCohesive("no generosity profile")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    b = beta(F, h0, l0, profile.k0)
    return float(bound_curve(profile, b, epsilon, [k])[0])


def auto_horizon(
    profile: GenerosityProfile,
    beta_value: float,
    epsilon: float,
    threshold: float = 0.01,
) -> int:
    """Smallest ``k`` at which the bound drops to ``threshold * epsilon``."""
    if profile.g >= 1.0:
        return profile.k0
    g0 = gamma0(profile, beta_value, epsilon)
    target = threshold * epsilon
    if g0 <= target:
        return 0
    k = profile.k0 * math.log(target / g0) / math.log1p(-profile.g)
    k = math.ceil(k)
    # guard against the ceiling landing a rounding error short
    while bound_curve(profile, beta_value, epsilon, [k])[0] > target:
        k += 1
    return k
