import warnings

import numpy as np
import pytest

from income_circulation import WealthVector, validate
from income_circulation.dynamics import (
    PerturbationSpec,
    SupportEvent,
    apply_support,
    perturb,
    perturbed_evolve,
    recovery_rate,
    support_experiment,
)
from income_circulation.errors import InsufficientDonorWealth, NotCohesive, PatternBroken
from income_circulation.ingest import synthesize_economy

import oracles
from test_generosity import F4


def test_apply_support():
    x = apply_support(WealthVector([10.0, 1.0, 1.0]), SupportEvent(0, 0, 2, 0.05))
    np.testing.assert_array_equal(x.values, [9.95, 1.0, 1.05])


def test_apply_support_large_eps_warns():
    with pytest.warns(UserWarning, match="not small"):
        x = apply_support(WealthVector([10.0, 1.0, 1.0]), SupportEvent(0, 0, 2, 0.5))
    np.testing.assert_array_equal(x.values, [9.5, 1.0, 1.5])


def test_apply_zero_support():
    x = WealthVector([10.0, 1.0, 1.0])
    np.testing.assert_array_equal(apply_support(x, SupportEvent(0, 0, 2, 0.0)).values, x.values)


def test_insufficient_donor():
    with pytest.raises(InsufficientDonorWealth):
        apply_support(WealthVector([0.1, 5.0]), SupportEvent(0, 0, 1, 0.2))


def test_event_time_must_match():
    with pytest.raises(ValueError):
        apply_support(WealthVector([10.0, 1.0], 3), SupportEvent(0, 0, 1, 0.01))


def test_identity_keeps_deviation():
    F = validate(np.eye(3))
    res = support_experiment(F, WealthVector([10.0, 5.0, 5.0]), SupportEvent(0, 0, 2, 0.1), horizon=20)
    np.testing.assert_array_equal(res.deviation, 0.2)
    assert res.bound is None and res.notes


def test_periodic_keeps_deviation(fex):
    ev = SupportEvent(0, 0, 2, 0.1)
    with pytest.raises(NotCohesive):
        support_experiment(fex, WealthVector([10.0, 5.0, 5.0]), ev)
    res = support_experiment(fex, WealthVector([10.0, 5.0, 5.0]), ev, horizon=30)
    np.testing.assert_allclose(res.deviation, 0.2, rtol=0, atol=1e-15)
    assert res.recovery_k is None


def test_cohesive_matches_dense_oracle():
    F = validate(F4)
    res = support_experiment(F, WealthVector(np.full(4, 10.0)), SupportEvent(0, 0, 3, 1e-3), horizon=200)
    expected = oracles.dense_support_deviation(F4, 0, 3, 1e-3, 200)
    np.testing.assert_allclose(res.deviation, expected, rtol=0, atol=1e-13)
    assert np.all(res.deviation <= res.bound + 1e-12)
    assert res.deviation[0] == 2e-3
    assert res.profile.k0 == oracles.brute_exponent(F4) == 6
    assert res.beta == 2.0


def test_two_runs_agree_with_difference():
    F, x = synthesize_economy(15, "cohesive-random", 7)
    res = support_experiment(F, x, SupportEvent(0, 0, 14, 0.01))
    np.testing.assert_allclose(res.supported.states - res.baseline.states, res.difference, rtol=0, atol=1e-10)
    assert res.recovery_k is not None and res.recovery_k <= res.horizon


def test_support_after_delay():
    F = validate(F4)
    x0 = WealthVector(np.full(4, 10.0))
    res = support_experiment(F, x0, SupportEvent(5, 0, 3, 1e-3), horizon=10)
    np.testing.assert_allclose(res.baseline.states[0], np.linalg.matrix_power(F4, 5) @ x0.values)
    assert res.baseline.t0 == 5


def test_recovery_rate_groups():
    F = validate(F4)
    eps = 1e-3
    res = support_experiment(F, WealthVector(np.full(4, 10.0)), SupportEvent(0, 0, 3, eps), horizon=300)
    np.testing.assert_allclose(recovery_rate(res, range(4)), 0, atol=1e-15)
    assert recovery_rate(res, [3])[0] == eps
    h = recovery_rate(res, [0])
    assert h[0] == -eps
    assert abs(h[-1]) < 1e-12
    with pytest.raises(ValueError):
        recovery_rate(res, [])


def test_summary_fields():
    F = validate(F4)
    s = support_experiment(F, WealthVector(np.full(4, 10.0)), SupportEvent(0, 0, 3, 1e-3)).summary()
    assert {"k0", "g", "beta", "gamma0", "recovery_k", "horizon", "base_drift_per_step"} <= set(s)
    assert s["base_drift_per_step"] <= 1e-12


# perturbed dynamics

def test_perturb_keeps_pattern_and_columns(fex_saver):
    G = perturb(fex_saver, 0.05, np.random.default_rng(0))
    assert np.array_equal(G.toarray() != 0, fex_saver.toarray() != 0)
    np.testing.assert_allclose(G.column_sums(), 1, atol=1e-15)


def test_perturb_breaks_pattern():
    F = validate(np.full((4, 4), 0.25))
    with pytest.raises(PatternBroken):
        for seed in range(20):
            perturb(F, 100.0, np.random.default_rng(seed))


def test_zero_noise_is_constant_case():
    F = validate(F4)
    x = WealthVector(np.full(4, 10.0))
    ev = SupportEvent(0, 0, 3, 1e-3)
    a = perturbed_evolve(F, x, PerturbationSpec(0.0, 3), ev, horizon=50)
    b = support_experiment(F, x, ev, horizon=50)
    np.testing.assert_array_equal(a.deviation, b.deviation)


def test_perturbed_deterministic_replay():
    F = validate(F4)
    x = WealthVector(np.full(4, 10.0))
    ev = SupportEvent(0, 0, 3, 1e-3)
    a = perturbed_evolve(F, x, PerturbationSpec(0.01, 9), ev, horizon=40)
    b = perturbed_evolve(F, x, PerturbationSpec(0.01, 9), ev, horizon=40)
    np.testing.assert_array_equal(a.baseline.states, b.baseline.states)
    assert a.baseline.matrix_ids[0] == "seed9:t0"
    assert a.bound is None


def test_perturbed_recovery_over_seeds():
    F, x = synthesize_economy(20, "cohesive-random", 11)
    ev = SupportEvent(0, 0, 19, 1e-3)
    for seed in range(20):
        res = perturbed_evolve(F, x, PerturbationSpec(0.01, seed), ev, horizon=400)
        assert res.deviation[-1] < 0.01 * ev.epsilon
        assert res.baseline.base_drift_per_step() <= 1e-12


def test_perturbed_without_event():
    F = validate(F4)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        res = perturbed_evolve(F, WealthVector(np.full(4, 10.0)), PerturbationSpec(0.01, 0), horizon=30)
    assert np.all(res.deviation == 0)
    assert res.baseline.monetary_base()[-1] == pytest.approx(40.0, rel=1e-13)


def test_perturbed_small_economy_recovers():
    F = validate(F4)
    x = WealthVector(np.full(4, 10.0))
    ev = SupportEvent(0, 0, 3, 1e-3)
    for seed in range(20):
        res = perturbed_evolve(F, x, PerturbationSpec(0.01, seed), ev, horizon=300)
        assert res.deviation[-1] < 1e-8
