import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from income_circulation import IncomeCirculationMatrix, WealthVector, validate
from income_circulation.errors import EmptyWindow, OverSpending, UnknownProfile, ZeroWealthPayer
from income_circulation.graph import Verdict, classify
from income_circulation.ingest import (
    EstimationWindow,
    TransactionRecord,
    average_icm,
    estimate_icm,
    estimate_window,
    read_transactions,
    read_wealth_csv,
    synthesize_economy,
    synthetic_transactions,
    write_transactions,
)

from conftest import F_EX


def test_single_payment():
    F = estimate_icm([TransactionRecord(0, 0, 1, 2.0)], WealthVector([10.0, 5.0]), 0)
    np.testing.assert_allclose(F.toarray(), [[0.8, 0.0], [0.2, 1.0]])


def test_payments_accumulate():
    recs = [TransactionRecord(0, 0, 1, 2.0), TransactionRecord(0, 0, 1, 3.0), TransactionRecord(0, 1, 0, 5.0)]
    F = estimate_icm(recs, WealthVector([10.0, 5.0]), 0)
    np.testing.assert_allclose(F.toarray(), [[0.5, 1.0], [0.5, 0.0]])


def test_no_transactions_identity():
    F = estimate_icm([], WealthVector([1.0, 2.0, 3.0]), 0)
    np.testing.assert_array_equal(F.toarray(), np.eye(3))


def test_zero_wealth_payer():
    with pytest.raises(ZeroWealthPayer):
        estimate_icm([TransactionRecord(0, 0, 1, 1.0)], WealthVector([0.0, 5.0]), 0)


def test_overspending_payer():
    with pytest.raises(OverSpending):
        estimate_icm([TransactionRecord(0, 0, 1, 11.0)], WealthVector([10.0, 5.0]), 0)


def test_invalid_records():
    with pytest.raises(ValueError):
        TransactionRecord(0, 1, 1, 1.0)
    with pytest.raises(ValueError):
        TransactionRecord(0, 0, 1, -1.0)


def test_average_cycle_and_identity_is_cohesive():
    F = average_icm([validate(F_EX), IncomeCirculationMatrix.identity(3)])
    np.testing.assert_allclose(F.toarray(), (np.array(F_EX) + np.eye(3)) / 2)
    assert classify(F).verdict is Verdict.COHESIVE


def test_average_window():
    mats = {0: validate(F_EX), 1: IncomeCirculationMatrix.identity(3), 2: IncomeCirculationMatrix.identity(3)}
    F = average_icm(mats, EstimationWindow(1, 2))
    np.testing.assert_array_equal(F.toarray(), np.eye(3))
    with pytest.raises(EmptyWindow):
        average_icm(mats, EstimationWindow(5, 6))


def test_window_parse():
    assert EstimationWindow.parse("2:5").steps() == range(2, 6)
    assert EstimationWindow.parse("3") == EstimationWindow(3, 3)
    with pytest.raises(ValueError):
        EstimationWindow(4, 2)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 25))
def test_estimate_round_trip(seed, n):
    profile = ["cohesive-random", "two-class", "hoarder"][seed % 3]
    F, x = synthesize_economy(n, profile, seed)
    G = estimate_icm(synthetic_transactions(F, x), x, 0)
    np.testing.assert_allclose(G.toarray(), F.toarray(), rtol=0, atol=1e-12)


def test_transactions_csv(tmp_path):
    recs = [TransactionRecord(0, 0, 1, 0.1), TransactionRecord(1, 2, 0, 1 / 3)]
    write_transactions(recs, tmp_path / "t.csv")
    assert (tmp_path / "t.csv").read_text().splitlines()[0] == "t,payer,payee,amount"
    assert read_transactions(tmp_path / "t.csv") == recs


def test_transactions_bad_header(tmp_path):
    (tmp_path / "t.csv").write_text("time,from,to,amount\n0,0,1,1\n")
    with pytest.raises(ValueError):
        read_transactions(tmp_path / "t.csv")


def test_wealth_csv_forms(tmp_path):
    (tmp_path / "a.csv").write_text("agent,wealth\n1,2.5\n0,4\n")
    out = read_wealth_csv(tmp_path / "a.csv")
    np.testing.assert_array_equal(out[None], [4.0, 2.5])
    (tmp_path / "b.csv").write_text("agent,wealth_0,wealth_1\n0,4,3\n1,2,3\n")
    out = read_wealth_csv(tmp_path / "b.csv")
    np.testing.assert_array_equal(out[1], [3.0, 3.0])
    (tmp_path / "c.csv").write_text("agent,cash\n0,1\n")
    with pytest.raises(ValueError):
        read_wealth_csv(tmp_path / "c.csv")


def test_estimate_window_rules():
    recs = [TransactionRecord(0, 0, 1, 1.0), TransactionRecord(1, 1, 0, 1.0)]
    wealth = {None: np.array([2.0, 2.0])}
    one = estimate_window(recs, wealth, EstimationWindow(0, 0))
    np.testing.assert_allclose(one[0].toarray(), [[0.5, 0], [0.5, 1]])
    with pytest.raises(ValueError, match="wealth_0"):
        estimate_window(recs, wealth, EstimationWindow(0, 1))
    both = estimate_window(recs, {0: np.array([2.0, 2.0]), 1: np.array([1.0, 3.0])}, EstimationWindow(0, 1))
    np.testing.assert_allclose(both[1].toarray(), [[1, 1 / 3], [0, 2 / 3]])


# synthetic economies

def test_ring_profile():
    F, x = synthesize_economy(3, "ring")
    np.testing.assert_array_equal(F.toarray(), F_EX)
    np.testing.assert_array_equal(x.values, 1)
    assert classify(F).verdict is Verdict.WHOLE_PERIODIC


@pytest.mark.parametrize("n", [2, 5, 40])
def test_cohesive_profile(n):
    F, x = synthesize_economy(n, "cohesive-random", 1)
    assert classify(F).verdict is Verdict.COHESIVE
    assert x.n == n and np.all(x.values > 0)


def test_two_class_profile_is_fragmented():
    F, _ = synthesize_economy(10, "two-class", 0, m=3)
    a = F.toarray()
    assert classify(F).verdict is Verdict.FRAGMENTED
    assert np.any(a[7:, :7] > 0) and not np.any(a[:7, 7:] > 0)


def test_hoarder_profile():
    F, _ = synthesize_economy(6, "hoarder", 0)
    a = F.toarray()
    assert a[-1, -1] == 1.0 and not np.any(a[:-1, -1])


def test_synthesis_is_deterministic():
    a, x = synthesize_economy(12, "cohesive-random", 5)
    b, y = synthesize_economy(12, "cohesive-random", 5)
    np.testing.assert_array_equal(a.toarray(), b.toarray())
    np.testing.assert_array_equal(x.values, y.values)


def test_unknown_profile():
    with pytest.raises(UnknownProfile):
        synthesize_economy(5, "banana")
