# tests/test_storage_dispatch.py
import numpy as np
import pytest
from scipy.optimize import linprog

from adequacy_types import Store
from errors import ConfigurationError
from storage_dispatch import (
    compare_policies,
    dispatch_min_eeu,
    dispatch_min_lole,
    dispatch_min_peak,
    episodes,
    greedy_discharge,
)


def _lp_min_unserved(stores, depths, period_length=1.0):
    """Smallest unserved energy any schedule can reach (continuous LP)."""
    S, P = len(stores), len(depths)
    if S == 0:
        return float(np.clip(depths, 0, None).sum() * period_length)
    # variables d[s, t], maximise total discharge
    c = -np.ones(S * P) * period_length
    A, b = [], []
    for s, store in enumerate(stores):
        row = np.zeros(S * P)
        row[s * P:(s + 1) * P] = period_length
        A.append(row)
        b.append(store.energy)
    for t in range(P):
        row = np.zeros(S * P)
        row[t::P] = 1.0
        A.append(row)
        b.append(max(depths[t], 0.0))
    bounds = [(0.0, store.power) for store in stores for _ in range(P)]
    result = linprog(c, A_ub=np.array(A), b_ub=np.array(b), bounds=bounds, method="highs")
    assert result.status == 0
    return float(np.clip(depths, 0, None).sum() * period_length + result.fun)


# ───────────────────────────── greedy policy ─────────────────────────────
def test_single_store_covers_what_it_can():
    """One 10 MW / 15 MWh store against [8, 12, 4]: 8 + 7 served, then empty."""

    result = dispatch_min_eeu([Store("s", 10, 15)], [8, 12, 4])

    assert result.residual.tolist() == pytest.approx([0, 5, 4])
    assert result.residual_energy == pytest.approx(9)
    assert result.loss_periods == 2
    assert result.empty_set == frozenset({"s"})


def test_longer_lifetime_store_goes_first():
    """
    A(10 MW, 10 MWh) and B(10 MW, 30 MWh) against [20, 20]: B (lifetime 3 h)
    leads, both serve period 0, then only B is left for period 1. A ends
    empty, B keeps 10 MWh and 10 MWh stay unserved.
    """

    a, b = Store("A", 10, 10), Store("B", 10, 30)
    result = dispatch_min_eeu([a, b], [20, 20])

    assert result.residual.tolist() == pytest.approx([0, 10])
    assert result.residual_energy == pytest.approx(10)
    assert result.empty_set == frozenset({"A"})
    assert result.discharge_of("A").tolist() == pytest.approx([10, 0])
    assert result.discharge_of("B").tolist() == pytest.approx([10, 10])


def test_equal_lifetimes_go_to_lower_id():
    """With equal lifetimes and a shallow period, only the lower id discharges."""

    result = dispatch_min_eeu([Store("z", 5, 5), Store("a", 5, 5)], [3])

    assert result.discharge_of("a").tolist() == pytest.approx([3])
    assert result.discharge_of("z").tolist() == pytest.approx([0])


def test_no_shortfall_means_no_discharge():
    """Zero or negative depth never triggers a discharge."""

    result = dispatch_min_eeu([Store("s", 5, 5)], [0, -4, 0])

    assert result.discharge.sum() == 0
    assert result.loss_periods == 0
    assert result.empty_set == frozenset()


def test_empty_store_list_leaves_depths():
    result = dispatch_min_eeu([], [3, 0, 2])
    assert result.residual.tolist() == [3, 0, 2]


def test_batched_days_match_single_days():
    """greedy_discharge over a batch gives the same rows as day-by-day calls."""

    stores = [Store("a", 4, 6), Store("b", 2, 8)]
    days = np.array([[5, 3, 0, 6], [1, 1, 1, 1], [0, 0, 9, 9]], dtype=float)
    residual, remaining, _ = greedy_discharge(
        np.array([4.0, 2.0]), np.array([6.0, 8.0]), days
    )

    for row, day in zip(residual, days):
        assert row.tolist() == pytest.approx(dispatch_min_eeu(stores, day).residual.tolist())
    assert remaining.shape == (3, 2)


def test_non_vector_depths_rejected():
    with pytest.raises(ConfigurationError):
        dispatch_min_eeu([Store("s", 1, 1)], [[1, 2], [3, 4]])


def test_greedy_matches_lp_optimum_on_random_instances():
    """
    Over 250 random instances (up to 3 stores, up to 6 periods, integer
    data) the greedy schedule's unserved energy never exceeds the LP optimum.
    """

    rng = np.random.default_rng(11)
    violations = 0
    for _ in range(250):
        count = int(rng.integers(1, 4))
        periods = int(rng.integers(1, 7))
        stores = [
            Store(f"s{i}", float(rng.integers(1, 6)), float(rng.integers(1, 13)))
            for i in range(count)
        ]
        depths = rng.integers(-2, 9, size=periods).astype(float)

        greedy = dispatch_min_eeu(stores, depths).residual_energy
        best = _lp_min_unserved(stores, depths)
        if greedy > best + 1e-6:
            violations += 1

    assert violations == 0


# ───────────────────────────── illustrative policies ─────────────────────
def test_min_lole_and_min_peak_reduce_eeu_equally():
    """
    One 30 MW / 13 MWh store over depths [5, 30, 8]: the LOLE policy clears
    the two shallow periods, the peak policy shaves the 30 MW peak to 17,
    and both remove 13 MWh.
    """

    store = Store("s", 30, 13)
    lole = dispatch_min_lole(store, [5, 30, 8])
    peak = dispatch_min_peak(store, [5, 30, 8])

    assert lole.residual.tolist() == pytest.approx([0, 30, 0])
    assert peak.residual.tolist() == pytest.approx([5, 17, 8])
    assert lole.loss_periods == 1
    assert peak.loss_periods == 3
    assert lole.residual_energy == pytest.approx(peak.residual_energy)
    assert lole.residual_energy == pytest.approx(43 - 13)


def test_min_peak_respects_power_cap():
    """At 10 MW the peak can only come down to 20 and the rest is spread."""

    peak = dispatch_min_peak(Store("s", 10, 13), [5, 30, 8])

    assert peak.residual.tolist() == pytest.approx([5, 20, 5])
    assert peak.discharge.max() <= 10 + 1e-9


def test_min_peak_with_ample_energy_clears_everything():
    peak = dispatch_min_peak(Store("s", 50, 100), [5, 30, 8])
    assert peak.residual.tolist() == pytest.approx([0, 0, 0])


def test_min_lole_spends_leftover_on_deepest():
    """Leftover energy after the clearable periods shaves the deepest one."""

    lole = dispatch_min_lole(Store("s", 10, 20), [4, 30, 6])

    assert lole.residual.tolist() == pytest.approx([0, 20, 0])
    assert lole.empty_set == frozenset({"s"})


def test_compare_policies_returns_all_three():
    results = compare_policies(Store("s", 30, 13), [5, 30, 8])

    assert set(results) == {"min_eeu", "min_lole", "min_peak"}
    rows = results["min_lole"].rows()
    assert rows[1] == {"period": 1, "depth_before": 30.0, "depth_after": 30.0, "policy": "min_lole"}


# ───────────────────────────── episodes ──────────────────────────────────
def test_episodes_split_on_non_positive_periods():
    found = episodes([0, 2, 3, 0, -1, 5, 0], day=4)

    assert [e.periods.tolist() for e in found] == [[1, 2], [5]]
    assert [e.energy for e in found] == [5.0, 5.0]
    assert all(e.day == 4 for e in found)
