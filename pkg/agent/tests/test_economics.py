# tests/test_economics.py
import numpy as np
import pytest

from adequacy_types import ResourceSet, Standard, Store
from auction import descending_clock
from economics import (
    DemandCurve,
    EconParams,
    Family,
    check_one_one,
    clear_with_demand_curve,
    cost_scan,
    default_families,
    firm_family,
    lole_demand_curve,
    mid_shortfall_solar_family,
    optimal_firm,
    storage_cost_scan,
    variable_family,
)
from errors import ConfigurationError, StorageFamilyError
from runtime_constants import GB_CONE_PER_MW_YEAR, GB_VOLL_PER_MWH
from scenarios import economic_scenario
from test_utils import ensemble, hand_bids

PRICE_GRID = [float(p) for p in range(10, -1, -1)]


@pytest.fixture
def hand_bg():
    return ensemble([[30, 20, 0]])


@pytest.fixture
def noisy_bg():
    rng = np.random.default_rng(77)
    return ensemble(rng.normal(0.0, 10.0, size=(200, 24)))


# ───────────────────────────── parameters ────────────────────────────────
def test_gb_pivot_is_cone_over_voll():
    """49 GBP/kW-year over 17 GBP/kWh is an LOLE level of about 2.88 h."""

    econ = EconParams(voll=GB_VOLL_PER_MWH, cone=GB_CONE_PER_MW_YEAR)
    assert econ.lole_standard_h == pytest.approx(49 / 17)
    assert round(econ.lole_standard_h, 2) == 2.88


def test_econ_params_validation():
    with pytest.raises(ConfigurationError):
        EconParams(voll=0)
    with pytest.raises(ConfigurationError):
        EconParams(voll=1, cone=-1)
    with pytest.raises(ConfigurationError):
        EconParams(voll=1).linear_cost()


def test_demand_curve_interpolates_and_validates():
    curve = DemandCurve([(10, 0), (0, 20)])

    assert curve(5) == pytest.approx(10)
    assert curve(-3) == pytest.approx(20)
    assert curve(99) == pytest.approx(0)
    assert curve.mid_price == pytest.approx(5)
    assert DemandCurve.vertical(7)(123) == pytest.approx(7)

    with pytest.raises(ConfigurationError):
        DemandCurve([(0, 5), (10, 6)])
    with pytest.raises(ConfigurationError):
        DemandCurve([(0, 5), (0, 4)])
    with pytest.raises(ConfigurationError):
        DemandCurve([])


# ───────────────────────────── optimal firm capacity ─────────────────────
def test_optimal_firm_on_hand_trace(hand_bg):
    """
    With VOLL 1 and CONE 1.5 the total cost falls at slope -0.5 up to 20 MW
    and rises at +0.5 beyond, so the optimum is at 20 MW.
    """

    result = optimal_firm(hand_bg, EconParams(voll=1.0, cone=1.5), tol=0.01)

    assert result.firm_mw == pytest.approx(20, abs=1.5)
    assert not result.at_boundary
    assert result.marginal_cost == pytest.approx(1.5)
    assert result.lole_target_h == pytest.approx(1.5)


def test_optimal_firm_lands_on_cone_over_voll():
    """On the storage-free economic fixture LOLE at the optimum is within 0.25 h of CONE/VOLL."""

    scenario = economic_scenario()
    econ = scenario.require_econ()
    result = optimal_firm(scenario.background(), econ)

    assert not result.at_boundary
    assert result.pivot_gap_h <= 0.25


def test_optimal_firm_refuses_storage(hand_bg):
    base = ResourceSet(stores=(Store("s", 1, 1),))
    with pytest.raises(StorageFamilyError):
        optimal_firm(hand_bg, EconParams(voll=1.0, cone=1.0), base=base)


def test_cost_scan_rows(hand_bg):
    econ = EconParams(voll=2.0, cone=1.0)
    rows = cost_scan(hand_bg, econ, econ.linear_cost(), [0, 10, 30])

    assert [r["total_cost"] for r in rows] == pytest.approx([100.0, 70.0, 30.0])
    assert rows[1]["lole_h"] == pytest.approx(2)


# ───────────────────────────── demand-curve clearing ─────────────────────
def test_lole_demand_curve_is_nonincreasing(hand_bg):
    """Capacity where LOLE = q / VOLL: 30 MW for 0.5 h, 20 MW for 1.5 h, none for 2.5 h."""

    curve = lole_demand_curve(hand_bg, voll=1.0, prices=[0.5, 1.5, 2.5])

    assert curve(0.5) == pytest.approx(30, abs=1.0)
    assert curve(1.5) == pytest.approx(20, abs=1.0)
    assert curve(2.5) == pytest.approx(0)


def test_vertical_curve_matches_clock_with_equivalent_standard(hand_bg):
    """A vertical curve at C behaves like a clock with k = EEU(firm C)."""

    econ = EconParams(voll=1.0, demand_curve=DemandCurve.vertical(10.0))
    by_curve = clear_with_demand_curve(hand_bids(), hand_bg, econ, PRICE_GRID, metric="eeu")
    by_clock = descending_clock(hand_bids(), hand_bg, Standard("eeu", 30.0), PRICE_GRID)

    assert by_curve.accepted == by_clock.accepted
    assert by_curve.clearing_price == by_clock.clearing_price
    assert by_curve.efc == by_clock.efc
    assert by_curve.mode == "demandcurve"


def test_sloped_curve_on_hand_fixture(hand_bg):
    """With capacity 20 - 2q the stores clear at 5, where the curve asks for 10 MW."""

    econ = EconParams(voll=1.0, demand_curve=DemandCurve([(0, 20), (10, 0)]))
    outcome = clear_with_demand_curve(hand_bids(), hand_bg, econ, metric="eeu")

    assert outcome.accepted_set == {"store_a", "store_b"}
    assert outcome.clearing_price == pytest.approx(5)
    assert outcome.standard.k == pytest.approx(30)


def test_demand_curve_clearing_needs_a_curve(hand_bg):
    with pytest.raises(ConfigurationError):
        clear_with_demand_curve(hand_bids(), hand_bg, EconParams(voll=1.0))


# ───────────────────────────── EEU / LOLE correspondence ────────────────
def test_firm_and_independent_variable_families_are_one_one(noisy_bg):
    scales = [0.0, 0.5, 1.0, 1.5]
    checks = check_one_one(
        noisy_bg,
        [firm_family([0, 5, 10, 15]), variable_family(noisy_bg, 10.0, scales)],
    )

    assert [c.one_one for c in checks] == [True, True]


def test_mid_shortfall_solar_breaks_the_correspondence(noisy_bg):
    """Output that halves every shortfall lowers EEU and leaves LOLE alone."""

    family = mid_shortfall_solar_family(noisy_bg, [0.0, 0.5, 1.0, 1.5])
    (check,) = check_one_one(noisy_bg, [family])

    assert not check.one_one
    assert check.violations == 3
    levels = {round(lole, 9) for _, lole in check.points}
    assert len(levels) == 1


def test_mid_shortfall_scale_bounds(noisy_bg):
    with pytest.raises(ConfigurationError):
        mid_shortfall_solar_family(noisy_bg, [2.0])


def test_families_with_storage_are_refused(noisy_bg):
    family = Family("stored", (ResourceSet(stores=(Store("s", 1, 1),)),))
    with pytest.raises(StorageFamilyError):
        check_one_one(noisy_bg, [family])


def test_default_families(noisy_bg):
    names = [f.name for f in default_families(noisy_bg, [0, 10, 20])]
    assert names == ["firm", "independent_variable", "mid_shortfall_solar"]


# ───────────────────────────── storage-inclusive scan ────────────────────
def test_storage_cost_scan_marks_rows_non_pivotable(hand_bg):
    """
    k = 30.5 clears both stores (EEU 30, cost 50); k = 40 clears store_a
    alone (EEU 40, cost 25), which is cheaper once VOLL is 2.
    """

    econ = EconParams(voll=2.0, cone=1.0)
    rows = storage_cost_scan(hand_bids(), hand_bg, econ, [30.5, 40.0])

    assert all(r["pivotable"] is False for r in rows)
    assert [r["status"] for r in rows] == ["ok", "ok"]
    assert rows[0]["total_cost"] == pytest.approx(2.0 * 30 + 50)
    assert rows[1]["total_cost"] == pytest.approx(2.0 * 40 + 25)
    assert "best" not in rows[0]
    assert rows[1]["best"] is True
