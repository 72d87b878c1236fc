# tests/test_gb_shaped.py
from collections import Counter

import pytest

from adequacy_types import FirmBlock, ResourceSet, Standard, Store
from auction import clear, clear_naive_firm_efc, verify_equilibrium
from diagnostics import estimate_noise_floor, smoothness_grid
from efc import rho
from scenario_registry import resolve_scenario_path
from scenarios import (
    GB_FLEET_MW,
    GB_FLEET_UNITS,
    GB_TARGET_FIRM_MW,
    approximate_final_set,
    gb_firm_blocks,
    gb_store_bids,
    gb_shaped_scenario,
    interleaved,
    load_scenario,
    synthetic_fleet,
)
from test_utils import ensemble


@pytest.fixture(scope="module")
def gb():
    """Small-ensemble build of the storage-heavy scenario (shared across tests)."""
    return gb_shaped_scenario(num_traces=20, num_days=30, threads=1)


# ───────────────────────────── offer book ───────────────────────────────
def test_store_mix():
    stores = gb_store_bids()
    by_shape = Counter((s.power, s.energy) for s in stores)

    assert len(stores) == 120
    assert by_shape[(50.0, 12.5)] == 10
    assert by_shape[(100.0, 200.0)] == 20
    assert sum(n for (p, _), n in by_shape.items() if p == 50.0) == 60
    assert len({s.id for s in stores}) == 120


def test_firm_blocks_three_per_size():
    blocks = gb_firm_blocks()
    sizes = Counter(b.capacity for b in blocks)

    assert len(blocks) == 30
    assert set(sizes) == {10.0 * m for m in range(1, 11)}
    assert set(sizes.values()) == {3}


def test_synthetic_fleet_totals():
    fleet = synthetic_fleet(seed=1)

    assert len(fleet) == GB_FLEET_UNITS
    assert sum(u.capacity for u in fleet) == pytest.approx(GB_FLEET_MW)
    assert all(0.85 - 1e-9 <= u.availability <= 0.95 + 1e-9 for u in fleet)
    assert synthetic_fleet(seed=1) == fleet
    assert synthetic_fleet(seed=2) != fleet


# ───────────────────────────── calibrated background ────────────────────
def test_firm_requirement_is_the_configured_amount(gb):
    """Shifting load moves the firm requirement one for one, so it lands on the target."""

    assert gb.resources.firm == pytest.approx(GB_TARGET_FIRM_MW, abs=2.5)
    assert rho(gb.resources, gb.background(1), "lole", 1) <= 3.0


def test_standard_is_eeu_at_the_requirement(gb):
    standard = gb.require_standard()

    assert standard.metric == "eeu"
    assert standard.k == pytest.approx(rho(gb.resources, gb.background(1), "eeu", 1))
    assert standard.k > 0


def test_bids_cover_every_resource(gb):
    kinds = Counter(type(b.resource) for b in gb.bids)

    assert kinds[Store] == 120
    assert kinds[FirmBlock] == 30
    assert all(b.min_total_price > 0 for b in gb.bids)
    assert gb.price_grid[0] > gb.price_grid[-1] == 0.0


# ───────────────────────────── pricing set ──────────────────────────────
def test_interleaved_prefixes_keep_the_store_mix():
    stores = gb_store_bids()
    order = interleaved(stores)
    counts = Counter((s.power, s.energy) for s in stores)

    assert sorted(s.id for s in order) == sorted(s.id for s in stores)
    for m in (12, 30, 60, 90):
        seen = Counter((s.power, s.energy) for s in order[:m])
        for shape, n in counts.items():
            assert abs(seen[shape] - m * n / len(stores)) <= 2


def test_approximate_final_set_is_the_shortest_covering_prefix():
    bg = ensemble([[30, 20, 0], [25, 10, 5]])
    stores = [Store(f"a{i}", 5.0, 10.0) for i in range(4)] + [Store(f"b{i}", 10.0, 5.0) for i in range(2)]
    standard = Standard("eeu", 12.0)

    chosen = approximate_final_set(stores, bg, standard, firm_mw=5.0)
    m = len(chosen.stores)
    shorter = ResourceSet(firm=5.0, stores=tuple(interleaved(stores)[: m - 1]))

    assert chosen.firm == 5.0
    assert 0 < m < len(stores)
    assert rho(chosen, bg, "eeu") <= standard.k
    assert rho(shorter, bg, "eeu") > standard.k


def test_approximate_final_set_falls_back_to_every_store():
    chosen = approximate_final_set([Store("s", 1.0, 1.0)], ensemble([[30, 20, 0]]), Standard("eeu", 0.0), firm_mw=0.0)
    assert [s.id for s in chosen.stores] == ["s"]


# ───────────────────────────── bundled fixture ──────────────────────────
@pytest.fixture(scope="module")
def gb_full():
    return load_scenario(resolve_scenario_path("gb"))


@pytest.mark.slow
def test_fixed_point_beats_naive_clearing_on_the_bundled_fixture(gb_full):
    """Naive EFCs overvalue stores, so naive clearing buys too much storage and pays more for it."""

    bids, bg, standard = gb_full.bids, gb_full.background(), gb_full.require_standard()

    naive = clear_naive_firm_efc(bids, bg, standard)
    final = clear(bids, bg, standard)
    store_ids = [b.id for b in bids if b.is_store]

    assert final.iterations <= 10
    assert sum(naive.efc[i] for i in store_ids) > sum(final.efc[i] for i in store_ids)
    assert naive.total_cost > final.total_cost
    assert final.whole_set_storage_efc is not None
    assert final.whole_set_storage_efc > final.sum_marginal_storage_efc
    assert verify_equilibrium(final, bids, bg, standard).reliable


@pytest.mark.slow
def test_small_stores_are_locally_additive_on_the_bundled_fixture(gb_full):
    bg = gb_full.background()
    floor = estimate_noise_floor(
        gb_full.resources, lambda seed: gb_full.with_seed(seed).background(), seeds=range(1, 4), power_i=10, power_j=10
    )
    grid = smoothness_grid(gb_full.resources, bg)

    assert grid.max_deviation <= 5.0
    assert grid.cell(10, 10) <= grid.cell(50, 50) + floor.floor
