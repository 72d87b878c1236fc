"""Small helpers for tests (non-pytest fixtures)."""

from typing import Sequence

import numpy as np

from adequacy_types import FirmBlock, ShortfallEnsemble, Store, TimeGrid
from auction import Bid


def ensemble(rows: Sequence[Sequence[float]], periods_per_day: int = 0, seed: int = 0) -> ShortfallEnsemble:
    """Background built straight from residual rows (one per trace).

    With `periods_per_day` left at 0 every trace is a single day.
    """
    residual = np.atleast_2d(np.asarray(rows, dtype=float))
    per_day = periods_per_day or residual.shape[1]
    grid = TimeGrid(periods_per_day=per_day, num_days=residual.shape[1] // per_day)
    return ShortfallEnsemble(residual=residual, grid=grid, seed=seed)


def firm_bid(bid_id: str, mw: float, price: float) -> Bid:
    return Bid(FirmBlock(bid_id, mw), price)


def store_bid(bid_id: str, power: float, energy: float, price: float) -> Bid:
    return Bid(Store(bid_id, power, energy), price)


def hand_bids(store_price: float = 25.0) -> list:
    """firm_a 20 MW at 120 plus two 10 MW / 10 MWh stores."""
    return [
        firm_bid("firm_a", 20.0, 120.0),
        store_bid("store_a", 10.0, 10.0, store_price),
        store_bid("store_b", 10.0, 10.0, store_price),
    ]
