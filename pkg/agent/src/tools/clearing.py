from logging import Logger
from typing import Any, Dict

from .context import get_env, get_logger, get_run, report_failure, standard_line
from auction import (
    AuctionOutcome,
    clear,
    clear_naive_firm_efc,
    descending_clock,
    lumpy_recheck,
    verify_equilibrium,
)
from economics import clear_with_demand_curve
from errors import ConfigurationError
from helpers import format_mw, format_number, write_csv, write_json

CLEARING_MODES = ("naive", "fixedpoint", "clock", "demandcurve")


def run_auction(mode: str = "fixedpoint", lumpy: bool = False) -> Dict[str, Any]:
    """
    Clear the capacity auction of the scenario's bids.

    Args:
      mode: naive | fixedpoint | clock | demandcurve.
      lumpy: after clearing, test whether a large accepted resource can be
        swapped for cheaper covering bids.

    Writes `outcome.json` and `outcome.csv` (one row per bid).
    """

    env = get_env()
    run = get_run()
    logger: Logger = get_logger()

    try:
        scenario = run.scenario
        chosen = mode.strip().lower()
        if chosen not in CLEARING_MODES:
            raise ConfigurationError(f"Unknown clearing mode '{mode}' (expected one of {', '.join(CLEARING_MODES)})")
        bids = list(scenario.bids)
        background = run.background()

        outcome: AuctionOutcome
        if chosen == "demandcurve":
            econ = scenario.require_econ()
            grid = scenario.price_grid or None
            outcome = clear_with_demand_curve(bids, background, econ, grid, tol=run.tol_mw, threads=run.threads)
        else:
            standard = scenario.require_standard()
            if chosen == "naive":
                outcome = clear_naive_firm_efc(bids, background, standard, run.tol_mw, run.threads)
            elif chosen == "clock":
                if not scenario.price_grid:
                    raise ConfigurationError(f"Scenario `{scenario.name}` has no price_grid for clock clearing")
                outcome = descending_clock(bids, background, standard, scenario.price_grid, tol=run.tol_mw, threads=run.threads)
            else:
                outcome = clear(bids, background, standard, tol=run.tol_mw, threads=run.threads)
            if lumpy:
                outcome = lumpy_recheck(outcome, bids, background, standard, tol=run.tol_mw, threads=run.threads)

        check = verify_equilibrium(outcome, bids, background, outcome.standard, threads=run.threads)
        if not check.ok:
            logger.warning("clearing %s is not an equilibrium: %s", chosen, "; ".join(check.violations) or "standard missed")

        payload: Dict[str, Any] = {
            "status": "ok",
            "scenario": scenario.name,
            **outcome.to_dict(),
            "equilibrium": {"reliable": check.reliable, "violations": list(check.violations)},
        }
        write_json(run.artifact("outcome.json"), payload)
        write_csv(run.artifact("outcome.csv"), outcome.rows(), ["id", "efc_mw", "unit_price", "accepted", "payment"])

        lines = [
            f"🏷️ **Auction ({chosen}) — `{scenario.name}`**",
            f"- **Accepted:** `{len(outcome.accepted)}` of `{len(bids)}` bids",
            f"- **Clearing price:** `{format_number(outcome.clearing_price)}` per MW EFC",
            f"- **Procurement cost:** `{format_number(outcome.total_cost)}`",
            f"- **Payments:** `{format_number(outcome.total_payment)}`",
            f"- **Accepted firm:** `{format_mw(outcome.accepted_firm_mw)}`",
            f"- **Iterations:** `{outcome.iterations}`",
            standard_line(outcome.standard, outcome.risk_achieved),
        ]
        if outcome.whole_set_storage_efc is not None:
            lines.append(
                f"- **Storage EFC:** marginal sum `{format_mw(outcome.sum_marginal_storage_efc)}`, "
                f"whole set `{format_mw(outcome.whole_set_storage_efc)}`"
            )
        if outcome.lumpy_adjusted:
            lines.append("- Lumpy recheck replaced the accepted set with a cheaper covering one")
        env.add_reply("\n".join(lines))
        return payload

    except Exception as e:
        return report_failure("clear the auction", e)
