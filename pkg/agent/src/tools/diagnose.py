from logging import Logger
from typing import Any, Dict, List, Tuple

import numpy as np

from .context import get_env, get_logger, get_run, report_failure
from adequacy_types import ResourceSet, ShortfallEnsemble, Store
from auction import initial_reference, naive_efcs
from diagnostics import (
    TRIAL_ENERGY_MWH,
    continuity_scan,
    estimate_noise_floor,
    smoothness_grid,
)
from efc import rho
from errors import ConfigurationError
from helpers import format_mw, write_csv, write_json
from risk_metrics import net_residual
from storage_dispatch import compare_policies

DIAGNOSTICS = ("continuity", "smoothness", "noise", "dispatch")
NOISE_SEEDS = 5


def _deepest_day(resources: ResourceSet, background: ShortfallEnsemble) -> Tuple[int, int, np.ndarray]:
    """(trace, day, depths) of the day with the most shortfall energy."""
    per_day = background.grid.periods_per_day
    best: Tuple[int, int, np.ndarray] = (0, 0, np.zeros(per_day))
    best_energy = -1.0
    for k in range(background.num_traces):
        days = np.maximum(net_residual(resources, background, k), 0.0).reshape(-1, per_day)
        energy = days.sum(axis=1)
        d = int(np.argmax(energy))
        if energy[d] > best_energy:
            best, best_energy = (k, d, days[d]), float(energy[d])
    return best


def diagnose(kind: str = "continuity") -> Dict[str, Any]:
    """
    Run one of the auction-assumption diagnostics.

    Args:
      kind: continuity | smoothness | noise | dispatch.
        - continuity: cumulative whole-set EFC against residual EEU in merit order
        - smoothness: local-additivity deviations over a trial-store grid
        - noise: repeat one smoothness cell over fresh seeds
        - dispatch: the three dispatch policies on the deepest shortfall day
    """

    env = get_env()
    run = get_run()
    logger: Logger = get_logger()

    try:
        scenario = run.scenario
        chosen = kind.strip().lower()
        if chosen not in DIAGNOSTICS:
            raise ConfigurationError(f"Unknown diagnostic '{kind}' (expected one of {', '.join(DIAGNOSTICS)})")
        background = run.background()
        payload: Dict[str, Any] = {"status": "ok", "scenario": scenario.name, "kind": chosen}

        if chosen == "continuity":
            standard = scenario.require_standard()
            if not scenario.bids:
                raise ConfigurationError(f"Scenario `{scenario.name}` offers no bids to scan")
            efc = naive_efcs(list(scenario.bids), background, standard, run.tol_mw, run.threads)
            target = rho(initial_reference(background, standard, run.tol_mw, run.threads), background, "eeu", run.threads)
            scan = continuity_scan(list(scenario.bids), background, efc, target, tol=run.tol_mw, threads=run.threads)
            payload.update(scan.to_dict())
            write_csv(run.artifact("continuity.csv"), scan.rows())
            reply = (
                f"📈 **Continuity scan — `{scenario.name}`**\n"
                f"- **Points:** `{len(scan.points)}`\n"
                f"- **Largest EFC step:** `{format_mw(scan.max_gap)}`\n"
                f"- **Largest step near target:** `{format_mw(scan.max_gap_near_target)}`"
            )

        elif chosen == "smoothness":
            grid = smoothness_grid(scenario.resources, background, threads=run.threads)
            payload.update(grid.to_dict())
            write_csv(run.artifact("smoothness.csv"), grid.rows())
            reply = (
                f"🧮 **Local additivity — `{scenario.name}`**\n"
                f"- **Trial-store energy:** `{TRIAL_ENERGY_MWH:g} MWh`\n"
                f"- **Max deviation:** `{grid.max_deviation:.3g}%`"
            )

        elif chosen == "noise":
            seeds = [scenario.seed + i for i in range(1, NOISE_SEEDS + 1)]
            floor = estimate_noise_floor(
                scenario.resources,
                lambda s: scenario.with_seed(s).background(run.threads),
                seeds,
                threads=run.threads,
            )
            payload.update(floor.to_dict())
            reply = (
                f"🎲 **Sampling noise floor — `{scenario.name}`**\n"
                f"- **Seeds:** `{len(seeds)}`\n"
                f"- **Floor:** `{floor.floor:.3g}%`"
            )

        else:
            stores = [b.resource for b in scenario.bids if isinstance(b.resource, Store)]
            store = stores[0] if stores else Store("trial", 10.0, TRIAL_ENERGY_MWH)
            trace, day, depths = _deepest_day(scenario.resources, background)
            results = compare_policies(store, depths, background.grid.period_length)
            rows: List[Dict[str, Any]] = [row for r in results.values() for row in r.rows()]
            write_csv(run.artifact("dispatch.csv"), rows, ["period", "depth_before", "depth_after", "policy"])
            summary = {
                name: {"loss_periods": r.loss_periods, "unserved_mwh": r.residual_energy}
                for name, r in results.items()
            }
            payload.update({"store": store.id, "trace": trace, "day": day, "policies": summary})
            reply = "\n".join(
                [f"🔌 **Dispatch policies — `{store.id}` on trace {trace}, day {day}**"]
                + [
                    f"- **{name}:** `{s['loss_periods']}` loss periods, `{s['unserved_mwh']:.6g} MWh` unserved"
                    for name, s in summary.items()
                ]
            )

        write_json(run.artifact(f"{chosen}.json"), payload)
        logger.info("diagnostic %s finished for %s", chosen, scenario.name)
        env.add_reply(reply)
        return payload

    except Exception as e:
        return report_failure(f"run the {kind} diagnostic", e)
