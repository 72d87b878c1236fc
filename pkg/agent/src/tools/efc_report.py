from logging import Logger
from typing import Any, Dict, List

from .context import get_env, get_logger, get_run, report_failure
from adequacy_types import parse_metric
from efc import efc_report as build_report
from helpers import format_mw, write_csv, write_json


def efc_report(metric: str = "eeu") -> Dict[str, Any]:
    """
    Exact, marginal and ELCC capacity values of every offered resource,
    measured against the scenario's resource set.

    Writes `efc.json` and `efc.csv` (one row per resource and method).
    """

    env = get_env()
    run = get_run()
    logger: Logger = get_logger()

    try:
        scenario = run.scenario
        chosen = parse_metric(metric)
        if not scenario.bids:
            env.add_reply(f"⚠️ Scenario `{scenario.name}` offers no resources to value.")
            return {"status": "skipped", "reason": "no bids"}

        estimates = build_report(
            [b.resource for b in scenario.bids],
            scenario.resources,
            run.background(),
            chosen,
            run.tol_mw,
            run.threads,
        )
        rows: List[Dict[str, Any]] = [e.to_row() for e in estimates]
        payload: Dict[str, Any] = {"status": "ok", "scenario": scenario.name, "metric": chosen, "estimates": rows}
        write_json(run.artifact("efc.json"), payload)
        write_csv(run.artifact("efc.csv"), rows)
        logger.info("efc report: %d resources, %d estimates", len(scenario.bids), len(rows))

        lines = [f"🔋 **Capacity values — `{scenario.name}` ({chosen.upper()})**"]
        by_id: Dict[str, Dict[str, float]] = {}
        for e in estimates:
            by_id.setdefault(e.resource_id, {})[e.method] = e.value
        for rid, values in by_id.items():
            lines.append(
                f"- `{rid}`: exact {format_mw(values.get('exact-bisection', 0.0))}, "
                f"marginal {format_mw(values.get('marginal-ratio', 0.0))}, "
                f"ELCC {format_mw(values.get('elcc-bisection', 0.0))}"
            )
        env.add_reply("\n".join(lines))
        return payload

    except Exception as e:
        return report_failure("value resources", e)
