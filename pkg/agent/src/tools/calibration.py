from logging import Logger
from typing import Any, Dict, Optional

from .context import get_env, get_logger, get_run, report_failure
from adequacy_types import ResourceSet, parse_metric
from efc import calibrate_firm, rho
from helpers import format_mw, write_json


def calibrate(metric: str = "", target: Optional[float] = None) -> Dict[str, Any]:
    """
    Find the firm capacity that brings a risk metric down to a target.

    Args:
      metric: "lole" or "eeu"; defaults to the scenario standard's metric.
      target: target level; defaults to the scenario standard's k.
    """

    env = get_env()
    run = get_run()
    logger: Logger = get_logger()

    try:
        scenario = run.scenario
        standard = scenario.standard
        chosen = parse_metric(metric) if metric else scenario.require_standard().metric
        if target is None:
            if standard is None or standard.metric != chosen:
                env.add_reply(f"⚠️ No {chosen.upper()} target given and the scenario standard does not define one.")
                return {"status": "skipped", "reason": "no target"}
            target = standard.k

        background = run.background()
        firm = calibrate_firm(background, chosen, float(target), run.tol_mw, threads=run.threads)
        achieved = rho(ResourceSet(firm=firm), background, chosen, run.threads)
        payload: Dict[str, Any] = {
            "status": "ok",
            "scenario": scenario.name,
            "metric": chosen,
            "target": float(target),
            "firm_mw": firm,
            "achieved": achieved,
            "tol_mw": run.tol_mw,
        }
        write_json(run.artifact("calibrate.json"), payload)
        logger.info("calibrate: %s <= %.6g needs %.3f MW", chosen, target, firm)

        env.add_reply(
            f"🎯 **Firm capacity for {chosen.upper()} ≤ {float(target):.6g}**\n"
            f"- **Firm:** `{format_mw(firm)}`\n"
            f"- **Achieved:** `{achieved:.6g}`"
        )
        return payload

    except Exception as e:
        return report_failure("calibrate firm capacity", e)
