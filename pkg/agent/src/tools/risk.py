from logging import Logger
from typing import Any, Dict

from .context import get_env, get_logger, get_run, report_failure, standard_line
from helpers import write_csv, write_json
from risk_metrics import evaluate


def risk() -> Dict[str, Any]:
    """
    Evaluate LOLE and EEU of the scenario's resource set.

    Writes `risk.json` (ensemble summary) and `risk_traces.csv` (one row per
    trace) to the output directory.
    """

    env = get_env()
    run = get_run()
    logger: Logger = get_logger()

    try:
        scenario = run.scenario
        background = run.background()
        report = evaluate(scenario.resources, background, run.threads)

        payload: Dict[str, Any] = {
            "status": "ok",
            "scenario": scenario.name,
            "seed": scenario.seed,
            "firm_mw": scenario.resources.firm,
            "num_stores": len(scenario.resources.stores),
            **report.to_dict(),
        }
        write_json(run.artifact("risk.json"), payload)
        write_csv(run.artifact("risk_traces.csv"), report.rows(), ["trace", "loss_periods", "unserved_mwh"])
        logger.info("risk: LOLE %.4f h, EEU %.4f MWh over %d traces", report.lole, report.eeu, report.num_traces)

        lines = [
            f"📊 **Risk — `{scenario.name}`**",
            f"- **LOLE:** `{report.lole:.6g} h`",
            f"- **EEU:** `{report.eeu:.6g} MWh`",
            f"- **Traces:** `{report.num_traces}`",
        ]
        if scenario.standard is not None:
            lines.append(standard_line(scenario.standard, report.metric(scenario.standard.metric)))
        env.add_reply("\n".join(lines))
        return payload

    except Exception as e:
        return report_failure("evaluate risk", e)
