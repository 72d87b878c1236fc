from logging import Logger
from typing import Any, Dict, List

from .context import get_env, get_logger, get_run, report_failure
from economics import check_one_one, default_families, optimal_firm, storage_cost_scan
from helpers import format_mw, format_number, write_csv, write_json


def economics() -> Dict[str, Any]:
    """
    Economic view of the scenario.

    Reports the firm capacity minimising VOLL x EEU + CONE x capacity, the
    LOLE it lands on against CONE / VOLL, the EEU/LOLE correspondence over
    the bundled resource families and, when the scenario lists standards
    to scan, the storage-inclusive cost of clearing at each of them.
    """

    env = get_env()
    run = get_run()
    logger: Logger = get_logger()

    try:
        scenario = run.scenario
        econ = scenario.require_econ()
        background = run.background()

        optimum = optimal_firm(background, econ, tol=run.tol_mw, threads=run.threads)
        levels = list(scenario.firm_levels) or [optimum.firm_mw * s for s in (0.5, 0.75, 1.0, 1.25)]
        checks = check_one_one(background, default_families(background, levels), threads=run.threads)

        scan: List[Dict[str, Any]] = []
        if scenario.storage_scan_ks and scenario.bids:
            scan = storage_cost_scan(list(scenario.bids), background, econ, scenario.storage_scan_ks, threads=run.threads)
            write_csv(run.artifact("storage_cost_scan.csv"), scan)

        payload: Dict[str, Any] = {
            "status": "ok",
            "scenario": scenario.name,
            "voll": econ.voll,
            "cone": econ.cone,
            "lole_standard_h": econ.lole_standard_h,
            "optimum": optimum.to_dict(),
            "families": [c.to_dict() for c in checks],
            "storage_cost_scan": scan,
        }
        write_json(run.artifact("economics.json"), payload)
        logger.info("economics: optimum %.3f MW at LOLE %.4f h", optimum.firm_mw, optimum.lole_h)

        lines = [
            f"💷 **Economic optimum — `{scenario.name}`**",
            f"- **Firm:** `{format_mw(optimum.firm_mw)}`",
            f"- **LOLE:** `{optimum.lole_h:.4g} h` (CONE/VOLL `{optimum.lole_target_h:.4g} h`)",
            f"- **Total cost:** `{format_number(optimum.total_cost)}`",
        ]
        if optimum.at_boundary:
            lines.append("- ⚠️ Optimum sits on the search bracket")
        for c in checks:
            mark = "✅" if c.one_one else "❌"
            lines.append(f"- {mark} EEU/LOLE one-one for `{c.name}` ({c.violations} violations)")
        best = [r for r in scan if r.get("best")]
        if best:
            lines.append(f"- **Cheapest scanned standard:** EEU ≤ `{format_number(float(best[0]['k']))}`")
        env.add_reply("\n".join(lines))
        return payload

    except Exception as e:
        return report_failure("compute the economic optimum", e)
