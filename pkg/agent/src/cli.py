"""
Command-line front end.

    python agent/src/cli.py risk --scenario hand
    python agent/src/cli.py clear --scenario gb --mode naive --threads 8 --out out/gb

Every subcommand runs the same tool the chat agent exposes, prints its
markdown reply, writes JSON and CSV artifacts under --out and exits with the
error's status code on failure (0 on success).
"""

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from adequacy_types import METRICS
from errors import error_payload
from helpers import resolve_threads, write_json
from runtime_constants import DEFAULT_OUT_DIR, DEFAULT_TOL_MW
from scenario_registry import default_scenario, resolve_scenario_path
from scenarios import load_scenario
from tools import RunContext, set_context
from tools import calibration, clearing, diagnose, economics_report, efc_report, risk
from tools.clearing import CLEARING_MODES
from tools.diagnose import DIAGNOSTICS

logger = logging.getLogger("cli")


class ConsoleEnv:
    """Reply sink that prints each reply; stands in for the NEAR AI environment."""

    def __init__(self, stream: Any = None) -> None:
        self.stream = stream if stream is not None else sys.stdout
        self.replies: List[str] = []

    def add_reply(self, message: str) -> None:
        self.replies.append(message)
        print(message, file=self.stream)


def _configure_logging() -> None:
    level = os.getenv("ADEQUACY_LOG_LEVEL", "INFO").strip().upper()
    logging.basicConfig(
        stream=sys.stdout,
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", default=None, help="bundled alias (hand, economic, gb_shaped) or a scenario JSON file")
    common.add_argument("--seed", type=int, default=None, help="override the scenario's root seed")
    common.add_argument("--threads", type=int, default=None, help="worker threads (default: ADEQUACY_THREADS or all cores)")
    common.add_argument("--out", default=DEFAULT_OUT_DIR, help="artifact directory")
    common.add_argument("--tol-mw", type=float, default=DEFAULT_TOL_MW, help="bisection tolerance in MW")

    parser = argparse.ArgumentParser(prog="adequacy", description="Capacity adequacy and capacity-market engine")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("risk", parents=[common], help="LOLE and EEU of the scenario's resources")

    p_efc = sub.add_parser("efc", parents=[common], help="capacity value of every offered resource")
    p_efc.add_argument("--metric", choices=METRICS, default="eeu")

    p_clear = sub.add_parser("clear", parents=[common], help="clear the capacity auction")
    p_clear.add_argument("--mode", choices=CLEARING_MODES, default="fixedpoint")
    p_clear.add_argument("--naive", action="store_const", const="naive", dest="mode", help="shorthand for --mode naive")
    p_clear.add_argument("--lumpy", action="store_true", help="recheck large accepted resources afterwards")

    p_cal = sub.add_parser("calibrate", parents=[common], help="firm capacity that meets a target")
    p_cal.add_argument("--metric", choices=METRICS, default=None)
    p_cal.add_argument("--target", type=float, default=None)

    p_diag = sub.add_parser("diagnose", parents=[common], help="checks of the auction's assumptions")
    p_diag.add_argument("kind", choices=DIAGNOSTICS, nargs="?", default="continuity")

    sub.add_parser("economics", parents=[common], help="economic optimum and EEU/LOLE correspondence")
    return parser


def _dispatch(args: argparse.Namespace) -> Callable[[], Dict[str, Any]]:
    if args.command == "risk":
        return risk.risk
    if args.command == "efc":
        return lambda: efc_report.efc_report(args.metric)
    if args.command == "clear":
        return lambda: clearing.run_auction(args.mode, args.lumpy)
    if args.command == "calibrate":
        return lambda: calibration.calibrate(args.metric or "", args.target)
    if args.command == "diagnose":
        return lambda: diagnose.diagnose(args.kind)
    return economics_report.economics


def main(argv: Optional[Sequence[str]] = None, env: Optional[ConsoleEnv] = None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    console = env if env is not None else ConsoleEnv()
    out_dir = Path(args.out).expanduser()

    try:
        scenario = load_scenario(resolve_scenario_path(args.scenario or default_scenario()), seed=args.seed)
        run = RunContext(scenario=scenario, out_dir=out_dir, threads=resolve_threads(args.threads), tol_mw=args.tol_mw)
    except Exception as e:
        payload = error_payload(e)
        logger.error("could not set up the run: %s", e)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_json(out_dir / "error.json", payload)
        console.add_reply(f"❌ Failed to load the scenario\n\n**Error:** {e}")
        return int(payload["exit_status"])

    set_context(console, run)
    result = _dispatch(args)()
    if result.get("status") == "error":
        return int(result["exit_status"])
    return 0


if __name__ == "__main__":
    sys.exit(main())
