import logging
import os
import sys
from dataclasses import dataclass
from logging import Logger
from pathlib import Path
from typing import Any, Dict, Optional

from adequacy_types import ReplyEnv, ShortfallEnsemble, Standard
from errors import error_payload
from helpers import write_json
from runtime_constants import DEFAULT_TOL_MW
from scenarios import Scenario

_env: Optional[ReplyEnv] = None
_run: Optional["RunContext"] = None

_logger = logging.getLogger(__name__)


def _ensure_console_logging() -> None:
    """Attach a console handler to this module logger if none exists.

    Respects `ADEQUACY_LOG_LEVEL` (default INFO). Prevents duplicate logs by
    only adding a handler when the logger has none, and disables propagation so
    lines appear exactly once in the console.
    """

    level = os.getenv("ADEQUACY_LOG_LEVEL", "INFO").strip().upper()
    _logger.setLevel(getattr(logging, level, logging.INFO))
    if not _logger.handlers:
        handler = logging.StreamHandler(stream=sys.stdout)
        handler.setFormatter(
            logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s")
        )
        _logger.addHandler(handler)
        # Avoid double-printing if root logger is configured elsewhere
        _logger.propagate = False

# Ensure console logging is active on import
_ensure_console_logging()


@dataclass
class RunContext:
    """The scenario a session works on and where its artifacts go."""

    scenario: Scenario
    out_dir: Path
    threads: Optional[int] = None
    tol_mw: float = DEFAULT_TOL_MW

    def background(self) -> ShortfallEnsemble:
        return self.scenario.background(self.threads)

    def artifact(self, name: str) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        return self.out_dir / name


def set_context(env: ReplyEnv, run: RunContext) -> None:
    global _env, _run
    _env = env
    _run = run


def get_env() -> ReplyEnv:
    if _env is None:
        raise RuntimeError("Environment context not initialized")
    return _env


def get_run() -> RunContext:
    if _run is None:
        raise RuntimeError("Run context not initialized")
    return _run


def get_logger() -> Logger:
    # Ensure logger stays configured even if something clears handlers
    _ensure_console_logging()
    return _logger


def report_failure(action: str, exc: BaseException) -> Dict[str, Any]:
    """Log, reply and persist `error.json` for a failed tool call."""

    env = get_env()
    logger = get_logger()
    payload = error_payload(exc)
    logger.error("%s failed: %s", action, exc, exc_info=True)
    if _run is not None:
        write_json(_run.artifact("error.json"), payload)
    env.add_reply(f"❌ Failed to {action}\n\n**Error:** {exc}")
    return payload


def standard_line(standard: Standard, achieved: float) -> str:
    unit = "h" if standard.metric == "lole" else "MWh"
    verdict = "met" if achieved <= standard.k else "NOT met"
    return f"Standard {standard.describe()} | achieved {standard.metric.upper()} {achieved:.6g} {unit} ({verdict})"
