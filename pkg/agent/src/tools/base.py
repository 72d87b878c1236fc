from typing import Any, List

from .context import RunContext, set_context
from adequacy_types import ReplyEnv
from . import (
    calibration,
    clearing,
    diagnose,
    economics_report,
    efc_report,
    menu,
    risk,
)

# Register all tools here
def register_tools(env: ReplyEnv, run: RunContext) -> List[Any]:
    """
    Register all adequacy tools with the environment.
    Called from `tools/__init__.py`.

    The environment must expose `get_tool_registry()` (NEAR AI's does).
    """

    set_context(env, run)
    registry = env.get_tool_registry()  # type: ignore[attr-defined]
    registered_tools: List[str] = []

    for tool in (
        menu.show_help_menu,
        risk.risk,
        calibration.calibrate,
        efc_report.efc_report,
        clearing.run_auction,
        diagnose.diagnose,
        economics_report.economics,
    ):
        registry.register_tool(tool)
        registered_tools.append(tool.__name__)

    return [
        registry.get_tool_definition(name)
        for name in registered_tools
    ]
