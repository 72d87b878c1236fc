from pathlib import Path

from nearai.agents.environment import Environment

from helpers import resolve_threads
from runtime_constants import DEFAULT_OUT_DIR
from scenario_registry import default_scenario, resolve_scenario_path
from scenarios import load_scenario
from tools import RunContext, register_tools

SYSTEM_PROMPT = (
    "You are a capacity-adequacy assistant for a power system with storage. "
    "Answer with the tools: they evaluate LOLE and EEU, value offered resources "
    "by equivalent firm capacity, clear the capacity auction and run the "
    "diagnostics. Quote numbers exactly as the tools report them; do not "
    "estimate reliability figures yourself. If the user types `help`, call "
    "show_help_menu."
)


def run(env: Environment) -> None:
    """
    Minimal, single-source entrypoint:
    - Load the scenario named by ADEQUACY_SCENARIO.
    - Register tools via tools.base.
    - Always respond; surface concise diagnostics on failure.
    """

    try:
        scenario = load_scenario(resolve_scenario_path(default_scenario()))
        out_dir = Path(DEFAULT_OUT_DIR)
        run_ctx = RunContext(scenario=scenario, out_dir=out_dir, threads=resolve_threads())
    except Exception as e:
        env.add_reply(
            "Failed to load the scenario. Set ADEQUACY_SCENARIO to a bundled alias or a scenario file.\n"
            f"Error: {e}"
        )
        return

    tool_defs = register_tools(env, run_ctx)

    messages = env.list_messages()
    prompt_list = [{"role": "system", "content": SYSTEM_PROMPT}, *messages]

    try:
        env.completions_and_run_tools(prompt_list, tools=tool_defs)
    except Exception as e:
        env.add_reply(
            "The assistant encountered an error while generating a reply.\n"
            f"Error: {e}"
        )


# Only invoke run(env) if NearAI has injected `env` at import time.
if "env" in globals():
    run(env)  # type: ignore[name-defined]
