# tests/test_agent.py
from unittest.mock import MagicMock

import pytest

import agent


@pytest.fixture
def near_env(monkeypatch, tmp_path):
    """A NEAR AI environment stand-in over the hand scenario."""
    monkeypatch.setenv("ADEQUACY_SCENARIO", "hand")
    monkeypatch.setenv("ADEQUACY_THREADS", "1")
    monkeypatch.setattr(agent, "DEFAULT_OUT_DIR", str(tmp_path / "out"))

    env = MagicMock()
    env.list_messages.return_value = [{"role": "user", "content": "what is the LOLE?"}]
    registry = env.get_tool_registry.return_value
    registry.get_tool_definition.side_effect = lambda name: {"name": name}
    return env


def test_run_registers_tools_and_prompts(near_env):
    agent.run(near_env)

    near_env.completions_and_run_tools.assert_called_once()
    (prompt_list,), kwargs = near_env.completions_and_run_tools.call_args
    assert prompt_list[0] == {"role": "system", "content": agent.SYSTEM_PROMPT}
    assert prompt_list[1]["content"] == "what is the LOLE?"
    assert {"name": "risk"} in kwargs["tools"]
    near_env.add_reply.assert_not_called()


def test_run_reports_unknown_scenario(monkeypatch, near_env):
    monkeypatch.setenv("ADEQUACY_SCENARIO", "atlantis")

    agent.run(near_env)

    near_env.completions_and_run_tools.assert_not_called()
    msg = near_env.add_reply.call_args[0][0]
    assert "Failed to load the scenario" in msg
    assert "atlantis" in msg


def test_run_surfaces_completion_errors(near_env):
    near_env.completions_and_run_tools.side_effect = RuntimeError("model offline")

    agent.run(near_env)

    msg = near_env.add_reply.call_args[0][0]
    assert "model offline" in msg
