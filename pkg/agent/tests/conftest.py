import os
import sys
import pytest
from unittest.mock import MagicMock

# Ensure project root and src are importable for tests
ROOT_DIR = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
sys.path.insert(0, ROOT_DIR)
sys.path.insert(0, os.path.join(ROOT_DIR, "src"))

from scenario_registry import resolve_scenario_path
from scenarios import load_scenario
from tools.context import RunContext, set_context

@pytest.fixture
def hand_scenario():
    """The bundled three-period fixture with closed-form answers."""
    return load_scenario(resolve_scenario_path("hand"))


@pytest.fixture
def mock_setup(hand_scenario, tmp_path):
    """Provide a mocked env and a run context over the hand fixture, registered in tools.context."""
    env = MagicMock()
    run = RunContext(scenario=hand_scenario, out_dir=tmp_path / "out", threads=1)
    set_context(env=env, run=run)
    return (env, run)


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-size fixture runs (deselect with -m 'not slow')")
