import os
from pathlib import Path
from typing import Dict, List, TypedDict

from errors import ConfigurationError

FIXTURES_DIR = Path(__file__).resolve().parent / "fixtures"


class ScenarioMeta(TypedDict):
    name: str
    file: str
    description: str
    aliases: List[str]


# Bundled scenarios, addressed by alias
SCENARIO_REGISTRY: Dict[str, ScenarioMeta] = {
    "hand": {
        "name": "hand",
        "file": "hand.json",
        "description": "Three-period single-trace system with closed-form answers",
        "aliases": ["hand", "toy"],
    },
    "economic": {
        "name": "economic",
        "file": "economic.json",
        "description": "Storage-free 40-unit system for the CONE/VOLL pivot",
        "aliases": ["economic", "econ"],
    },
    "gb_shaped": {
        "name": "gb_shaped",
        "file": "gb_shaped.json",
        "description": "Storage-heavy synthetic GB winter: 230 units, 120 stores, 30 firm bids",
        "aliases": ["gb_shaped", "gb", "storage-heavy"],
    },
}


def get_scenario_metadata(key: str) -> ScenarioMeta:
    """
    Resolve a bundled scenario by any of its aliases.
    """

    normalized_key = key.strip().lower()

    for metadata in SCENARIO_REGISTRY.values():
        aliases = [a.lower() for a in metadata.get("aliases", [])]
        if normalized_key in aliases:
            return metadata

    known = ", ".join(sorted(SCENARIO_REGISTRY))
    raise ConfigurationError(f"Unknown scenario '{key}' (bundled: {known})")


def resolve_scenario_path(key_or_path: str) -> Path:
    """
    A path to an existing file wins; otherwise the value is a bundled alias.
    """

    candidate = Path(key_or_path).expanduser()
    if candidate.is_file():
        return candidate
    return FIXTURES_DIR / get_scenario_metadata(key_or_path)["file"]


def default_scenario() -> str:
    """Scenario named by ADEQUACY_SCENARIO, falling back to the hand fixture."""
    return os.getenv("ADEQUACY_SCENARIO", "hand").strip() or "hand"
