import pytest
import scenario_registry

from errors import ConfigurationError


@pytest.fixture(autouse=True)
def clear_scenario_env(monkeypatch):
    monkeypatch.delenv("ADEQUACY_SCENARIO", raising=False)


def test_get_scenario_metadata_by_key():
    meta = scenario_registry.get_scenario_metadata("hand")
    assert meta["name"] == "hand"
    assert meta["file"] == "hand.json"


def test_get_scenario_metadata_by_alias():
    assert scenario_registry.get_scenario_metadata("toy")["name"] == "hand"
    assert scenario_registry.get_scenario_metadata("storage-heavy")["name"] == "gb_shaped"
    assert scenario_registry.get_scenario_metadata("econ")["name"] == "economic"


def test_get_scenario_metadata_case_insensitive():
    assert scenario_registry.get_scenario_metadata("  GB ")["name"] == "gb_shaped"


def test_get_scenario_metadata_unknown():
    with pytest.raises(ConfigurationError) as excinfo:
        scenario_registry.get_scenario_metadata("atlantis")
    assert "Unknown scenario" in str(excinfo.value)
    assert "hand" in str(excinfo.value)


# ───────────────── resolve_scenario_path tests ─────────────────
def test_every_bundled_scenario_file_exists():
    for key in scenario_registry.SCENARIO_REGISTRY:
        assert scenario_registry.resolve_scenario_path(key).is_file()


def test_existing_path_wins(tmp_path):
    path = tmp_path / "hand"
    path.write_text("{}", encoding="utf-8")
    assert scenario_registry.resolve_scenario_path(str(path)) == path


def test_unknown_path_falls_back_to_alias_lookup(tmp_path):
    with pytest.raises(ConfigurationError):
        scenario_registry.resolve_scenario_path(str(tmp_path / "missing.json"))


# ───────────────── default_scenario tests ─────────────────
def test_default_scenario_is_hand():
    assert scenario_registry.default_scenario() == "hand"


def test_default_scenario_from_env(monkeypatch):
    monkeypatch.setenv("ADEQUACY_SCENARIO", "gb")
    assert scenario_registry.default_scenario() == "gb"


def test_blank_env_falls_back(monkeypatch):
    monkeypatch.setenv("ADEQUACY_SCENARIO", "   ")
    assert scenario_registry.default_scenario() == "hand"
