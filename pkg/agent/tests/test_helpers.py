import json
import math

import numpy as np
import pandas as pd
import pytest

import helpers
from errors import ConfigurationError


# ─────────────────────────── fixtures ─────────────────────────────
@pytest.fixture(autouse=True)
def clear_thread_env(monkeypatch):
    """Keep the host's ADEQUACY_THREADS out of the way."""
    monkeypatch.delenv("ADEQUACY_THREADS", raising=False)


# ─────────────────────────── resolve_threads ──────────────────────
def test_resolve_threads_explicit_wins(monkeypatch):
    monkeypatch.setenv("ADEQUACY_THREADS", "3")
    assert helpers.resolve_threads(2) == 2


def test_resolve_threads_from_env(monkeypatch):
    monkeypatch.setenv("ADEQUACY_THREADS", "3")
    assert helpers.resolve_threads() == 3


def test_resolve_threads_defaults_to_cores(monkeypatch):
    monkeypatch.setattr(helpers.os, "cpu_count", lambda: 6)
    assert helpers.resolve_threads() == 6


def test_resolve_threads_rejects_bad_values(monkeypatch):
    with pytest.raises(ConfigurationError):
        helpers.resolve_threads(0)

    monkeypatch.setenv("ADEQUACY_THREADS", "many")
    with pytest.raises(ConfigurationError) as excinfo:
        helpers.resolve_threads()
    assert "ADEQUACY_THREADS" in str(excinfo.value)


# ─────────────────────────── worker pool ──────────────────────────
def test_ensure_executor_reused_until_size_changes():
    pool_a = helpers.ensure_executor(2)
    pool_b = helpers.ensure_executor(2)
    pool_c = helpers.ensure_executor(3)

    assert pool_a is pool_b
    assert pool_c is not pool_a


def test_parallel_map_keeps_input_order():
    items = list(range(50))
    assert helpers.parallel_map(lambda x: x * x, items, threads=4) == [x * x for x in items]
    assert helpers.parallel_map(lambda x: x + 1, items, threads=1) == [x + 1 for x in items]


def test_chunk_indices():
    chunks = helpers.chunk_indices(10, 3)
    assert [c.tolist() for c in chunks] == [[0, 1, 2, 3], [4, 5, 6], [7, 8, 9]]
    assert len(helpers.chunk_indices(2, 8)) == 2
    assert helpers.chunk_indices(0, 4) == []


# ─────────────────────────── random substreams ────────────────────
def test_substream_is_deterministic():
    a = helpers.substream(42, helpers.BACKGROUND_STREAM, 3, 7).random(5)
    b = helpers.substream(42, helpers.BACKGROUND_STREAM, 3, 7).random(5)
    np.testing.assert_array_equal(a, b)


def test_substream_cells_differ():
    base = helpers.substream(42, helpers.BACKGROUND_STREAM, 3, 7).random(5)
    for other in (
        helpers.substream(43, helpers.BACKGROUND_STREAM, 3, 7),
        helpers.substream(42, helpers.RESOURCE_STREAM, 3, 7),
        helpers.substream(42, helpers.BACKGROUND_STREAM, 4, 7),
        helpers.substream(42, helpers.BACKGROUND_STREAM, 3, 8),
    ):
        assert not np.array_equal(base, other.random(5))


def test_resource_key_is_stable():
    assert helpers.resource_key("store_a") == helpers.resource_key("store_a")
    assert helpers.resource_key("store_a") != helpers.resource_key("store_b")
    assert 0 <= helpers.resource_key("x") < 2**63


# ─────────────────────────── output formatting ────────────────────
def test_round_sig():
    assert helpers.round_sig(123456789.0, 6) == 123457000.0
    assert helpers.round_sig(0.000123456789, 3) == 0.000123
    assert helpers.round_sig(0.0) == 0.0
    assert math.isinf(helpers.round_sig(math.inf))


def test_to_jsonable_converts_numpy_and_sets():
    out = helpers.to_jsonable(
        {"a": np.float64(1.5), "b": np.int64(2), "c": np.array([1, 2]), "d": frozenset({"z", "y"}), "e": np.bool_(True)}
    )
    assert out == {"a": 1.5, "b": 2, "c": [1, 2], "d": ["y", "z"], "e": True}
    assert type(out["b"]) is int
    assert type(out["e"]) is bool


def test_write_json_is_sorted_and_rounded(tmp_path):
    path = helpers.write_json(tmp_path / "nested" / "x.json", {"b": 1 / 3, "a": [1, 2]})
    text = path.read_text(encoding="utf-8")

    assert text.index('"a"') < text.index('"b"')
    assert text.endswith("\n")
    assert json.loads(text)["b"] == helpers.round_sig(1 / 3)


def test_write_csv_keeps_column_order(tmp_path):
    path = helpers.write_csv(tmp_path / "x.csv", [{"b": 1.0, "a": 2.0}], columns=["a", "b"])
    frame = pd.read_csv(path)

    assert list(frame.columns) == ["a", "b"]
    assert frame.iloc[0]["a"] == 2.0


def test_format_helpers():
    assert helpers.format_mw(1234.56) == "1,234.6 MW"
    assert helpers.format_number(2.0 / 3.0, 3) == "0.667"
