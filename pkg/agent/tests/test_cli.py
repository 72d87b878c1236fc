# tests/test_cli.py
import io
import json

import numpy as np
import pytest

import cli
import risk_metrics
import scenarios


def _console():
    return cli.ConsoleEnv(stream=io.StringIO())


def _write_small_system(root, **overrides):
    """Five 20 MW units against a daily demand shape, three days, forty traces."""
    periods = np.arange(72)
    demand = 62 + 12 * np.sin(2 * np.pi * (periods % 24) / 24)
    (root / "demand.csv").write_text(
        "period,mwh\n" + "".join(f"{p},{d:.3f}\n" for p, d in zip(periods, demand)), encoding="utf-8"
    )
    doc = {
        "name": "small",
        "grid": {"periods_per_day": 24, "num_days": 3},
        "fleet": [{"id": f"u{i}", "capacity_mw": 20, "mttf_h": 50, "mttr_h": 10} for i in range(5)],
        "demand": "demand.csv",
        "num_traces": 40,
        "seed": 5,
        "bids": [
            {"id": "s1", "type": "store", "power_mw": 10, "energy_mwh": 20, "min_total_price": 30},
            {"id": "f1", "type": "firm", "power_mw": 20, "min_total_price": 200},
        ],
        "standard": {"metric": "eeu", "k": 1.0},
    }
    doc.update(overrides)
    path = root / "small.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


@pytest.fixture(autouse=True)
def fresh_caches():
    """Each run builds its own background and risk cache."""
    scenarios._BACKGROUNDS.clear()
    risk_metrics.clear_cache()
    yield
    scenarios._BACKGROUNDS.clear()
    risk_metrics.clear_cache()


# ─────────────────────────── exit codes ─────────────────────────
def test_risk_on_hand_exits_zero(tmp_path):
    console = _console()

    status = cli.main(["risk", "--scenario", "hand", "--out", str(tmp_path)], env=console)

    assert status == 0
    assert "LOLE" in console.replies[0]
    assert json.loads((tmp_path / "risk.json").read_text())["eeu_mwh"] == pytest.approx(30)


def test_unknown_scenario_exits_with_configuration_status(tmp_path):
    console = _console()

    status = cli.main(["risk", "--scenario", "atlantis", "--out", str(tmp_path)], env=console)

    assert status == 2
    error = json.loads((tmp_path / "error.json").read_text())
    assert error["code"] == "configuration"
    assert console.replies[0].startswith("❌")


def test_infeasible_clearing_exits_three(tmp_path):
    """Only the store is offered and EEU must fall to 0.5 MWh."""

    path = _write_small_system(tmp_path, bids=[
        {"id": "s1", "type": "store", "power_mw": 1, "energy_mwh": 1, "min_total_price": 3},
    ], standard={"metric": "eeu", "k": 0.5})

    status = cli.main(["clear", "--scenario", str(path), "--naive", "--out", str(tmp_path / "out"), "--threads", "1"], env=_console())

    assert status == 3
    assert json.loads((tmp_path / "out" / "error.json").read_text())["code"] == "infeasible"


def test_naive_flag_selects_mode(tmp_path):
    status = cli.main(["clear", "--scenario", "hand", "--naive", "--out", str(tmp_path)], env=_console())

    assert status == 0
    outcome = json.loads((tmp_path / "outcome.json").read_text())
    assert outcome["mode"] == "naive"
    assert outcome["accepted"] == ["store_a", "store_b"]


def test_seed_override_reaches_artifacts(tmp_path):
    cli.main(["risk", "--scenario", "hand", "--seed", "99", "--out", str(tmp_path)], env=_console())
    assert json.loads((tmp_path / "risk.json").read_text())["seed"] == 99


# ─────────────────────────── determinism ────────────────────────
def test_artifacts_identical_across_thread_counts(tmp_path):
    path = _write_small_system(tmp_path)
    outputs = []
    for threads in ("1", "4"):
        scenarios._BACKGROUNDS.clear()
        risk_metrics.clear_cache()
        out = tmp_path / f"t{threads}"
        assert cli.main(["risk", "--scenario", str(path), "--threads", threads, "--out", str(out)], env=_console()) == 0
        outputs.append(((out / "risk.json").read_bytes(), (out / "risk_traces.csv").read_bytes()))

    assert outputs[0] == outputs[1]


def test_same_seed_same_bytes(tmp_path):
    path = _write_small_system(tmp_path)
    first, second = tmp_path / "a", tmp_path / "b"

    cli.main(["risk", "--scenario", str(path), "--out", str(first), "--threads", "2"], env=_console())
    scenarios._BACKGROUNDS.clear()
    risk_metrics.clear_cache()
    cli.main(["risk", "--scenario", str(path), "--out", str(second), "--threads", "2"], env=_console())

    assert (first / "risk.json").read_bytes() == (second / "risk.json").read_bytes()


# ─────────────────────────── parser ─────────────────────────────
def test_parser_defaults():
    args = cli.build_parser().parse_args(["diagnose"])
    assert args.kind == "continuity"
    assert args.tol_mw == pytest.approx(1.0)

    args = cli.build_parser().parse_args(["clear", "--lumpy"])
    assert args.mode == "fixedpoint"
    assert args.lumpy is True


def test_parser_rejects_unknown_metric():
    with pytest.raises(SystemExit):
        cli.build_parser().parse_args(["efc", "--metric", "lolp"])
