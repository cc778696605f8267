import hashlib
import json
from datetime import datetime, timedelta, timezone

import pytest

from wattplan.cli import main
from wattplan.datafiles import data_path
from wattplan.telemetry import synth_series, write_series
from wattplan.timestamps import format_timestamp

T0 = datetime(2022, 1, 1, tzinfo=timezone.utc)


def _run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def _run_json(capsys, *argv):
    code, out, err = _run(capsys, *argv, "--format", "json")
    assert code == 0, err
    return json.loads(out)


@pytest.fixture
def step_csv(tmp_path):
    series = synth_series([(500.0, 500, 3220.0, 20.0), (500.0, 500, 3010.0, 20.0)], seed=5)
    path = tmp_path / "step.csv"
    write_series(series, path)
    return path


def test_power_table_output(capsys):
    code, out, err = _run(capsys, "power", "builtin:archer2_system.json", "-u", "1.0")
    assert code == 0
    assert "total" in out
    assert "3523.6" in out
    assert "compute_nodes" in out


def test_power_json_within_band(capsys):
    doc = _run_json(capsys, "power", "builtin:archer2_system.json", "-u", "1.0")
    assert abs(doc["total_kw"] - 3500.0) / 3500.0 < 0.02
    assert doc["per_component"]["compute_nodes"] == pytest.approx(2988.6)


def test_power_idle_json_within_band(capsys):
    doc = _run_json(capsys, "power", "builtin:archer2_system.json", "-u", "0.0")
    assert abs(doc["total_kw"] - 1800.0) / 1800.0 < 0.02


def test_power_repeat_invocations_byte_identical(capsys):
    _, first, _ = _run(capsys, "power", "builtin:archer2_system.json", "-u", "0.92")
    _, second, _ = _run(capsys, "power", "builtin:archer2_system.json", "-u", "0.92")
    assert first == second


def test_power_rejects_bad_utilization(capsys):
    code, out, err = _run(capsys, "power", "builtin:archer2_system.json", "-u", "1.5")
    assert code == 1
    assert "1.5" in err


def test_power_dynamic_factor(capsys):
    doc = _run_json(
        capsys,
        "power",
        "builtin:archer2_system.json",
        "-u",
        "1.0",
        "--factor",
        "compute_nodes=0.5:dynamic",
    )
    assert doc["per_component"]["compute_nodes"] == pytest.approx(2168.2)


def test_power_bad_factor_syntax(capsys):
    code, _, err = _run(capsys, "power", "builtin:archer2_system.json", "-u", "1.0", "--factor", "x")
    assert code == 1


def test_power_missing_file_exits_2(capsys, tmp_path):
    code, _, err = _run(capsys, "power", str(tmp_path / "nope.json"), "-u", "1.0")
    assert code == 2


def test_policy_default_threshold_reverts_three(capsys):
    doc = _run_json(capsys, "policy", "builtin:table4_freq.csv", "--threshold", "0.10")
    reverted = [d["app_name"] for d in doc["decisions"] if d["reverted"]]
    assert sorted(reverted) == ["GROMACS 1400k", "LAMMPS Ethanol", "Nektar++ TGV 128 DoF"]
    assert doc["fleet_power_ratio"] == pytest.approx(0.8935857142857143)


def test_policy_threshold_one_no_reverts(capsys):
    code, out, _ = _run(capsys, "policy", "builtin:table4_freq.csv", "--threshold", "1.0")
    assert code == 0
    assert "yes" not in out.split("fleet_power_ratio")[0]
    assert "0.7628" in out


def test_policy_custom_weights(capsys, tmp_path):
    weights = tmp_path / "weights.json"
    weights.write_text(json.dumps({"LAMMPS Ethanol": 1.0}))
    doc = _run_json(
        capsys, "policy", "builtin:table4_freq.csv", "--threshold", "0.10",
        "--weights", str(weights),
    )
    assert doc["fleet_power_ratio"] == 1.0
    assert len(doc["decisions"]) == 1


def test_policy_on_bios_table_is_domain_error(capsys):
    code, _, err = _run(capsys, "policy", "builtin:table3_bios.csv", "--threshold", "0.10")
    assert code == 1
    assert "bios_determinism" in err


def test_telemetry_change_time(capsys, step_csv):
    change = format_timestamp(T0 + timedelta(hours=500))
    code, out, _ = _run(capsys, "telemetry", str(step_csv), "--change-time", change)
    assert code == 0
    assert "-6.5%" in out
    doc = _run_json(capsys, "telemetry", str(step_csv), "--change-time", change)
    assert doc["pct_change"] == pytest.approx(-0.0652, abs=0.002)
    assert doc["delta_kw"] == pytest.approx(-210.0, abs=5.0)


def test_telemetry_detect(capsys, step_csv):
    doc = _run_json(capsys, "telemetry", str(step_csv), "--detect")
    assert doc["change_time"] == format_timestamp(T0 + timedelta(hours=500))
    assert 0.0 <= doc["score"] <= 1.0


def test_telemetry_empty_file_exits_2(capsys, tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    code, _, err = _run(capsys, "telemetry", str(empty), "--detect")
    assert code == 2


def test_emissions_high_intensity(capsys):
    doc = _run_json(capsys, "emissions", "--intensity", "150", "--power-kw", "100", "--hours", "1")
    assert doc["scenario"] == "scope2_dominated"
    assert doc["objective"] == "maximize_energy_efficiency"


def test_emissions_zero_power(capsys):
    doc = _run_json(capsys, "emissions", "--intensity", "0", "--power-kw", "0", "--hours", "24")
    assert doc["scope2_kg"] == 0.0


def test_emissions_day_at_reduced_power(capsys):
    code, out, _ = _run(
        capsys, "emissions", "--intensity", "50", "--power-kw", "2530", "--hours", "24"
    )
    assert code == 0
    assert "3036.0" in out
    assert "balanced" in out


def test_emissions_with_profile_csv(capsys, tmp_path):
    profile = tmp_path / "intensity.csv"
    profile.write_text(
        "timestamp,intensity_g_per_kwh\n"
        "2022-01-01T00:00:00Z,20\n"
        "2022-01-01T12:00:00Z,40\n"
    )
    doc = _run_json(
        capsys, "emissions", "--profile", str(profile), "--power-kw", "1000", "--hours", "24"
    )
    assert doc["mean_intensity_g_per_kwh"] == pytest.approx(30.0)
    assert doc["scenario"] == "balanced"
    assert doc["scope2_kg"] == pytest.approx(24000 * 30.0 / 1000.0)


def test_emissions_with_embodied(capsys, tmp_path):
    embodied = tmp_path / "embodied.json"
    embodied.write_text(json.dumps({"total_kgco2e": 1_000_000.0, "service_lifetime_hours": 50_000.0}))
    doc = _run_json(
        capsys, "emissions", "--intensity", "50", "--power-kw", "100", "--hours", "5000",
        "--embodied", str(embodied),
    )
    assert doc["scope3_kg"] == pytest.approx(100_000.0)
    assert not doc["scope3_unset"]


def test_simulate_baseline(capsys):
    doc = _run_json(capsys, "simulate", "builtin:baseline_scenario.json")
    assert 3000.0 <= doc["mean_power_kw"] <= 3400.0
    assert doc["emissions"]["scope3_unset"] is True


def test_simulate_sweep_ordered_monotone(capsys):
    doc = _run_json(
        capsys, "simulate", "builtin:stacked_scenario.json",
        "--sweep", "0.0,0.05,0.10,0.15,0.30,1.0",
    )
    rows = doc["sweep"]
    assert len(rows) == 6
    thresholds = [row["threshold"] for row in rows]
    assert thresholds == sorted(thresholds)
    energies = [row["energy_kwh"] for row in rows]
    assert all(a >= b - 1e-9 for a, b in zip(energies, energies[1:]))


def test_simulate_table_output(capsys):
    code, out, _ = _run(capsys, "simulate", "builtin:stacked_scenario.json")
    assert code == 0
    assert "mean_power_kw" in out
    assert "reverted_apps" in out and "3/7" in out


def test_synth_writes_deterministic_csv(capsys, tmp_path):
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    code1, _, _ = _run(capsys, "synth", "builtin:recipe_bios_step.json", "-o", str(out1))
    code2, _, _ = _run(capsys, "synth", "builtin:recipe_bios_step.json", "-o", str(out2))
    assert code1 == 0 and code2 == 0
    assert out1.read_bytes() == out2.read_bytes()
    lines = out1.read_text().splitlines()
    assert lines[0] == "timestamp,power_kw"
    assert len(lines) == 1001


def test_synth_seed_override_changes_output(capsys, tmp_path):
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    _run(capsys, "synth", "builtin:recipe_bios_step.json", "-o", str(out1))
    _run(capsys, "synth", "builtin:recipe_bios_step.json", "-o", str(out2), "--seed", "7")
    assert out1.read_bytes() != out2.read_bytes()


def test_synth_then_telemetry_pipeline(capsys, tmp_path):
    fixture = tmp_path / "fixture.csv"
    _run(capsys, "synth", "builtin:recipe_freq_step.json", "-o", str(fixture))
    change = format_timestamp(datetime(2022, 11, 1, tzinfo=timezone.utc) + timedelta(hours=500))
    doc = _run_json(capsys, "telemetry", str(fixture), "--change-time", change)
    assert doc["pct_change"] == pytest.approx(-0.159, abs=0.002)


def test_json_outputs_roundtrip_through_json(capsys):
    invocations = [
        ("power", "builtin:archer2_system.json", "-u", "0.92"),
        ("policy", "builtin:table4_freq.csv", "--threshold", "0.10"),
        ("simulate", "builtin:baseline_scenario.json"),
        ("emissions", "--intensity", "65", "--power-kw", "500", "--hours", "2"),
    ]
    for argv in invocations:
        code, out, _ = _run(capsys, *argv, "--format", "json")
        assert code == 0
        doc = json.loads(out)
        assert json.dumps(doc, indent=2) == out.rstrip("\n")


def test_inputs_are_never_mutated(capsys):
    targets = [
        data_path("archer2_system.json"),
        data_path("table4_freq.csv"),
        data_path("baseline_scenario.json"),
    ]
    before = [hashlib.sha256(p.read_bytes()).hexdigest() for p in targets]
    _run(capsys, "power", "builtin:archer2_system.json", "-u", "0.5")
    _run(capsys, "policy", "builtin:table4_freq.csv", "--threshold", "0.2")
    _run(capsys, "simulate", "builtin:baseline_scenario.json")
    after = [hashlib.sha256(p.read_bytes()).hexdigest() for p in targets]
    assert before == after
