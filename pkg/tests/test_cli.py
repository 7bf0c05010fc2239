import json
import subprocess
import sys

import pytest

from chanforge.cli import DEMOS, ScenarioError, emit_table, main, run_scenario


def write(tmp_path, scenario, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(scenario) if not isinstance(scenario, str) else scenario)
    return path


def test_complexity_scenario(tmp_path, capsys):
    path = write(tmp_path, {"command": "complexity", "family": [{"kind": "bit_flip", "p": 0.3}, {"kind": "phase_flip", "p": 0.2}]})
    out = tmp_path / "report.json"
    assert main(["run", str(path), "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["results"]["complexity"]["value"] == 3
    assert report["seed"] == 0
    assert report["table"]["columns"] == ["name", "chi"]
    text = capsys.readouterr().out
    assert "bit_flip(p=0.3)" in text and "family" in text


def test_bitflip_scenario():
    report = run_scenario({"command": "bitflip", "mu": 0.5, "p": 0.3})
    assert report["results"]["success_prob"]["value"] == pytest.approx(0.5, abs=1e-12)
    assert report["results"]["post_success_fidelity"]["value"] == pytest.approx(1.0, abs=1e-10)
    assert report["passed"]


def test_qt_scenario_identity():
    report = run_scenario({"command": "qt", "N": 2, "schmidt": [0.7071067811865476, 0.7071067811865476]})
    assert report["results"]["complexity_after"]["value"] == 0
    assert report["passed"]


def test_qt_sweep_columns():
    report = run_scenario({"command": "qt", "mu_grid": [0.1, 0.5]})
    assert report["table"]["columns"] == ["mu", "p_mu", "fidelity"]
    mu, p, f = report["table"]["rows"][1]
    assert p == pytest.approx(0.5 - 0.5 * (0.75**0.5)) and f == pytest.approx(1 - p)


def test_failed_expectation_exits_one(tmp_path):
    path = write(tmp_path, {"command": "complexity", "channel": {"kind": "depolarizing", "p": 0.2}, "expect": {"complexity": 3}})
    assert main(["run", str(path)]) == 1


def test_expectation_with_tolerance():
    report = run_scenario({"command": "bitflip", "mu": 0.3, "p": 0.1, "expect": {"success_prob": {"value": 0.18, "tol": 1e-12}}})
    assert report["passed"]
    report = run_scenario({"command": "bitflip", "mu": 0.3, "p": 0.1, "expect": {"missing": 1}})
    assert not report["passed"]


@pytest.mark.parametrize(
    "content",
    [
        "{not json",
        json.dumps([1, 2]),
        json.dumps({"command": "teleport"}),
        json.dumps({"command": "bitflip", "mu": 0.5}),
        json.dumps({"command": "complexity", "family": [{"kind": "warp"}]}),
        json.dumps({"command": "bitflip", "mu": 0.9, "p": 0.1}),
        json.dumps({"command": "fidelity-opt", "channel": {"kind": "identity"}, "parametrization": "nope"}),
    ],
)
def test_invalid_scenarios_exit_two(tmp_path, content):
    assert main(["run", str(write(tmp_path, content))]) == 2


def test_missing_file_exits_two(tmp_path):
    assert main(["run", str(tmp_path / "absent.json")]) == 2


def test_seed_override_and_echo(tmp_path):
    path = write(tmp_path, {"command": "theorem1", "N": 2, "trials": 2})
    out = tmp_path / "r.json"
    assert main(["run", str(path), "--seed", "5", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["seed"] == 5


def test_eps_rank_override(tmp_path):
    path = write(tmp_path, {"command": "complexity", "channel": {"kind": "bit_flip", "p": 1e-12}})
    out = tmp_path / "r.json"
    main(["run", str(path), "--out", str(out)])
    assert json.loads(out.read_text())["results"]["complexity"]["value"] == 0
    main(["run", str(path), "--eps-rank", "1e-14", "--out", str(out)])
    report = json.loads(out.read_text())
    assert report["results"]["complexity"]["value"] == 2
    assert report["tolerances"]["eps_rank"] == 1e-14


def test_report_roundtrip_and_determinism(tmp_path):
    path = write(tmp_path, {"command": "qt", "N": 3, "schmidt": [0.8, 0.48, 0.36], "seed": 11})
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["run", str(path), "--out", str(a)])
    main(["run", str(path), "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()
    in_memory = run_scenario(json.loads(path.read_text()))
    assert json.loads(a.read_text()) == json.loads(json.dumps(in_memory))


def test_emit_table_formats():
    report = {"table": {"columns": ["x", "y"], "rows": [[1 / 3, True]]}, "results": {}}
    lines = emit_table(report).splitlines()
    assert lines[0].split() == ["x", "y"]
    assert lines[2].split() == ["0.333333333333", "true"]


def test_emit_table_empty_results_header_only():
    lines = emit_table({"results": {}}).splitlines()
    assert lines[0].split() == ["name", "value"]
    assert len(lines) == 2


def test_kraus_min_with_explicit_set():
    eye = [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]
    report = run_scenario({"command": "kraus-min", "kraus": [eye, eye]})
    assert report["results"]["reduced_count"]["value"] == 1
    assert report["passed"]


def test_complexity_with_resources():
    report = run_scenario(
        {"command": "complexity", "channel": {"kind": "depolarizing", "p": 0.3}, "resources": {"preset": "qt"}}
    )
    assert report["results"]["complexity"]["value"] == 4
    assert report["results"]["complexity_after"]["value"] == 0
    assert report["results"]["trace_character"]["value"] == "preserving"


def test_fidelity_opt_receiver_rotation():
    u = [[[0.9553364891, 0], [-0.2955202067, 0]], [[0.2955202067, 0], [0.9553364891, 0]]]
    report = run_scenario(
        {"command": "fidelity-opt", "channel": {"kind": "kraus", "matrices": [u]}, "parametrization": "receiver-rotation", "budget": 300}
    )
    assert report["results"]["best_fidelity"]["value"] > 1 - 1e-6


def test_run_scenario_validation():
    with pytest.raises(ScenarioError):
        run_scenario({"command": "qecc-demo"})


@pytest.mark.parametrize("name", sorted(DEMOS))
def test_demos_pass(name, capsys):
    assert main(["demo", name]) == 0
    assert f"# {name}" in capsys.readouterr().out


def test_demo_list(capsys):
    assert main(["demo", "--list"]) == 0
    assert set(capsys.readouterr().out.split()) == set(DEMOS)


def test_module_entry_point(tmp_path):
    path = write(tmp_path, {"command": "bitflip", "mu": 0.5, "p": 0.3})
    proc = subprocess.run([sys.executable, "-m", "chanforge", "run", str(path)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "success_prob" in proc.stdout
