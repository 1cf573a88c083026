"""End-to-end CLI behavior: exit codes, determinism, config handling."""
import json

import numpy as np
import pytest

from proctensor.cli import main
from proctensor.instruments import instrument_by_name, instrument_to_json
from proctensor.linalg import mat_from_json, mat_to_json
from proctensor.states import lambda_state, state_by_name


def run_cli(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_states_emit(capsys):
    code, out, _ = run_cli(capsys, ["states", "emit", "--name", "lambda"])
    assert code == 0
    obj = json.loads(out)
    assert obj["dims"] == [2, 2, 2]
    assert np.array_equal(mat_from_json(obj["matrix"]), lambda_state())
    code, _, err = run_cli(capsys, ["states", "emit", "--name", "phi"])
    assert code == 2
    assert "error" in err


def test_usage_error_exits_two():
    with pytest.raises(SystemExit) as exc:
        main(["not-a-command"])
    assert exc.value.code == 2


def test_process_build_and_check_roundtrip(tmp_path, capsys):
    proc = tmp_path / "proc.json"
    code, _, _ = run_cli(capsys, ["process", "build", "--state", "lambda",
                                  "--out", str(proc)])
    assert code == 0
    code, out, _ = run_cli(capsys, ["process", "check", "--process",
                                    str(proc)])
    assert code == 0
    assert json.loads(out)["ok"]
    # a tampered matrix no longer factors as state x identity outputs
    obj = json.loads(proc.read_text())
    obj["matrix"]["re"][1] += 0.2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(obj))
    code, _, err = run_cli(capsys, ["process", "check", "--process",
                                    str(bad)])
    assert code == 2
    assert "common-cause" in err


def test_instrument_commands(tmp_path, capsys):
    code, out, _ = run_cli(capsys, ["instrument", "validate", "--name",
                                    "tetra"])
    assert code == 0
    assert json.loads(out)["ok"]
    code, out, _ = run_cli(capsys, ["instrument", "dual", "--name", "theta"])
    assert code == 0
    assert json.loads(out)["duality_residual"] < 1e-10
    code, _, _ = run_cli(capsys, ["instrument", "show", "--name", "xi"])
    assert code == 0
    code, _, err = run_cli(capsys, ["instrument", "show", "--name", "huh"])
    assert code == 2
    # malformed file: elements that do not sum to identity
    bad = tmp_path / "inst.json"
    bad.write_text(json.dumps({"dim": 2, "name": "bad", "elements": [
        mat_to_json(np.eye(2) / 2)]}))
    code, _, err = run_cli(capsys, ["instrument", "validate", "--name",
                                    str(bad)])
    assert code == 2


def test_memory_commands(capsys):
    code, out, _ = run_cli(capsys, ["memory", "strength", "--process",
                                    "omega", "--instrument", "xi"])
    assert code == 0
    obj = json.loads(out)
    assert obj["markov_order_one"] is True
    assert obj["report"]["max_event"] < 1e-10
    code, out, _ = run_cli(capsys, ["memory", "survey", "--samples", "2000",
                                    "--seed", "0", "--threads", "2"])
    assert code == 0
    frac = json.loads(out)["fraction_below_cutoff"]["value"]
    assert 0.0 < frac < 1.0


def test_recover_build_and_scan(tmp_path, capsys):
    code, out, _ = run_cli(capsys, ["recover", "build", "--process",
                                    "lambda", "--instrument", "theta"])
    assert code == 0
    obj = json.loads(out)
    assert obj["born_preservation_max"] < 1e-12
    assert np.isclose(obj["fidelity_to_true"], 0.9980427365968065,
                      atol=1e-10)
    csv_path = tmp_path / "scan.csv"
    code, out, _ = run_cli(capsys, ["recover", "scan", "--process", "lambda",
                                    "--instrument", "theta", "--out",
                                    str(csv_path)])
    assert code == 0
    summary = json.loads(out)
    assert np.isclose(summary["max_abs_diff"], 0.007765718989647286,
                      atol=1e-12)
    lines = csv_path.read_text().strip().splitlines()
    assert len(lines) == 1 + summary["points"]
    code, out, _ = run_cli(capsys, ["recover", "scan", "--process", "lambda",
                                    "--instrument", "theta", "--noise",
                                    "0.05", "--out", str(csv_path)])
    assert code == 0
    # full scan at the default grid is deliberately too large
    code, _, err = run_cli(capsys, ["recover", "scan", "--process", "lambda",
                                    "--instrument", "theta", "--full",
                                    "--out", str(csv_path)])
    assert code == 2


def test_walk_verify_exit_codes(tmp_path, capsys):
    code, out, _ = run_cli(capsys, ["walk", "verify", "--circuit", "theta"])
    assert code == 0
    assert json.loads(out)["match"] == "exact"
    code, out, _ = run_cli(capsys, ["walk", "verify", "--circuit", "tetra"])
    assert code == 0
    assert json.loads(out)["match"] == "rotated_frame"
    # a target with two swapped elements matches in no frame
    tetra = instrument_by_name("tetra")
    obj = instrument_to_json(tetra)
    obj["elements"][0], obj["elements"][1] = (obj["elements"][1],
                                              obj["elements"][0])
    target = tmp_path / "target.json"
    target.write_text(json.dumps(obj))
    code, out, _ = run_cli(capsys, ["walk", "verify", "--circuit", "tetra",
                                    "--target", str(target)])
    assert code == 3
    assert json.loads(out)["match"] == "none"
    code, _, _ = run_cli(capsys, ["walk", "verify", "--circuit", "mystery"])
    assert code == 2


def test_tomo_chain(tmp_path, capsys):
    counts = tmp_path / "counts.csv"
    code, out, _ = run_cli(capsys, ["tomo", "simulate", "--state", "lambda",
                                    "--shots", "27000", "--seed", "5",
                                    "--out", str(counts)])
    assert code == 0
    assert json.loads(out)["total_shots"] == 27000
    rho_file = tmp_path / "rho.json"
    code, out, _ = run_cli(capsys, ["tomo", "reconstruct", "--counts",
                                    str(counts), "--state", "lambda",
                                    "--matrix-out", str(rho_file)])
    assert code == 0
    obj = json.loads(out)
    assert obj["fidelity"]["value"] > 0.98
    assert "non_markovianity_reconstructed" in obj
    est = mat_from_json(json.loads(rho_file.read_text())["matrix"])
    assert np.isclose(np.trace(est).real, 1.0, atol=1e-10)
    code, out, _ = run_cli(capsys, ["tomo", "bootstrap", "--counts",
                                    str(counts), "--state", "lambda",
                                    "--resamples", "20", "--seed", "5"])
    assert code == 0
    obj = json.loads(out)
    assert obj["statistic"] == "non_markovianity"
    assert obj["stderr"]["value"] > 0


def test_tomo_custom_state_purity_fallback(tmp_path, capsys):
    g, dims = state_by_name("lambda")
    state_file = tmp_path / "state.json"
    state_file.write_text(json.dumps({"dims": list(dims),
                                      "matrix": mat_to_json(g)}))
    code, out, _ = run_cli(capsys, ["tomo", "bootstrap", "--state",
                                    str(state_file), "--shots", "2700",
                                    "--resamples", "10", "--seed", "1"])
    assert code == 0
    assert json.loads(out)["statistic"] == "purity"
    code, _, err = run_cli(capsys, ["tomo", "reconstruct"])
    assert code == 2


def test_preset_process1_values(tmp_path, capsys):
    out_a = tmp_path / "a.json"
    out_b = tmp_path / "b.json"
    assert main(["preset", "process1", "--out", str(out_a)]) == 0
    assert main(["preset", "process1", "--out", str(out_b)]) == 0
    capsys.readouterr()
    assert out_a.read_bytes() == out_b.read_bytes()
    obj = json.loads(out_a.read_text())
    nm = obj["non_markovianity"]
    assert np.isclose(nm["value"], 0.2836518149970493, atol=1e-12)
    # tabulated reference misses, the experimental one agrees
    kinds = {r["kind"]: r["agrees"] for r in nm["reference"]}
    assert kinds == {"theoretical": False, "experimental": True}
    assert obj["theta_markov_order_one"]["value"] is False
    assert obj["recovered_fidelity_tabulated_form"]["value"] < 1.0
    strengths = [row["strength"] for row in obj["noisy_replay"]]
    assert strengths == [0.01, 0.05]
    for row in obj["noisy_replay"]:
        assert 0.005 < row["scan_correlator_max"] < 0.1


def test_preset_process2_values(capsys):
    code, out, _ = run_cli(capsys, ["preset", "process2"])
    assert code == 0
    obj = json.loads(out)
    assert obj["xi_markov_order_one"]["value"] is True
    assert np.isclose(obj["cmi_state_convention"]["value"], 0.5, atol=1e-9)
    assert obj["cmi_state_convention"]["reference"][0]["agrees"]
    assert obj["werner_rotated_residual"]["value"] < 1e-10
    assert obj["werner_literal_max_trace_distance"]["value"] > 0.28
    assert np.isclose(obj["recovered_fidelity_tabulated_form"]["value"],
                      1.0, atol=1e-12)
    assert obj["scan_projector_max"]["value"] < 1e-12


def test_preset_csv_format(capsys):
    code, out, _ = run_cli(capsys, ["preset", "walk_verify", "--format",
                                    "csv"])
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "field,value"
    fields = {l.split(",", 1)[0] for l in lines[1:]}
    assert "theta.match" in fields


def test_run_config(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    out_file = tmp_path / "report.json"
    cfg.write_text(json.dumps({"preset": "process2",
                               "output": str(out_file),
                               "tolerances": {"non_markovianity": 1.0}}))
    code, _, _ = run_cli(capsys, ["run", "--config", str(cfg)])
    assert code == 0
    obj = json.loads(out_file.read_text())
    # the loose override flips the headline reference to agreement
    assert obj["non_markovianity"]["reference"][0]["agrees"] is True

    cfg.write_text(json.dumps({"preset": "process2", "bogus": 1}))
    code, _, err = run_cli(capsys, ["run", "--config", str(cfg)])
    assert code == 2 and "unknown config keys" in err

    cfg.write_text(json.dumps({"preset": "walk_verify",
                               "command": ["states"]}))
    code, _, err = run_cli(capsys, ["run", "--config", str(cfg)])
    assert code == 2 and "custom" in err

    cfg.write_text(json.dumps({"preset": "custom",
                               "command": ["instrument", "validate",
                                           "--name", "xi"]}))
    code, out, _ = run_cli(capsys, ["run", "--config", str(cfg)])
    assert code == 0
    assert json.loads(out)["ok"]

    cfg.write_text(json.dumps({"preset": "custom",
                               "command": ["run", "--config", str(cfg)]}))
    code, _, err = run_cli(capsys, ["run", "--config", str(cfg)])
    assert code == 2

    cfg.write_text(json.dumps({"preset": "nothere"}))
    code, _, _ = run_cli(capsys, ["run", "--config", str(cfg)])
    assert code == 2


def test_custom_state_process_pipeline(tmp_path, capsys):
    # a product state fed through the file-based loaders end to end
    rng = np.random.default_rng(30)
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    rho_a = a @ a.conj().T
    rho_a /= np.trace(rho_a)
    g = np.kron(np.kron(rho_a, np.eye(2) / 2), np.eye(2) / 2)
    state_file = tmp_path / "prod.json"
    state_file.write_text(json.dumps({"dims": [2, 2, 2],
                                      "matrix": mat_to_json(g)}))
    code, out, _ = run_cli(capsys, ["memory", "strength", "--process",
                                    str(state_file), "--instrument", "z"])
    assert code == 0
    assert json.loads(out)["report"]["max_event"] < 1e-10
    code, out, _ = run_cli(capsys, ["recover", "build", "--process",
                                    str(state_file), "--instrument",
                                    "tetra"])
    assert code == 0
    assert np.isclose(json.loads(out)["fidelity_to_true"], 1.0, atol=1e-10)
