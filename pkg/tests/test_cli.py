"""End-to-end tests for the batch runner: exit codes, formats, determinism."""

from __future__ import annotations

import json

import pytest

from anoncka.cli import EXIT_OK, EXIT_REJECTED, EXIT_USAGE, main


def write_config(tmp_path, payload, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


BASE_RUN = {
    "n": 4,
    "alice": 0,
    "receivers": [1, 2],
    "L": 40,
    "D": 4,
    "noise": {"model": "pure"},
    "seed": 7,
}


def test_run_pure_source_validates(tmp_path, capsys):
    cfg = write_config(tmp_path, BASE_RUN)
    code, out, err = run_cli(capsys, "run", "--config", cfg)
    assert code == EXIT_OK
    payload = json.loads(out)
    assert payload["validated"] is True
    assert payload["command"] == "avka"
    assert set(payload["key_bits"]) == {"0", "1", "2"}
    lengths = {len(v) for v in payload["key_bits"].values()}
    assert len(lengths) == 1


def test_run_dishonest_ghz_minus_rejected(tmp_path, capsys):
    cfg = write_config(
        tmp_path,
        {**BASE_RUN, "L": 60, "D": 2, "adversary": {"kind": "dishonest_source", "state": "ghz_minus"}},
    )
    code, out, _ = run_cli(capsys, "run", "--config", cfg)
    assert code == EXIT_REJECTED
    payload = json.loads(out)
    assert payload["validated"] is False
    accepted = [r["accepted"] for r in payload["rounds"] if r["type"] == "verification"]
    assert accepted and not any(accepted)


def test_run_missing_receivers_is_usage_error(tmp_path, capsys):
    cfg = write_config(tmp_path, {k: v for k, v in BASE_RUN.items() if k != "receivers"})
    code, out, err = run_cli(capsys, "run", "--config", cfg)
    assert code == EXIT_USAGE
    assert out == ""
    assert "receivers" in err


def test_run_without_denominator_runs_unverified_variant(tmp_path, capsys):
    cfg = write_config(tmp_path, {k: v for k, v in BASE_RUN.items() if k != "D"})
    code, out, _ = run_cli(capsys, "run", "--config", cfg)
    assert code == EXIT_OK
    payload = json.loads(out)
    assert payload["command"] == "aka"
    assert len(payload["keys"]["0"]) == 40
    assert len(set(payload["keys"].values())) == 1


def test_run_werner_noise_and_withholding(tmp_path, capsys):
    cfg = write_config(
        tmp_path,
        {
            **BASE_RUN,
            "L": 30,
            "D": 2,
            "noise": {"model": "werner", "fidelity": 0.95},
            "adversary": {"kind": "withholding", "party": 3, "basis": "Z"},
        },
    )
    code, out, _ = run_cli(capsys, "run", "--config", cfg)
    payload = json.loads(out)
    assert payload["adversary"]["kind"] == "withholding"
    assert code in (EXIT_OK, EXIT_REJECTED)  # detection is probabilistic per round
    assert len(payload["adversary"]["key_guess"]) == len(payload["key_bits"]["0"])


def test_theorem1_csv_rows(tmp_path, capsys):
    cfg = write_config(
        tmp_path,
        {"n": 4, "trials": 300, "seed": 3, "theta_grid": [0.0, 0.7853981633974483], "fidelity_grid": [0.9]},
    )
    code, out, _ = run_cli(capsys, "theorem1", "--config", cfg)
    assert code == EXIT_OK
    lines = out.strip().splitlines()
    assert lines[0] == "epsilon,accept_rate,stderr,bound,satisfied"
    assert len(lines) == 4
    assert all(line.endswith("True") for line in lines[1:])


def test_theorem1_empty_grid_header_only(tmp_path, capsys):
    cfg = write_config(tmp_path, {"n": 4, "trials": 10, "seed": 1})
    code, out, _ = run_cli(capsys, "theorem1", "--config", cfg)
    assert code == EXIT_OK
    assert out.strip() == "epsilon,accept_rate,stderr,bound,satisfied"


def test_theorem1_too_many_qubits(tmp_path, capsys):
    cfg = write_config(tmp_path, {"n": 11, "trials": 10, "seed": 1, "theta_grid": [0.0]})
    code, _, err = run_cli(capsys, "theorem1", "--config", cfg)
    assert code == EXIT_USAGE
    assert "n <= 10" in err


ANON_CFG = {
    "protocol": "ame",
    "n": 4,
    "hypothesis_a": {"alice": 0, "receivers": [1, 2]},
    "hypothesis_b": {"alice": 1, "receivers": [0, 2]},
    "coalition": [3],
    "trials": 600,
    "seed": 5,
}


def test_anonymity_below_threshold(tmp_path, capsys):
    cfg = write_config(tmp_path, ANON_CFG)
    code, out, _ = run_cli(capsys, "anonymity", "--config", cfg)
    assert code == EXIT_OK
    payload = json.loads(out)
    assert payload["tvd"] < 4 * payload["stderr"]
    assert payload["guessing_bound"] >= 1 / 3


def test_anonymity_coalition_with_alice_rejected(tmp_path, capsys):
    cfg = write_config(tmp_path, {**ANON_CFG, "coalition": [0]})
    code, _, err = run_cli(capsys, "anonymity", "--config", cfg)
    assert code == EXIT_USAGE
    assert "Alice" in err


def test_experiment_perfect_fidelity(tmp_path, capsys):
    cfg = write_config(tmp_path, {"fidelity": 1.0, "trials": 150, "seed": 2})
    code, out, _ = run_cli(capsys, "experiment", "--config", cfg)
    assert code == EXIT_OK
    payload = json.loads(out)
    assert payload["avg_p_k"] == 1.0
    assert payload["avg_p_v"] == 1.0


def test_experiment_includes_reference_values(tmp_path, capsys):
    cfg = write_config(tmp_path, {"fidelity": 0.81, "trials": 200, "seed": 2})
    code, out, _ = run_cli(capsys, "experiment", "--config", cfg)
    payload = json.loads(out)
    assert payload["reference_p_k"] == 0.92974
    assert payload["reference_p_v"] == 0.87178
    assert "gap_p_k" in payload and "gap_p_v" in payload


def test_experiment_infeasible_fidelity(tmp_path, capsys):
    cfg = write_config(tmp_path, {"fidelity": 0.05, "trials": 10, "seed": 2})
    code, _, err = run_cli(capsys, "experiment", "--config", cfg)
    assert code == EXIT_USAGE
    assert "fidelity" in err


def test_notify_demo_prints_table(tmp_path, capsys):
    cfg = write_config(tmp_path, {"n": 4, "alice": 0, "receivers": [2], "seed": 9})
    code, out, _ = run_cli(capsys, "notify-demo", "--config", cfg)
    assert code == EXIT_OK
    assert "share table for target 2" in out
    assert "(alice)" in out
    assert "notified bits: 0010" in out
    # alice's row parity is 1 for a receiver target, everyone else's is 0
    rows = [line for line in out.splitlines() if "|" in line and not line.startswith("dealer")]
    dealer_rows = [r for r in rows if "(alice)" in r or r.strip()[0].isdigit()]
    parities = [int(r.split("|")[2].strip().split()[0]) for r in dealer_rows]
    assert parities == [1, 0, 0, 0]


def test_unknown_command_is_usage_error(capsys):
    code = main(["bogus"])
    captured = capsys.readouterr()
    assert code == EXIT_USAGE
    assert "error" in captured.err


def test_missing_config_file(capsys):
    code = main(["run", "--config", "/nonexistent/cfg.json"])
    captured = capsys.readouterr()
    assert code == EXIT_USAGE
    assert "cannot read" in captured.err


def test_seed_flag_overrides_config(tmp_path, capsys):
    cfg = write_config(tmp_path, BASE_RUN)
    _, out_a, _ = run_cli(capsys, "run", "--config", cfg, "--seed", "99")
    _, out_b, _ = run_cli(capsys, "run", "--config", cfg)
    assert json.loads(out_a)["seed"] == 99
    assert out_a != out_b


@pytest.mark.parametrize(
    "command,cfg",
    [
        ("run", BASE_RUN),
        ("theorem1", {"n": 3, "trials": 150, "seed": 4, "theta_grid": [0.3, 1.1]}),
        ("anonymity", {**ANON_CFG, "trials": 300}),
        ("experiment", {"fidelity": 0.85, "trials": 100, "seed": 6}),
        ("notify-demo", {"n": 4, "alice": 1, "receivers": [0, 3], "seed": 12}),
    ],
)
def test_byte_identical_reruns(command, cfg, tmp_path, capsys):
    path = write_config(tmp_path, cfg)
    code_a, out_a, _ = run_cli(capsys, command, "--config", path)
    code_b, out_b, _ = run_cli(capsys, command, "--config", path)
    assert code_a == code_b
    assert out_a == out_b
