import json

import pytest

from rramkit.cli import EXIT_OK, EXIT_USAGE, EXIT_VERIFY, main

FA = "benchmarks/full_adder.blif"


@pytest.fixture(autouse=True)
def _root(monkeypatch, request):
    monkeypatch.chdir(request.config.rootpath)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_lim_full_adder(tmp_path, capsys):
    code, out, _ = run(capsys, "lim", FA, "--exhaustive", "--seed", "3", "--out", str(tmp_path))
    assert code == EXIT_OK
    assert out.splitlines()[0] == "seed: 3"
    metrics = json.loads((tmp_path / "full_adder.metrics.json").read_text())
    assert metrics["mismatches"] == 0 and metrics["vectors"] == 8
    assert metrics["energy_identity_error"] <= 1e-9
    assert {"init", "evaluate"} <= set(metrics["energy_per_phase"])
    sched = json.loads((tmp_path / "full_adder.schedule.json").read_text())
    assert sched["phases"] == ["init", "load", "evaluate", "read"]
    for ext in (".sp", ".energy.csv", ".results.csv"):
        assert (tmp_path / f"full_adder{ext}").exists()


def test_lim_single_vector(tmp_path, capsys):
    code, out, _ = run(capsys, "lim", FA, "--inputs", "111", "--out", str(tmp_path))
    assert code == EXIT_OK and "111 -> 11" in out


@pytest.mark.parametrize("argv", [
    ["lim", "missing.blif"],
    ["lim", FA, "--inputs", "1x1"],
    ["lim", FA, "--inputs", "11"],
    ["lim", "benchmarks/rca4.blif"],
    ["mvl-add", "-1", "2"],
    ["trng", "--target-p", "1.5"],
])
def test_input_errors_exit_2(tmp_path, capsys, argv):
    code, _, err = run(capsys, *argv, "--out", str(tmp_path))
    assert code == EXIT_USAGE
    assert err.startswith("rramkit:")


@pytest.mark.parametrize("argv", [
    ["lim", FA, "--c2c", "maybe"],
    ["fsa", "--c1", "2"],
    ["lim"],
    ["bogus"],
    ["trng", "--seed", "-4"],
])
def test_usage_errors_exit_2(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == EXIT_USAGE


def test_bad_config_exit_2(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"device": {"r_on": -1}}')
    code, _, err = run(capsys, "mvl-add", "1", "1", "--config", str(p), "--out", str(tmp_path))
    assert code == EXIT_USAGE and "device.r_on" in err


def test_config_seed_is_used(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text('{"seed": 42}')
    code, out, _ = run(capsys, "mvl-add", "1", "1", "--config", str(p), "--out", str(tmp_path))
    assert code == EXIT_OK and out.startswith("seed: 42\n")


def test_mvl_add_prints_both_bases(tmp_path, capsys):
    code, out, _ = run(capsys, "mvl-add", "0t212", "17", "--out", str(tmp_path))
    assert code == EXIT_OK
    assert "1111 (base 3)" in out and "40 (decimal)" in out
    doc = json.loads((tmp_path / "mvl_add.json").read_text())
    assert doc["exact"] and doc["sum_decimal"] == "40"


def test_fsa(tmp_path, capsys):
    code, _, _ = run(capsys, "fsa", "--steps", "500", "--out", str(tmp_path))
    assert code == EXIT_OK
    doc = json.loads((tmp_path / "fsa_metrics.json").read_text())
    assert doc["matches_software_automaton"] and doc["levels"] == 6
    assert len((tmp_path / "fsa_trajectory.csv").read_text().splitlines()) == 501


def test_trng_failure_exits_1(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text('{"trng": {"target_p": 0.7}}')
    code, _, err = run(capsys, "trng", "--n", "20000", "--config", str(p), "--out", str(tmp_path))
    assert code == EXIT_VERIFY and "randomness" in err


def test_trng_debiased_passes(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text('{"trng": {"target_p": 0.7}}')
    code, _, _ = run(capsys, "trng", "--n", "20000", "--debias", "--config", str(p),
                     "--out", str(tmp_path))
    assert code == EXIT_OK
    assert (tmp_path / "trng.bin").stat().st_size > 0


def test_puf_small(tmp_path, capsys):
    code, out, _ = run(capsys, "puf", "--chips", "3", "--m", "2", "--out", str(tmp_path))
    assert code == EXIT_OK and "uniqueness" in out
    assert len((tmp_path / "puf_crp.csv").read_text().splitlines()) == 4


def test_puf_needs_two_chips(tmp_path, capsys):
    code, _, _ = run(capsys, "puf", "--chips", "1", "--out", str(tmp_path))
    assert code == EXIT_USAGE


def test_puf_unhealthy_chip_exits_1(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text('{"variation": {"d2d": false}}')
    code, _, err = run(capsys, "puf", "--chips", "2", "--m", "2", "--config", str(p),
                       "--out", str(tmp_path))
    assert code == EXIT_VERIFY and "health" in err


def test_lock(tmp_path, capsys):
    code, _, _ = run(capsys, "lock", "--wrong-chips", "2", "--out", str(tmp_path))
    assert code == EXIT_OK
    rep = json.loads((tmp_path / "lock_report.json").read_text())
    assert rep["unlock_exact"] and rep["accuracy_correct_key"] == rep["accuracy_before_lock"]
    assert "key" not in (tmp_path / "locked_weights.json").read_text()


def test_lock_bad_weights_file(tmp_path, capsys):
    w = tmp_path / "w.json"
    w.write_text('{"levels": [0, 1]}')
    code, _, _ = run(capsys, "lock", "--weights", str(w), "--wrong-chips", "0",
                     "--out", str(tmp_path))
    assert code == EXIT_USAGE


def test_calibrate_skip_gates(tmp_path, capsys):
    code, _, _ = run(capsys, "calibrate", "--skip-gates", "--out", str(tmp_path))
    assert code == EXIT_OK
    doc = json.loads((tmp_path / "calibration.json").read_text())
    assert doc["levels"]["n_levels"] == 6 and "trng" in doc
