import json
import subprocess
import sys

import pytest

import rrquery.cli as cli
from rrquery import Instance
from rrquery.cli import main, parse_grid
from rrquery.errors import ValidationError


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def id4(tmp_path):
    path = tmp_path / "id4.json"
    path.write_text(json.dumps({"n": 2, "m": 4, "utilities": [[4, 3, 2, 1], [4, 3, 2, 1]]}))
    return path


def test_gen_uniform_round_trip(capsys, tmp_path):
    out = tmp_path / "u.json"
    code, _, _ = run(capsys, "gen", "uniform", "--n", 2, "--m", 4, "--seed", 7, "--out", out)
    assert code == 0
    inst = Instance.from_dict(json.loads(out.read_text()))
    assert (inst.n, inst.m) == (2, 4)


def test_gen_pair_reversal(capsys):
    code, out, _ = run(capsys, "gen", "pair-reversal", "--bits", "100")
    assert code == 0
    inst = Instance.from_dict(json.loads(out))
    assert list(inst.ranking(1)) == [2, 1, 3, 4, 5, 6]


def test_gen_identical_order(capsys):
    code, out, _ = run(capsys, "gen", "identical", "--order", "2,1,4,3,5,6")
    assert code == 0
    assert list(Instance.from_dict(json.loads(out)).ranking(2)) == [2, 1, 4, 3, 5, 6]


def test_gen_validation_writes_nothing(capsys, tmp_path):
    out = tmp_path / "never.json"
    code, _, err = run(capsys, "gen", "uniform", "--n", 3, "--m", 2, "--out", out)
    assert code == 2 and "m >= n" in err
    assert not out.exists()


def test_run_reference_and_worstcase(capsys, id4):
    code, out, _ = run(capsys, "run", "--allocator", "reference", "--in", id4)
    assert code == 0
    ref = json.loads(out)
    assert ref["allocation"]["bundles"] == [[1, 3], [2, 4]]
    assert ref["success"] == 1 and "elapsed" not in ref
    code, out, _ = run(capsys, "run", "--allocator", "worstcase", "--in", id4)
    rep = json.loads(out)
    assert rep["allocation"]["bundles"] == [[1, 3], [2, 4]]
    assert rep["transcript"]["comparison_count"] > 0


def test_run_noisy_without_config(capsys, id4):
    code, _, err = run(capsys, "run", "--allocator", "noisy-value", "--in", id4)
    assert code == 2 and "noise" in err


def test_run_with_noise_file(capsys, id4, tmp_path):
    cfg = tmp_path / "noise.json"
    cfg.write_text(json.dumps({"rho": 0.0, "delta": 0.05, "adversary": "PlusOneSwap", "seed": 3}))
    code, out, _ = run(capsys, "run", "--allocator", "noisy-value", "--in", id4, "--noise", cfg)
    rep = json.loads(out)
    assert code == 0 and rep["success"] == 1 and rep["seed"] == 3


def test_run_timing_flag(capsys, id4):
    code, out, _ = run(capsys, "run", "--allocator", "random", "--in", id4, "--timing")
    assert code == 0 and "elapsed" in json.loads(out)


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "--allocator", "noisy-value", "--in", "{id4}", "--rho", "0.5", "--delta", "0.1"],
        ["run", "--allocator", "noisy-value", "--in", "{id4}", "--rho", "0.1"],
        ["run", "--allocator", "noisy-value", "--in", "{id4}", "--rho", "0.1", "--delta", "0.1", "--adversary", "evil"],
        ["mc", "--allocator", "noisy-value", "--n", "2", "--m", "4", "--rho", "0.1", "--delta", "0.1", "--trials", "10"],
        ["bench", "--allocator", "random", "--grid", "2,64;1,4"],
        ["bench", "--allocator", "random", "--grid", "2;4"],
        ["bench", "--allocator", "random", "--n", "2", "--m", "4", "--seed", "-1"],
    ],
)
def test_validation_errors_exit_2(capsys, id4, argv):
    code, _, _ = run(capsys, *[a.format(id4=id4) for a in argv])
    assert code == 2


def test_unknown_allocator_rejected_by_parser(id4):
    with pytest.raises(SystemExit) as info:
        main(["run", "--allocator", "magic", "--in", str(id4)])
    assert info.value.code == 2


def test_io_errors_exit_3(capsys, tmp_path, id4):
    code, _, _ = run(capsys, "run", "--allocator", "random", "--in", tmp_path / "missing.json")
    assert code == 3
    code, _, _ = run(capsys, "gen", "uniform", "--n", 2, "--m", 4, "--out", tmp_path / "no" / "dir.json")
    assert code == 3


def test_bad_json_exit_2(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, _ = run(capsys, "run", "--allocator", "random", "--in", bad)
    assert code == 2
    bad.write_text(json.dumps({"n": 2, "m": 2, "utilities": [[1, 1], [1, 2]]}))
    code, _, err = run(capsys, "run", "--allocator", "random", "--in", bad)
    assert code == 2 and "agent 1" in err


def test_verify(capsys, id4, tmp_path):
    code, out, _ = run(capsys, "run", "--allocator", "reference", "--in", id4, "--out", tmp_path / "r.json")
    code, out, _ = run(capsys, "verify", "--in", id4, "--allocation", tmp_path / "r.json")
    rep = json.loads(out)
    assert rep == {"ef1": 1, "matches_reference": 1, "lemma3_sum": 3, "lemma3_bound": 2}
    hand = tmp_path / "hand.json"
    hand.write_text(json.dumps({"bundles": [[4], [1, 2, 3]]}))
    code, out, _ = run(capsys, "verify", "--in", id4, "--allocation", hand)
    rep = json.loads(out)
    assert code == 0 and rep["ef1"] == 0 and rep["matches_reference"] == 0
    assert rep["lemma3_sum"] >= rep["lemma3_bound"]


def test_verify_malformed_allocation(capsys, id4, tmp_path):
    hand = tmp_path / "hand.json"
    hand.write_text(json.dumps({"bundles": [[1, 2], [2, 3]]}))
    code, _, _ = run(capsys, "verify", "--in", id4, "--allocation", hand)
    assert code == 2


def test_mc_noiseless(capsys):
    code, out, _ = run(
        capsys, "mc", "--allocator", "noisy-comparison", "--grid", "2,6;3,9", "--rho", 0, "--delta", 0.1, "--trials", 100
    )
    lines = out.strip().split("\n")
    assert code == 0 and len(lines) == 3
    assert all(line.endswith(",1") for line in lines[1:])


def test_mc_per_trial_rows(capsys):
    code, out, _ = run(
        capsys, "mc", "--allocator", "noisy-value", "--n", 2, "--m", 4, "--rho", 0.2, "--delta", 0.1,
        "--trials", 100, "--per-trial",
    )
    lines = out.strip().split("\n")
    assert code == 0 and len(lines) == 101
    assert lines[0] == "algorithm,n,m,rho,delta,seed,comparison_count,value_count,success"


def test_bench_repeatedmax(capsys):
    code, out, _ = run(capsys, "bench", "--allocator", "repeatedmax", "--grid", "2,64", "--trials", 2)
    header, row = out.strip().split("\n")
    rec = dict(zip(header.split(","), row.split(",")))
    assert code == 0 and rec["mean_comparisons"] == "2016"


@pytest.mark.parametrize(
    "argv",
    [
        ["bench", "--allocator", "random", "--grid", "2,64;5,50", "--seed", "9"],
        ["mc", "--allocator", "noisy-value", "--n", "2", "--m", "8", "--rho", "0.3", "--delta", "0.1", "--trials", "100", "--seed", "4"],
        ["gen", "uniform", "--n", "3", "--m", "9", "--seed", "2"],
    ],
)
def test_byte_identical_output(tmp_path, argv):
    outs = []
    for k in range(2):
        path = tmp_path / f"o{k}"
        assert main(argv + ["--out", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1] and b"\r" not in outs[0]


def test_parse_grid():
    assert parse_grid("2,64; 8,128;") == [(2, 64), (8, 128)]
    with pytest.raises(ValidationError):
        parse_grid(";")


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "rrquery.cli", "gen", "uniform", "--n", "3", "--m", "2"], capture_output=True, text=True
    )
    assert proc.returncode == 2


def test_internal_invariant_exit_4(capsys, id4, monkeypatch):
    def broken(*args, **kwargs):
        raise AssertionError("item 3 allocated twice")

    monkeypatch.setattr(cli, "run_allocator", broken)
    code, _, err = run(capsys, "run", "--allocator", "random", "--in", id4)
    assert code == 4 and "internal" in err
