"""Acceptance suite: every criterion at its stated tolerance.

Run ``pytest tests/test_acceptance.py -v`` and read the "acceptance criteria"
section of the summary for one PASS/FAIL line per criterion.
"""

import functools
import itertools
import math
import time

import numpy as np
import pytest

from rrquery import NoiseConfig, QueryOracle, boost_count, round_robin_reference
from rrquery.allocators import ALLOCATORS
from rrquery.analysis import (
    check_ef1,
    gen_identical_from,
    gen_pair_reversal,
    gen_pair_reversal_random,
    gen_uniform,
    mc_success_rate,
    scaling_sweep,
    unpicked_sets,
)
from rrquery.cli import main

NOISELESS = ("worstcase", "random", "fullsort", "repeatedmax")
POWERS = [2**k for k in range(10, 15)]


@functools.lru_cache(maxsize=None)
def corpus():
    """10^4 random instances (2 <= n <= 8, n <= m <= 64) plus all 5040 identical orders at m = 7."""
    rng = np.random.default_rng(20240601)
    out = []
    for k in range(10_000):
        n = int(rng.integers(2, 9))
        m = int(rng.integers(n, 65))
        out.append(gen_uniform(n, m, k))
    out += [gen_identical_from(list(p)) for p in itertools.permutations(range(1, 8))]
    return tuple(out)


@functools.lru_cache(maxsize=None)
def references():
    return tuple(round_robin_reference(inst, trace=False) for inst in corpus())


def lower_tail(p, trials):
    return p - 3 * math.sqrt(p * (1 - p) / trials)


def test_c01_noiseless_correctness(criterion):
    t0 = time.perf_counter()
    mismatches = {}
    for name in NOISELESS:
        fn = ALLOCATORS[name]
        bad = 0
        for inst, ref in zip(corpus(), references()):
            bad += fn(QueryOracle(inst), trace=False).allocation != ref
        mismatches[name] = bad
    elapsed = time.perf_counter() - t0
    ok = all(v == 0 for v in mismatches.values()) and elapsed < 120
    detail = f"{len(corpus())} instances, mismatches {mismatches}, {elapsed:.0f}s (limit 120s)"
    assert criterion(1, "noiseless allocators equal the reference", ok, detail)


def test_c02_ef1(criterion):
    violations = sum(not check_ef1(inst, ref) for inst, ref in zip(corpus(), references()))
    ok = violations == 0
    assert criterion(2, "reference allocation is EF1", ok, f"{violations} violations on {len(corpus())} instances")


def test_c03_unpicked_bound(criterion):
    checked = violations = 0
    for inst in corpus():
        violations += unpicked_sets(inst).total < inst.n * inst.m / 4
        checked += 1
    for n in range(2, 9):
        for m in range(n, 33):
            for k in range(100):
                inst = gen_uniform(n, m, (n * 1000 + m) * 1000 + k)
                violations += unpicked_sets(inst).total < n * m / 4
                checked += 1
    ok = violations == 0
    assert criterion(3, "unpicked-set total >= nm/4", ok, f"{violations} violations on {checked} instances")


def test_c04_worstcase_scaling(criterion):
    t0 = time.perf_counter()
    worst = 0.0
    series = {}
    for n in (2, 16, 128):
        rows = scaling_sweep("worstcase", [(n, m) for m in POWERS], 2, seed=4)
        norm = [r.mean_comparisons / (n * r.m * math.log2(max(2, r.m / n))) for r in rows]
        series[n] = [round(v, 3) for v in norm]
        worst = max(worst, max(abs(b / a - 1) for a, b in zip(norm, norm[1:])))
    elapsed = time.perf_counter() - t0
    ok = worst <= 0.25 and elapsed < 600
    detail = f"largest change per doubling {worst:.1%} (limit 25%), normalized {series}, {elapsed:.0f}s"
    assert criterion(4, "worstcase comparisons ~ nm log(m/n)", ok, detail)


def test_c05_random_scaling(criterion):
    norms = {}
    for n in (2, 64):
        rows = scaling_sweep("random", [(n, m) for m in POWERS], 5, seed=5)
        norms[n] = [r.mean_comparisons / (n * r.m + r.m * math.log2(r.m)) for r in rows]
    flat = [v for vals in norms.values() for v in vals]
    spread = max(flat) / min(flat)
    rnd = scaling_sweep("random", [(2, 2**14)], 20, seed=55)[0].mean_comparisons
    full = scaling_sweep("fullsort", [(2, 2**14)], 20, seed=55)[0].mean_comparisons
    ok = spread <= 2 and rnd < full
    detail = (
        f"max/min normalized {spread:.3f} (limit 2), "
        f"{ {n: [round(v, 3) for v in vals] for n, vals in norms.items()} }; "
        f"n=2 m=2^14 random {rnd:.0f} vs fullsort {full:.0f}"
    )
    assert criterion(5, "random comparisons ~ nm + m log m", ok, detail)


def test_c06_repeatedmax_exact(criterion):
    grid = [(2, 2), (2, 64), (3, 10), (5, 37), (8, 64), (16, 200), (64, 64)]
    rows = scaling_sweep("repeatedmax", grid, 3, seed=6)
    bad = [(r.n, r.m) for r in rows if not (r.min_queries == r.max_queries == r.m * (r.m - 1) // 2)]
    ok = not bad and rows[1].mean_comparisons == 2016
    assert criterion(6, "repeatedmax uses exactly m(m-1)/2", ok, f"grid {grid}, mismatches {bad}, m=64 -> {rows[1].mean_comparisons:.0f}")


@pytest.mark.parametrize(
    "adversary, family",
    [
        ("uniform-random-value", lambda s: gen_uniform(2, 16, s)),
        ("plus-one-swap", lambda s: gen_uniform(2, 16, s)),
        ("pair-swap", lambda s: gen_pair_reversal_random(16, s)),
    ],
    ids=["uniform-random-value", "plus-one-swap", "pair-swap"],
)
def test_c07_noisy_value(criterion, adversary, family):
    t0 = time.perf_counter()
    trials = 2000
    T = boost_count(0.25, 0.05 / 32).repetitions
    counts = set()
    cfg = NoiseConfig(0.25, 0.05, adversary, seed=7)
    est = mc_success_rate(
        "noisy-value", family, cfg, trials, on_trial=lambda t, inst, rep: counts.add(rep.transcript.total)
    )
    floor = lower_tail(0.95, trials)
    elapsed = time.perf_counter() - t0
    ok = est.rate >= floor and counts == {2 * 16 * T} and elapsed < 300
    detail = f"{adversary}: success {est.rate:.4f} (floor {floor:.4f}), queries/trial {sorted(counts)} (expect {2 * 16 * T}), {elapsed:.0f}s"
    assert criterion(7, "noisy-value success", ok, detail)


@pytest.mark.parametrize("rho", [0.1, 0.25])
def test_c08_noisy_comparison(criterion, rho):
    trials = 2000
    cfg = NoiseConfig(rho, 0.1, seed=8)
    est = mc_success_rate("noisy-comparison", lambda s: gen_uniform(2, 32, s), cfg, trials)
    floor = lower_tail(0.9, trials)
    ok = est.rate >= floor
    detail = f"rho={rho}: success {est.rate:.4f} (floor {floor:.4f}), mean comparisons {est.mean_comparisons:.0f}"
    assert criterion(8, "noisy-comparison success", ok, detail)


def test_c09_boost_count(criterion):
    got = [boost_count(0.25, d).repetitions for d in (math.exp(-1), 0.01, 0.001)]
    ok = got == [8, 37, 56]
    assert criterion(9, "boost_count values", ok, f"{got} (expect [8, 37, 56])")


def test_c10_pair_reversal(criterion):
    rows = {(1, 0, 0): [2, 1, 3, 4, 5, 6], (1, 1, 0): [2, 1, 4, 3, 5, 6], (1, 1, 1): [2, 1, 4, 3, 6, 5]}
    problems = []
    for bits, order in rows.items():
        inst = gen_pair_reversal(bits)
        if [list(inst.ranking(i)) for i in (1, 2)] != [order, order]:
            problems.append(f"{bits} order")
        owner = round_robin_reference(inst).owner()
        if any(owner[2 * k - 1] == owner[2 * k] for k in range(1, 4)):
            problems.append(f"{bits} pair kept together")
    ok = not problems
    assert criterion(10, "pair-reversal rows and split pairs", ok, f"{len(rows)} rows, problems {problems}")


def test_c11_determinism(criterion, tmp_path):
    inst = tmp_path / "inst.json"
    ref = tmp_path / "ref.json"
    gen = ["gen", "uniform", "--n", "4", "--m", "40", "--seed", "11"]
    assert main(gen + ["--out", str(inst)]) == 0
    assert main(["run", "--allocator", "worstcase", "--in", str(inst), "--out", str(ref)]) == 0
    noisy = ["--rho", "0.2", "--delta", "0.1", "--seed", "3"]
    commands = [
        gen,
        ["run", "--allocator", "worstcase", "--in", str(inst)],
        ["run", "--allocator", "random", "--in", str(inst)],
        ["run", "--allocator", "noisy-comparison", "--in", str(inst)] + noisy,
        ["run", "--allocator", "noisy-value", "--in", str(inst), "--adversary", "uniform-random-value"] + noisy,
        ["verify", "--in", str(inst), "--allocation", str(ref)],
        ["mc", "--allocator", "noisy-value", "--n", "2", "--m", "8", "--rho", "0.25", "--delta", "0.1",
         "--trials", "200", "--seed", "11"],
        ["mc", "--allocator", "noisy-comparison", "--grid", "2,8;3,9", "--rho", "0.25", "--delta", "0.1",
         "--trials", "100", "--seed", "11", "--per-trial"],
        ["bench", "--allocator", "random", "--grid", "2,64;8,128", "--trials", "3", "--seed", "11"],
    ]
    differing = []
    for argv in commands:
        outs = []
        for k in range(2):
            path = tmp_path / f"out{k}"
            assert main(argv + ["--out", str(path)]) == 0, argv
            outs.append(path.read_bytes())
        if outs[0] != outs[1]:
            differing.append(" ".join(argv[:3]))
    ok = not differing
    assert criterion(11, "byte-identical repeated commands", ok, f"{len(commands)} commands, differing {differing}")
