"""Command-line entry point: ``rrquery {gen,run,verify,mc,bench}``.

Exit codes: 0 success, 2 validation error, 3 I/O error, 4 internal invariant
violation. Output is written only after all work succeeded.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Optional

from .allocators import ALLOCATORS, NOISY, get_allocator, run_allocator
from .analysis import (
    FAMILIES,
    SWEEP_COLUMNS,
    TRANSCRIPT_COLUMNS,
    PairReversalSpec,
    SweepRow,
    check_ef1,
    family_generator,
    gen_identical,
    gen_identical_from,
    gen_pair_reversal,
    gen_uniform,
    mc_success_rate,
    scaling_sweep,
    to_csv,
    unpicked_sets,
)
from .core import Allocation, Instance, dump_json, load_json, round_robin_reference
from .errors import (
    FewerItemsThanAgents,
    MissingNoiseConfig,
    RoundRobinError,
    TooFewAgents,
    ValidationError,
)
from .oracle import UINT64_MAX, NoiseConfig

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_INTERNAL = 0, 2, 3, 4


def parse_grid(text: str) -> list[tuple[int, int]]:
    """``"2,64;8,128"`` -> ``[(2, 64), (8, 128)]``."""
    grid = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        try:
            n, m = (int(x) for x in part.split(","))
        except ValueError:
            raise ValidationError(f"bad grid point {part!r}; expected 'n,m'") from None
        _check_nm(n, m)
        grid.append((n, m))
    if not grid:
        raise ValidationError("empty grid")
    return grid


def _check_nm(n: Optional[int], m: Optional[int]) -> None:
    if n is None or m is None:
        raise ValidationError("--n and --m are required")
    if n < 2:
        raise TooFewAgents(f"need n >= 2, got {n}")
    if m < n:
        raise FewerItemsThanAgents(f"need m >= n, got n={n}, m={m}")


def _check_seed(seed: int) -> None:
    if not 0 <= seed <= UINT64_MAX:
        raise ValidationError("--seed must be a 64-bit unsigned integer")


def _noise_from_args(args, required: bool) -> Optional[NoiseConfig]:
    cfg = None
    if getattr(args, "noise", None):
        cfg = NoiseConfig.from_dict(load_json(args.noise))
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
    elif args.rho is not None or args.delta is not None:
        if args.rho is None or args.delta is None:
            raise ValidationError("--rho and --delta must be given together")
        cfg = NoiseConfig(args.rho, args.delta, args.adversary, args.seed or 0)
    if cfg is None and required:
        raise MissingNoiseConfig("this allocator needs --noise FILE or --rho/--delta")
    return cfg


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_instance(path: str) -> Instance:
    return Instance.from_dict(load_json(path))


# --- commands ---------------------------------------------------------------


def cmd_gen(args) -> str:
    seed = args.seed or 0
    _check_seed(seed)
    if args.kind == "uniform":
        _check_nm(args.n, args.m)
        inst = gen_uniform(args.n, args.m, seed)
    elif args.kind == "identical":
        n = args.n or 2
        if args.order:
            inst = gen_identical_from([int(x) for x in args.order.split(",")], n=n)
        else:
            if args.m is None:
                raise ValidationError("--m or --order is required")
            _check_nm(n, args.m)
            inst = gen_identical(args.m, seed, n=n)
    else:
        if not args.bits:
            raise ValidationError("--bits is required for pair-reversal")
        inst = gen_pair_reversal(PairReversalSpec.parse(args.bits), args.m)
    return dump_json(inst.to_dict())


def cmd_run(args) -> str:
    fn_name = args.allocator
    get_allocator(fn_name)
    if args.seed is not None:
        _check_seed(args.seed)
    cfg = _noise_from_args(args, required=fn_name in NOISY)
    inst = _load_instance(args.input)
    report = run_allocator(fn_name, inst, cfg, trace=not args.no_trace)
    if cfg is None:
        report.seed = args.seed
    return dump_json(report.to_dict(timing=args.timing))


def cmd_verify(args) -> str:
    inst = _load_instance(args.input)
    doc = load_json(args.allocation)
    if isinstance(doc, dict) and "allocation" in doc:
        doc = doc["allocation"]  # a run report
    alloc = Allocation.from_dict(doc)
    unpicked = unpicked_sets(inst)
    result = {
        "ef1": int(check_ef1(inst, alloc)),
        "matches_reference": int(alloc == round_robin_reference(inst, trace=False)),
        "lemma3_sum": unpicked.total,
        "lemma3_bound": math.ceil(unpicked.bound),
    }
    return dump_json(result)


def _grid_from_args(args) -> list[tuple[int, int]]:
    if args.grid:
        return parse_grid(args.grid)
    _check_nm(args.n, args.m)
    return [(args.n, args.m)]


def cmd_mc(args) -> str:
    get_allocator(args.allocator)
    seed = args.seed or 0
    _check_seed(seed)
    if args.trials < 100:
        raise ValidationError("--trials must be at least 100")
    cfg = _noise_from_args(args, required=True)
    cfg = cfg.with_seed(seed)
    fixed = _load_instance(args.input) if args.input else None
    grid = [(fixed.n, fixed.m)] if fixed is not None else _grid_from_args(args)
    family = args.family or ("pair-reversal" if cfg.adversary == "pair-swap" else "uniform")
    sources = [fixed if fixed is not None else family_generator(family, n, m) for n, m in grid]

    records, per_trial = [], []
    for (n, m), source in zip(grid, sources):
        trial_rows = []

        def keep(t, inst, report, trial_rows=trial_rows):
            trial_rows.append(
                {
                    "algorithm": report.algorithm,
                    "n": inst.n,
                    "m": inst.m,
                    "rho": cfg.rho,
                    "delta": cfg.delta,
                    "seed": report.seed,
                    "comparison_count": report.transcript.comparison_count,
                    "value_count": report.transcript.value_count,
                    "success": int(bool(report.success)),
                }
            )

        est = mc_success_rate(args.allocator, source, cfg, args.trials, on_trial=keep)
        per_trial += trial_rows
        row = SweepRow(
            allocator=args.allocator,
            n=n,
            m=m,
            rho=cfg.rho,
            delta=cfg.delta,
            trials=est.trials,
            mean_comparisons=est.mean_comparisons,
            mean_values=est.mean_values,
            min_queries=0,
            max_queries=0,
            success_rate=est.rate,
        )
        records.append(row.as_record())
    if args.per_trial:
        return to_csv(per_trial, TRANSCRIPT_COLUMNS)
    return to_csv(records, SWEEP_COLUMNS)


def cmd_bench(args) -> str:
    get_allocator(args.allocator)
    seed = args.seed or 0
    _check_seed(seed)
    grid = _grid_from_args(args)
    if args.trials < 1:
        raise ValidationError("--trials must be positive")
    cfg = _noise_from_args(args, required=args.allocator in NOISY)
    if cfg is not None:
        cfg = cfg.with_seed(seed)
    rows = scaling_sweep(args.allocator, grid, args.trials, seed, cfg, family=args.family or "uniform")
    return to_csv([r.as_record() for r in rows], SWEEP_COLUMNS)


# --- parser -----------------------------------------------------------------


def _add_noise_flags(p) -> None:
    p.add_argument("--rho", type=float, help="noise probability in [0, 1/2)")
    p.add_argument("--delta", type=float, help="failure budget in (0, 1/2)")
    p.add_argument("--adversary", default=None, help="plus-one-swap | pair-swap | uniform-random-value | none")
    p.add_argument("--noise", metavar="FILE", help="noise config JSON instead of --rho/--delta/--adversary")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rrquery", description="Round-robin allocation under counted queries.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write an instance JSON")
    p.add_argument("kind", choices=("uniform", "identical", "pair-reversal"))
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--bits", help="pair-reversal bits, e.g. 100")
    p.add_argument("--order", help="identical ranking best-first, e.g. 2,1,4,3,5,6")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("run", help="run one allocator and print its report")
    p.add_argument("--allocator", required=True, choices=sorted(ALLOCATORS))
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--no-trace", action="store_true")
    p.add_argument("--timing", action="store_true", help="include wall time (output no longer reproducible)")
    p.add_argument("--out")
    _add_noise_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="check an allocation against an instance")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--allocation", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("mc", help="Monte Carlo success rate of an allocator")
    p.add_argument("--allocator", required=True, choices=sorted(ALLOCATORS))
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--grid")
    p.add_argument("--in", dest="input", help="fixed instance instead of a generated family")
    p.add_argument("--family", choices=FAMILIES)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int)
    p.add_argument("--per-trial", action="store_true", help="one transcript row per trial")
    p.add_argument("--out")
    _add_noise_flags(p)
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("bench", help="mean query counts over a grid of (n, m)")
    p.add_argument("--allocator", required=True, choices=sorted(ALLOCATORS))
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--grid")
    p.add_argument("--family", choices=FAMILIES)
    p.add_argument("--trials", type=int, default=5, help="repetitions per grid point")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    _add_noise_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = args.func(args)
        _emit(text, args.out)
    except (ValidationError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (RoundRobinError, AssertionError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
