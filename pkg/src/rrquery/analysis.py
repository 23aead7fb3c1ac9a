"""Verifiers, instance generators, Monte Carlo success estimates and scaling sweeps."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

from .allocators import NOISY, get_allocator, run_allocator
from .core import Allocation, Instance, bundle_sizes, round_robin_reference
from .errors import (
    FewerItemsThanAgents,
    MalformedAllocation,
    MissingNoiseConfig,
    OddItemCount,
    TooFewAgents,
    ValidationError,
)
from .oracle import NoiseConfig, make_rng

# --- verifiers ---------------------------------------------------------------


def check_ef1(inst: Instance, alloc: Allocation) -> bool:
    """True iff every agent's envy towards any bundle disappears after dropping
    that bundle's item the agent values most (additive utilities)."""
    if alloc.n != inst.n:
        raise MalformedAllocation(f"expected {inst.n} bundles, got {alloc.n}")
    items = sorted(j for b in alloc.bundles for j in b)
    if items != list(range(1, inst.m + 1)):
        raise MalformedAllocation("bundles do not partition the item set")
    for i, row in enumerate(inst.utilities):
        own = sum(row[j - 1] for j in alloc.bundles[i])
        for k, other in enumerate(alloc.bundles):
            if k == i or not other:
                continue
            values = [row[j - 1] for j in other]
            if own < sum(values) - max(values):
                return False
    return True


@dataclass(frozen=True)
class UnpickedSets:
    """Per agent, the items neither taken by an earlier agent in round 1 nor
    ever taken by the agent itself."""

    sets: tuple[frozenset, ...]
    n: int
    m: int

    @property
    def total(self) -> int:
        return sum(len(s) for s in self.sets)

    @property
    def bound(self) -> Fraction:
        return Fraction(self.n * self.m, 4)

    def floors(self) -> list[int]:
        """Per-agent lower bounds ``m - (i - 1) - k_i``."""
        k = bundle_sizes(self.n, self.m)
        return [self.m - i - k[i] for i in range(self.n)]

    @property
    def holds(self) -> bool:
        return self.total >= self.bound and all(len(s) >= f for s, f in zip(self.sets, self.floors()))


def unpicked_sets(inst: Instance) -> UnpickedSets:
    alloc = round_robin_reference(inst)
    first_round = [item for rnd, _, item in alloc.trace if rnd == 1]
    everything = set(range(1, inst.m + 1))
    sets = []
    for i in range(inst.n):
        sets.append(frozenset(everything - set(first_round[:i]) - set(alloc.bundles[i])))
    return UnpickedSets(tuple(sets), inst.n, inst.m)


# --- generators --------------------------------------------------------------


def gen_uniform(n: int, m: int, seed: int) -> Instance:
    """Each agent's utilities are an independent uniform permutation of ``1..m``."""
    if n < 2:
        raise TooFewAgents(f"need at least 2 agents, got n={n}")
    if m < n:
        raise FewerItemsThanAgents(f"need m >= n, got n={n}, m={m}")
    rng = make_rng(seed)
    return Instance(n=n, m=m, utilities=[(rng.permutation(m) + 1).tolist() for _ in range(n)])


def gen_identical_from(perm: Sequence[int], n: int = 2) -> Instance:
    """Agents sharing the ranking ``perm`` (best first); the best item gets utility m."""
    m = len(perm)
    if sorted(perm) != list(range(1, m + 1)):
        raise ValidationError("perm must be a permutation of 1..m")
    row = [0] * m
    for pos, j in enumerate(perm):
        row[j - 1] = m - pos
    return Instance(n=n, m=m, utilities=[row] * n)


def gen_identical(m: int, seed: int, n: int = 2) -> Instance:
    if m < 2:
        raise ValidationError("need m >= 2")
    rng = make_rng(seed)
    return gen_identical_from((rng.permutation(m) + 1).tolist(), n=n)


@dataclass(frozen=True)
class PairReversalSpec:
    """Bit ``k`` (0-based) set means items ``2k+1`` and ``2k+2`` swap places."""

    bits: tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if any(b not in (0, 1) for b in bits):
            raise ValidationError("pair-reversal bits must be 0 or 1")
        if not bits:
            raise ValidationError("need at least one pair")
        object.__setattr__(self, "bits", bits)

    @property
    def m(self) -> int:
        return 2 * len(self.bits)

    @classmethod
    def parse(cls, text: str) -> "PairReversalSpec":
        return cls(tuple(int(ch) for ch in text.strip() if ch not in ",[] "))


def pair_reversal_order(spec: PairReversalSpec) -> list[int]:
    order = []
    for k, b in enumerate(spec.bits):
        lo, hi = 2 * k + 1, 2 * k + 2
        order += [hi, lo] if b else [lo, hi]
    return order


def gen_pair_reversal(spec: Union[PairReversalSpec, Sequence[int]], m: Optional[int] = None) -> Instance:
    """Two agents with the order ``1 > 2 > ... > m`` except that flagged pairs are reversed.

    Utilities are ``m, m-1, ...`` down the order, so pair ``k`` always holds the
    two values ``{m-2k+2, m-2k+1}``.
    """
    if not isinstance(spec, PairReversalSpec):
        spec = PairReversalSpec(tuple(spec))
    if m is not None and m != spec.m:
        if m % 2:
            raise OddItemCount(f"pair reversal needs an even item count, got m={m}")
        raise ValidationError(f"{len(spec.bits)} bits describe m={spec.m}, not {m}")
    return gen_identical_from(pair_reversal_order(spec))


def gen_pair_reversal_random(m: int, seed: int) -> Instance:
    if m % 2:
        raise OddItemCount(f"pair reversal needs an even item count, got m={m}")
    rng = make_rng(seed)
    return gen_pair_reversal(PairReversalSpec(tuple(rng.integers(0, 2, m // 2).tolist())))


FAMILIES = ("uniform", "identical", "pair-reversal")


def family_generator(family: str, n: int, m: int) -> Callable[[int], Instance]:
    if family == "uniform":
        return lambda seed: gen_uniform(n, m, seed)
    if family == "identical":
        return lambda seed: gen_identical(m, seed, n=n)
    if family == "pair-reversal":
        if n != 2:
            raise ValidationError("the pair-reversal family has exactly two agents")
        return lambda seed: gen_pair_reversal_random(m, seed)
    raise ValidationError(f"unknown instance family {family!r}; choose from {FAMILIES}")


# --- Monte Carlo -------------------------------------------------------------


@dataclass(frozen=True)
class SuccessEstimate:
    trials: int
    successes: int
    mean_comparisons: float = 0.0
    mean_values: float = 0.0

    @property
    def rate(self) -> float:
        return self.successes / self.trials

    @property
    def ci_halfwidth(self) -> float:
        r = self.rate
        return 3.0 * math.sqrt(r * (1.0 - r) / self.trials)


def trial_seeds(seed: int, trials: int) -> list[tuple[int, int]]:
    """Independent ``(noise_seed, instance_seed)`` pairs, one per trial."""
    children = np.random.SeedSequence(int(seed)).spawn(trials)
    return [tuple(int(x) for x in c.generate_state(2, dtype=np.uint64)) for c in children]


InstanceSource = Union[Instance, Callable[[int], Instance]]


def mc_success_rate(
    allocator: str,
    source: InstanceSource,
    cfg: NoiseConfig,
    trials: int,
    *,
    on_trial: Optional[Callable] = None,
) -> SuccessEstimate:
    """Fraction of ``trials`` fresh-noise runs whose bundles equal the reference.

    ``source`` is a fixed instance or a ``seed -> Instance`` generator; a
    generator receives its own derived seed each trial.
    """
    get_allocator(allocator)
    if trials < 100:
        raise ValidationError(f"Monte Carlo needs at least 100 trials, got {trials}")
    wins = comps = vals = 0
    for t, (noise_seed, inst_seed) in enumerate(trial_seeds(cfg.seed, trials)):
        inst = source(inst_seed) if callable(source) else source
        report = run_allocator(allocator, inst, cfg.with_seed(noise_seed), trace=False)
        wins += bool(report.success)
        comps += report.transcript.comparison_count
        vals += report.transcript.value_count
        if on_trial is not None:
            on_trial(t, inst, report)
    return SuccessEstimate(trials, wins, comps / trials, vals / trials)


# --- scaling sweeps ----------------------------------------------------------

SWEEP_COLUMNS = (
    "allocator",
    "n",
    "m",
    "rho",
    "delta",
    "trials",
    "mean_comparisons",
    "mean_values",
    "norm_nmlog_m_over_n",
    "norm_nm_plus_mlogm",
    "norm_nmlogm",
    "norm_m2",
    "success_rate",
)

TRANSCRIPT_COLUMNS = (
    "algorithm",
    "n",
    "m",
    "rho",
    "delta",
    "seed",
    "comparison_count",
    "value_count",
    "success",
)


def normalizers(n: int, m: int) -> dict[str, float]:
    lg = math.log2
    return {
        "norm_nmlog_m_over_n": n * m * lg(max(2.0, m / n)),
        "norm_nm_plus_mlogm": n * m + m * lg(m),
        "norm_nmlogm": n * m * lg(m),
        "norm_m2": m * (m - 1) / 2,
    }


@dataclass(frozen=True)
class SweepRow:
    allocator: str
    n: int
    m: int
    rho: Optional[float]
    delta: Optional[float]
    trials: int
    mean_comparisons: float
    mean_values: float
    min_queries: int
    max_queries: int
    success_rate: float

    @property
    def mean_queries(self) -> float:
        return self.mean_comparisons + self.mean_values

    def normalized(self) -> dict[str, float]:
        return {k: self.mean_queries / v for k, v in normalizers(self.n, self.m).items()}

    def as_record(self) -> dict:
        rec = {
            "allocator": self.allocator,
            "n": self.n,
            "m": self.m,
            "rho": self.rho,
            "delta": self.delta,
            "trials": self.trials,
            "mean_comparisons": self.mean_comparisons,
            "mean_values": self.mean_values,
            "success_rate": self.success_rate,
        }
        rec.update(self.normalized())
        return rec


def scaling_sweep(
    allocator: str,
    grid: Iterable[tuple[int, int]],
    repetitions: int,
    seed: int,
    cfg: Optional[NoiseConfig] = None,
    family: str = "uniform",
) -> list[SweepRow]:
    """Mean query counts over ``repetitions`` generated instances at each ``(n, m)``.

    Instance and noise seeds derive from ``seed`` and the grid position, so
    each row is reproducible on its own.
    """
    grid = list(grid)
    if not grid:
        raise ValidationError("the sweep grid is empty")
    if repetitions < 1:
        raise ValidationError("need at least one repetition")
    get_allocator(allocator)
    if allocator in NOISY and cfg is None:
        raise MissingNoiseConfig(f"allocator {allocator!r} needs a noise configuration")
    rows = []
    for pos, (n, m) in enumerate(grid):
        gen = family_generator(family, n, m)
        seeds = trial_seeds(np.random.SeedSequence([int(seed), pos]).generate_state(1, np.uint64)[0], repetitions)
        comps, vals, wins = [], [], 0
        for noise_seed, inst_seed in seeds:
            inst = gen(inst_seed)
            run_cfg = cfg.with_seed(noise_seed) if cfg is not None else None
            rep = run_allocator(allocator, inst, run_cfg, trace=False)
            comps.append(rep.transcript.comparison_count)
            vals.append(rep.transcript.value_count)
            wins += bool(rep.success)
        totals = [c + v for c, v in zip(comps, vals)]
        rows.append(
            SweepRow(
                allocator=allocator,
                n=n,
                m=m,
                rho=cfg.rho if cfg is not None else None,
                delta=cfg.delta if cfg is not None else None,
                trials=repetitions,
                mean_comparisons=sum(comps) / repetitions,
                mean_values=sum(vals) / repetitions,
                min_queries=min(totals),
                max_queries=max(totals),
                success_rate=wins / repetitions,
            )
        )
    return rows


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if v.is_integer() and abs(v) < 1e15:
            return str(int(v))
        return f"{v:.6f}"
    return str(v)


def to_csv(records: Iterable[dict], columns: Sequence[str]) -> str:
    """CSV text with LF line endings and '.' decimals, identical on every platform."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for rec in records:
        w.writerow([_fmt(rec.get(c)) for c in columns])
    return buf.getvalue()
