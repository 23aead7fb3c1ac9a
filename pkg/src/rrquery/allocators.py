"""Round-robin allocators that learn preferences only through oracle queries."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import Allocation, Instance, PickEvent, RunReport, replay_rankings, round_robin_reference
from .errors import DeclaredUtilityTie, MissingNoiseConfig, UnknownAllocator
from .oracle import NoiseConfig, QueryOracle
from .subroutines import (
    QuantilePartition,
    boost_count,
    find_best,
    majority_value,
    noisy_sort,
    quantiles,
    select_top,
    sort_items,
)


@dataclass
class AgentCursorState:
    """One agent's quantile buckets and the index of the first bucket that may
    still hold a remaining item."""

    partition: QuantilePartition
    cursor: int = 0


@dataclass
class SortedPrefixState:
    """One agent's sorted list of best remaining items.

    Items taken by other agents are not removed; ``pop_best`` skips them
    by checking the shared ``remaining`` mask.
    """

    items: list[int] = field(default_factory=list)
    head: int = 0

    def pop_best(self, remaining) -> Optional[int]:
        while self.head < len(self.items):
            j = self.items[self.head]
            self.head += 1
            if remaining[j]:
                return j
        return None


class _Picker:
    """Bundles, trace and remaining-item bookkeeping for cyclic picking."""

    def __init__(self, n: int, m: int, trace: bool):
        self.n, self.m = n, m
        self.remaining = np.ones(m + 1, dtype=bool)
        self.remaining[0] = False
        self.left = m
        self.bundles: list[list[int]] = [[] for _ in range(n)]
        self.events: Optional[list[PickEvent]] = [] if trace else None

    def turns(self):
        for t in range(self.m):
            yield t // self.n + 1, t % self.n + 1

    def take(self, rnd: int, agent: int, j: int) -> None:
        assert self.remaining[j], f"item {j} allocated twice"
        self.remaining[j] = False
        self.left -= 1
        self.bundles[agent - 1].append(j)
        if self.events is not None:
            self.events.append((rnd, agent, j))

    def remaining_items(self) -> np.ndarray:
        return np.flatnonzero(self.remaining)

    def allocation(self) -> Allocation:
        return Allocation(self.bundles, self.events)


def _report(name, alloc, oracle, t0, truth, seed=None, **meta) -> RunReport:
    success = None
    if truth is not None:
        success = alloc == round_robin_reference(truth, trace=False)
    return RunReport(
        allocation=alloc,
        transcript=oracle.snapshot_transcript(),
        algorithm=name,
        seed=seed,
        elapsed=time.perf_counter() - t0,
        success=success,
        meta=meta,
    )


# --- noiseless ---------------------------------------------------------------


def rr_reference(oracle: QueryOracle, *, trace: bool = True, truth: Optional[Instance] = None) -> RunReport:
    """Read the allocation off the instance directly; issues no queries."""
    t0 = time.perf_counter()
    alloc = round_robin_reference(oracle.instance, trace=trace)
    return _report("reference", alloc, oracle, t0, truth)


def rr_worstcase(
    oracle: QueryOracle, *, trace: bool = True, truth: Optional[Instance] = None, pivot: str = "sample"
) -> RunReport:
    """Quantile buckets per agent up front, then a bucket-local maximum per turn.

    O(nm log(m/n)) comparisons on every instance.
    """
    t0 = time.perf_counter()
    n, m = oracle.n, oracle.m
    all_items = np.arange(1, m + 1)
    states = [AgentCursorState(quantiles(i, all_items, n, oracle, pivot)) for i in range(1, n + 1)]
    pick = _Picker(n, m, trace)
    for rnd, i in pick.turns():
        st = states[i - 1]
        buckets = st.partition.buckets
        while True:
            bucket = buckets[st.cursor]
            live = bucket[pick.remaining[bucket]]
            if len(live):
                break
            st.cursor += 1
        pick.take(rnd, i, find_best(i, live, oracle))
    return _report("worstcase", pick.allocation(), oracle, t0, truth)


def rr_random(
    oracle: QueryOracle, *, trace: bool = True, truth: Optional[Instance] = None, pivot: str = "sample"
) -> RunReport:
    """Keep a sorted list of each agent's ``ceil(|S|/n)`` best remaining items,
    rebuilt by selection plus merge sort whenever it runs dry.

    Correct on every instance; expected O(nm + m log m) comparisons when
    preferences are uniformly random.
    """
    t0 = time.perf_counter()
    n, m = oracle.n, oracle.m
    states = [SortedPrefixState() for _ in range(n)]
    pick = _Picker(n, m, trace)
    rebuilds = 0
    for rnd, i in pick.turns():
        st = states[i - 1]
        j = st.pop_best(pick.remaining)
        if j is None:
            ell = math.ceil(pick.left / n)
            up, _ = select_top(i, pick.remaining_items(), ell, oracle, pivot)
            st.items, st.head = sort_items(i, up, oracle), 0
            rebuilds += 1
            j = st.pop_best(pick.remaining)
        pick.take(rnd, i, j)
    return _report("random", pick.allocation(), oracle, t0, truth, rebuilds=rebuilds)


def rr_fullsort_baseline(oracle: QueryOracle, *, trace: bool = True, truth: Optional[Instance] = None) -> RunReport:
    """Merge-sort every agent's full ranking, then replay the picks."""
    t0 = time.perf_counter()
    items = np.arange(1, oracle.m + 1)
    rankings = [sort_items(i, items, oracle) for i in range(1, oracle.n + 1)]
    alloc = replay_rankings(rankings, oracle.m, trace=trace)
    return _report("fullsort", alloc, oracle, t0, truth)


def rr_repeatedmax_baseline(oracle: QueryOracle, *, trace: bool = True, truth: Optional[Instance] = None) -> RunReport:
    """Each turn, scan every remaining item for the picker's maximum: m(m-1)/2 comparisons."""
    t0 = time.perf_counter()
    pick = _Picker(oracle.n, oracle.m, trace)
    for rnd, i in pick.turns():
        pick.take(rnd, i, find_best(i, pick.remaining_items(), oracle))
    return _report("repeatedmax", pick.allocation(), oracle, t0, truth)


# --- noisy -------------------------------------------------------------------


def _noise_of(oracle: QueryOracle, cfg: Optional[NoiseConfig]) -> NoiseConfig:
    cfg = cfg if cfg is not None else oracle.noise
    if cfg is None:
        raise MissingNoiseConfig("noisy allocators need a noise configuration")
    return cfg


def rr_noisy_comparison(
    oracle: QueryOracle,
    cfg: Optional[NoiseConfig] = None,
    *,
    trace: bool = True,
    truth: Optional[Instance] = None,
) -> RunReport:
    """Noisy-sort each agent's ranking at budget ``delta / n``, then replay the picks."""
    t0 = time.perf_counter()
    cfg = _noise_of(oracle, cfg)
    n, m = oracle.n, oracle.m
    delta0 = cfg.delta / n
    items = np.arange(1, m + 1)
    rankings = [noisy_sort(i, items, cfg.rho, delta0, oracle) for i in range(1, n + 1)]
    alloc = replay_rankings(rankings, m, trace=trace)
    return _report("noisy-comparison", alloc, oracle, t0, truth, seed=cfg.seed, delta0=delta0)


def rr_noisy_value(
    oracle: QueryOracle,
    cfg: Optional[NoiseConfig] = None,
    *,
    trace: bool = True,
    truth: Optional[Instance] = None,
    strict: bool = False,
) -> RunReport:
    """Declare every utility as the majority of ``T`` noisy value queries, with
    ``T = boost_count(rho, delta / (nm))``, then allocate on the declared table.

    Declared values that collide are ordered by item id (lower first) unless
    ``strict`` is set, in which case :class:`DeclaredUtilityTie` is raised.
    """
    t0 = time.perf_counter()
    cfg = _noise_of(oracle, cfg)
    n, m = oracle.n, oracle.m
    plan = boost_count(cfg.rho, cfg.delta / (n * m))
    rankings = []
    for i in range(1, n + 1):
        declared = {j: majority_value(i, j, plan, oracle) for j in range(1, m + 1)}
        if strict and len(set(declared.values())) < m:
            seen = set()
            for v in declared.values():
                if v in seen:
                    raise DeclaredUtilityTie(i, v)
                seen.add(v)
        rankings.append(sorted(declared, key=lambda j: (-declared[j], j)))
    alloc = replay_rankings(rankings, m, trace=trace)
    return _report("noisy-value", alloc, oracle, t0, truth, seed=cfg.seed, repetitions=plan.repetitions)


ALLOCATORS: dict[str, Callable[..., RunReport]] = {
    "reference": rr_reference,
    "worstcase": rr_worstcase,
    "random": rr_random,
    "fullsort": rr_fullsort_baseline,
    "repeatedmax": rr_repeatedmax_baseline,
    "noisy-comparison": rr_noisy_comparison,
    "noisy-value": rr_noisy_value,
}
NOISY = frozenset({"noisy-comparison", "noisy-value"})


def get_allocator(name: str) -> Callable[..., RunReport]:
    try:
        return ALLOCATORS[name]
    except KeyError:
        raise UnknownAllocator(f"unknown allocator {name!r}; choose from {sorted(ALLOCATORS)}") from None


def run_allocator(
    name: str,
    inst: Instance,
    cfg: Optional[NoiseConfig] = None,
    *,
    trace: bool = True,
    check: bool = True,
) -> RunReport:
    """Build a fresh oracle over ``inst`` and run allocator ``name`` on it.

    With ``check`` the report's ``success`` flag compares the output with the
    reference allocation of ``inst``.
    """
    fn = get_allocator(name)
    if name in NOISY and cfg is None:
        raise MissingNoiseConfig(f"allocator {name!r} needs a noise configuration")
    oracle = QueryOracle(inst, cfg if name in NOISY else None)
    report = fn(oracle, trace=trace, truth=inst if check else None)
    if cfg is not None and report.seed is None:
        report.seed = cfg.seed
    return report
