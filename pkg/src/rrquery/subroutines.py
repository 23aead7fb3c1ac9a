"""Comparison-based building blocks: selection, quantiles, maximum, sorting,
and their majority-vote (boosted) counterparts for noisy oracles.

Item sets travel as 1-D ``int64`` numpy arrays of item ids. Every comparison
is issued through the oracle passed in, so transcripts see all of them.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import BadFailureBudget, BadNoiseLevel, BadRank, EmptySet, ValidationError

# Inputs this small pick the middle element as pivot.
SMALL = 8
# Below this size, comparisons go one at a time (numpy call overhead dominates).
SCALAR = 48
# A step leaving more than this fraction of its input triggers a median-of-medians step.
PROGRESS = 0.75

# Knuth's 9-comparator sorting network for 5 inputs.
NETWORK5 = ((0, 1), (3, 4), (2, 4), (2, 3), (0, 3), (0, 2), (1, 4), (1, 3), (1, 2))

_EMPTY = np.empty(0, dtype=np.int64)


def _as_items(S) -> np.ndarray:
    return np.array(S, dtype=np.int64).reshape(-1)


@dataclass(frozen=True)
class QuantilePartition:
    """Buckets ordered best-first: every item of a bucket beats every item of the next."""

    buckets: tuple[np.ndarray, ...]

    def as_sets(self) -> list[set[int]]:
        return [set(b.tolist()) for b in self.buckets]

    def __len__(self):
        return len(self.buckets)


@dataclass(frozen=True)
class BoostPlan:
    repetitions: int

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValidationError("a boost plan needs at least one repetition")


# --- maximum / minimum -------------------------------------------------------


def _tournament(agent, items: np.ndarray, oracle, best: bool) -> int:
    if len(items) <= SCALAR:
        cmp = oracle.compare
        cur = items.tolist()
        while len(cur) > 1:
            h = len(cur) // 2
            nxt = []
            for x, y in zip(cur[:h], cur[h : 2 * h]):
                nxt.append(x if cmp(agent, x, y) == best else y)
            if len(cur) % 2:
                nxt.append(cur[-1])
            cur = nxt
        return cur[0]
    cur = items
    while len(cur) > 1:
        h = len(cur) // 2
        a, b = cur[:h], cur[h : 2 * h]
        a_wins = oracle.compare_many(agent, a, b, check=False)
        if not best:
            a_wins = ~a_wins
        nxt = np.where(a_wins, a, b)
        if len(cur) % 2:
            nxt = np.append(nxt, cur[-1])
        cur = nxt
    return int(cur[0])


def find_best(agent: int, S, oracle) -> int:
    """The agent's favourite item of ``S``, found with exactly ``|S| - 1`` comparisons."""
    items = _as_items(S)
    if len(items) == 0:
        raise EmptySet("find_best on an empty set")
    return _tournament(agent, items, oracle, best=True)


def find_worst(agent: int, S, oracle) -> int:
    items = _as_items(S)
    if len(items) == 0:
        raise EmptySet("find_worst on an empty set")
    return _tournament(agent, items, oracle, best=False)


# --- sorting -----------------------------------------------------------------


def merge_sort(items: Sequence[int], better: Callable[[int, int], bool]) -> list[int]:
    """Top-down merge sort, best first. Uses at most ``k * ceil(log2 k)`` calls to ``better``."""
    items = list(items)
    if len(items) <= 1:
        return items
    mid = len(items) // 2
    left = merge_sort(items[:mid], better)
    right = merge_sort(items[mid:], better)
    out = []
    i = j = 0
    while i < len(left) and j < len(right):
        if better(left[i], right[j]):
            out.append(left[i])
            i += 1
        else:
            out.append(right[j])
            j += 1
    out.extend(left[i:])
    out.extend(right[j:])
    return out


def sort_items(agent: int, S, oracle) -> list[int]:
    """Items of ``S`` in strictly decreasing preference of ``agent``."""
    cmp = oracle.compare
    return merge_sort(_as_items(S).tolist(), lambda x, y: cmp(agent, x, y))


# --- selection ---------------------------------------------------------------


def _network_sort_rows(agent, groups: np.ndarray, oracle) -> None:
    if len(groups) * 5 <= SCALAR:
        cmp = oracle.compare
        for row in groups:
            for a, b in NETWORK5:
                if not cmp(agent, int(row[a]), int(row[b])):
                    row[a], row[b] = row[b], row[a]
        return
    for a, b in NETWORK5:
        keep = oracle.compare_many(agent, groups[:, a], groups[:, b], check=False)
        swap = ~keep
        tmp = groups[swap, a].copy()
        groups[swap, a] = groups[swap, b]
        groups[swap, b] = tmp


def _mom_pivot(agent, cur: np.ndarray, oracle) -> int:
    s = len(cur)
    if s <= 5:
        order = sort_items(agent, cur, oracle)
        return order[(len(order) - 1) // 2]
    g = s // 5
    groups = cur[: 5 * g].reshape(g, 5).copy()
    _network_sort_rows(agent, groups, oracle)
    medians = groups[:, 2]
    rest = cur[5 * g :]
    if len(rest):
        order = sort_items(agent, rest, oracle)
        medians = np.append(medians, order[(len(order) - 1) // 2])
    return _split(agent, medians, (len(medians) + 1) // 2, oracle, "mom", want_kth=True)[2]


def _sample_pivot(agent, cur: np.ndarray, k: int, oracle) -> int:
    # Aim past rank k on the short side so the next step usually keeps only
    # about min(k, s - k) items.
    s = len(cur)
    q = min(s, int(math.ceil(s ** (2.0 / 3.0))))
    sample = cur[(np.arange(q) * s) // q]
    margin = int(math.ceil(math.sqrt(q)))
    est = k * q / s
    t = est + margin if 2 * k <= s else est - margin
    t = min(q, max(1, int(round(t))))
    return _split(agent, sample, t, oracle, "sample", want_kth=True)[2]


def _partition(agent, cur: np.ndarray, p: int, oracle):
    others = cur[cur != p]
    if len(others) <= SCALAR:
        cmp = oracle.compare
        above, below = [], []
        for x in others.tolist():
            (above if cmp(agent, x, p) else below).append(x)
        return np.array(above, dtype=np.int64), np.array(below, dtype=np.int64)
    better = oracle.compare_many(agent, others, p, check=False)
    return others[better], others[~better]


def _split(agent, items: np.ndarray, k: int, oracle, rule: str, want_kth: bool = False):
    """Partition ``items`` into the top ``k`` and the rest; optionally also
    return the ``k``-th best item. ``0 < k <= len(items)``."""
    ups: list[np.ndarray] = []
    downs: list[np.ndarray] = []
    kth = None
    cur = items
    use_mom = rule == "mom"
    while True:
        s = len(cur)
        if k == 0:
            downs.append(cur)
            break
        if k == s:
            ups.append(cur)
            if want_kth:
                kth = find_worst(agent, cur, oracle)
            break
        if s <= SMALL:
            p = int(cur[s // 2])
        elif use_mom:
            p = _mom_pivot(agent, cur, oracle)
        else:
            p = _sample_pivot(agent, cur, k, oracle)
        above, below = _partition(agent, cur, p, oracle)
        pv = np.array([p], dtype=np.int64)
        a = len(above)
        if a + 1 == k:
            ups += [above, pv]
            downs.append(below)
            kth = p
            break
        if a >= k:
            downs += [below, pv]
            nxt = above
        else:
            ups += [above, pv]
            k -= a + 1
            nxt = below
        if rule != "mom":
            use_mom = len(nxt) > PROGRESS * s
        cur = nxt
    up = np.sort(np.concatenate(ups)) if ups else _EMPTY
    down = np.sort(np.concatenate(downs)) if downs else _EMPTY
    return up, down, kth


def select_top(agent: int, S, ell: int, oracle, pivot: str = "sample"):
    """Split ``S`` into the agent's ``ell`` favourite items and the rest.

    Returns ``(S_up, S_down)`` as sorted id arrays. Deterministic, and
    linear in ``|S|`` in the worst case: the default ``pivot="sample"``
    picks pivots from an evenly spaced sample and falls back to a
    median-of-medians pivot after any step that discards too little;
    ``pivot="mom"`` uses median-of-medians throughout.
    """
    items = _as_items(S)
    if pivot not in ("sample", "mom"):
        raise ValidationError(f"unknown pivot rule {pivot!r}")
    if not 1 <= ell <= len(items):
        raise BadRank(f"rank {ell} not in 1..{len(items)}")
    if ell == len(items):
        return np.sort(items), _EMPTY.copy()
    up, down, _ = _split(agent, items, ell, oracle, pivot)
    return up, down


def quantiles(agent: int, items, n: int, oracle, pivot: str = "sample") -> QuantilePartition:
    """Split ``items`` into best-first buckets of size at most ``n``.

    Halves recursively: any set larger than ``n`` is split into its top
    ``floor(|S|/2)`` items and the rest.
    """
    if n < 1:
        raise ValidationError("bucket cap must be positive")
    out: list[np.ndarray] = []
    stack = [np.sort(_as_items(items))]
    while stack:
        S = stack.pop()
        if len(S) <= n:
            if len(S):
                out.append(S)
            continue
        up, down = select_top(agent, S, len(S) // 2, oracle, pivot)
        stack.append(down)
        stack.append(up)
    return QuantilePartition(tuple(out))


# --- noise hardening ---------------------------------------------------------


def boost_count(rho: float, delta0: float) -> BoostPlan:
    """Repetitions whose majority errs with probability at most ``delta0``:
    ``ceil(ln(1/delta0) / (2 (1/2 - rho)^2))``."""
    if not 0 <= rho < 0.5:
        raise BadNoiseLevel(f"rho must lie in [0, 1/2), got {rho}")
    if not 0 < delta0 < 1:
        raise BadFailureBudget(f"delta0 must lie in (0, 1), got {delta0}")
    reps = math.ceil(-math.log(delta0) / (2.0 * (0.5 - rho) ** 2))
    return BoostPlan(max(1, reps))


def boosted_compare(agent: int, j: int, jp: int, plan: BoostPlan, oracle) -> bool:
    """Majority of ``plan.repetitions`` noisy comparisons; an even split answers False."""
    ones = int(oracle.noisy_compare_repeat(agent, j, jp, plan.repetitions).sum())
    return 2 * ones > plan.repetitions


def majority_value(agent: int, j: int, plan: BoostPlan, oracle):
    """Most frequent answer among ``plan.repetitions`` noisy value queries;
    ties go to the smallest value."""
    counts = Counter(oracle.noisy_value_repeat(agent, j, plan.repetitions))
    top = max(counts.values())
    return min(v for v, c in counts.items() if c == top)


def noisy_sort(agent: int, S, rho: float, delta0: float, oracle) -> list[int]:
    """Merge sort over boosted comparisons.

    Each comparison gets failure budget ``delta0 / (k ceil(log2 k))`` for
    ``k = |S|``, so by a union bound the whole order is right with
    probability at least ``1 - delta0``.
    """
    items = _as_items(S).tolist()
    k = len(items)
    if k <= 1:
        return items
    plan = boost_count(rho, delta0 / (k * math.ceil(math.log2(k))))
    return merge_sort(items, lambda x, y: boosted_compare(agent, x, y, plan, oracle))
