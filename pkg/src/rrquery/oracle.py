"""Instrumented query access to an instance.

Every comparison and value query made anywhere in the library goes through a
:class:`QueryOracle`, which counts it. Batched methods (``*_many``,
``*_repeat``) exist for speed only: a batch of ``k`` queries is billed exactly
``k`` queries and behaves like ``k`` consecutive single calls.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Instance, Utility
from .errors import (
    AdversaryNotApplicable,
    BadFailureBudget,
    BadNoiseLevel,
    OutOfRange,
    SameItemCompared,
    ValidationError,
)

UINT64_MAX = 2**64 - 1


@dataclass(frozen=True)
class QueryTranscript:
    comparison_count: int
    value_count: int
    per_agent: dict[int, tuple[int, int]]

    @property
    def total(self) -> int:
        return self.comparison_count + self.value_count

    def to_dict(self) -> dict:
        return {
            "comparison_count": self.comparison_count,
            "value_count": self.value_count,
            "per_agent": [list(self.per_agent[i]) for i in sorted(self.per_agent)],
        }


# --- adversaries -----------------------------------------------------------


class Adversary:
    """Chooses the answer to a corrupted value query.

    Subclasses see the whole instance and the ordered history of earlier
    noisy value queries as ``(agent, item, answer)`` tuples.
    """

    name = "none"

    def check(self, inst: Instance) -> None:
        pass

    def corrupt(self, inst: Instance, agent: int, item: int, history: list, rng) -> Utility:
        raise NotImplementedError


class UniformRandomValue(Adversary):
    """Answers an integer drawn uniformly from ``1..m+1``."""

    name = "uniform-random-value"

    def corrupt(self, inst, agent, item, history, rng):
        return int(rng.integers(1, inst.m + 2))


class PlusOneSwap(Adversary):
    """Swaps any true value for ``m + 1``, and ``m + 1`` for the agent's missing value.

    Only defined when each agent's utility set is ``{1..m}`` or
    ``{1..m+1}`` minus one value of ``{1..m}``.
    """

    name = "plus-one-swap"

    def check(self, inst):
        self._missing = []
        full = set(range(1, inst.m + 1))
        for i, row in enumerate(inst.utilities, start=1):
            values = set(row)
            if values == full:
                self._missing.append(None)
                continue
            extra = values - full
            gone = full - values
            if extra != {inst.m + 1} or len(gone) != 1:
                raise AdversaryNotApplicable(
                    f"plus-one-swap needs agent utilities [m] or [m+1] minus one value; agent {i} differs"
                )
            self._missing.append(gone.pop())

    def corrupt(self, inst, agent, item, history, rng):
        if inst.utility(agent, item) != inst.m + 1:
            return inst.m + 1
        return self._missing[agent - 1]


class PairSwap(Adversary):
    """Answers the agent's value for the other item of the pair ``(2k-1, 2k)``."""

    name = "pair-swap"

    def check(self, inst):
        if inst.m % 2:
            raise AdversaryNotApplicable("pair-swap needs an even number of items")

    def corrupt(self, inst, agent, item, history, rng):
        partner = item + 1 if item % 2 else item - 1
        return inst.utility(agent, partner)


ADVERSARIES: dict[str, type[Adversary]] = {
    "uniform-random-value": UniformRandomValue,
    "plus-one-swap": PlusOneSwap,
    "pair-swap": PairSwap,
}


def canonical_adversary(name: Optional[str]) -> Optional[str]:
    """Map ``PlusOneSwap``, ``plus_one_swap``, ``plus-one-swap`` ... to one spelling."""
    if name is None:
        return None
    key = "".join(ch for ch in str(name).lower() if ch.isalnum())
    if key in ("", "none", "null"):
        return None
    for canon in ADVERSARIES:
        if canon.replace("-", "") == key:
            return canon
    raise ValidationError(f"unknown adversary {name!r}; choose from {sorted(ADVERSARIES)} or none")


@dataclass(frozen=True)
class NoiseConfig:
    """Noise level, failure budget, value adversary and RNG seed for one run.

    ``rho = 0`` is accepted and means noiseless answers drawn through the
    noisy code paths.
    """

    rho: float
    delta: float
    adversary: Optional[str] = None
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.rho < 0.5:
            raise BadNoiseLevel(f"rho must lie in [0, 1/2), got {self.rho}")
        if not 0 < self.delta < 0.5:
            raise BadFailureBudget(f"delta must lie in (0, 1/2), got {self.delta}")
        if not 0 <= int(self.seed) <= UINT64_MAX:
            raise ValidationError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        object.__setattr__(self, "rho", float(self.rho))
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "adversary", canonical_adversary(self.adversary))

    def with_seed(self, seed: int) -> "NoiseConfig":
        return NoiseConfig(self.rho, self.delta, self.adversary, seed)

    def to_dict(self) -> dict:
        return {"rho": self.rho, "delta": self.delta, "adversary": self.adversary or "none", "seed": self.seed}

    @classmethod
    def from_dict(cls, data: dict) -> "NoiseConfig":
        try:
            return cls(
                rho=float(data["rho"]),
                delta=float(data["delta"]),
                adversary=data.get("adversary"),
                seed=int(data.get("seed", 0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"malformed noise config: {exc}") from exc


def make_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed)))


# --- the oracle --------------------------------------------------------------


class QueryOracle:
    """Counted query access to ``inst``; optionally noisy per ``noise``.

    Single-owner: the counters and RNG are mutable, so give each concurrent
    worker its own oracle.
    """

    def __init__(self, inst: Instance, noise: Optional[NoiseConfig] = None):
        self.instance = inst
        self.noise = noise
        self.n, self.m = inst.n, inst.m
        # rank[i, j] is larger for better items; column 0 is padding for 1-indexing
        rank = np.zeros((inst.n, inst.m + 1), dtype=np.int64)
        for i in range(inst.n):
            order = inst.ranking(i + 1)
            rank[i, list(order)] = np.arange(inst.m, 0, -1)
        self._rank = rank
        self._rank_rows = rank.tolist()
        self._cmp = [0] * inst.n
        self._val = [0] * inst.n
        self.history: list[tuple[int, int, Utility]] = []
        self.rho = noise.rho if noise is not None else 0.0
        self._rng = make_rng(noise.seed if noise is not None else 0)
        self._adversary: Adversary = UniformRandomValue()
        if noise is not None and noise.adversary is not None:
            self._adversary = ADVERSARIES[noise.adversary]()
        self._adversary.check(inst)

    # -- bookkeeping

    def reset_transcript(self) -> None:
        self._cmp = [0] * self.n
        self._val = [0] * self.n

    def snapshot_transcript(self) -> QueryTranscript:
        per = {i + 1: (self._cmp[i], self._val[i]) for i in range(self.n)}
        return QueryTranscript(sum(self._cmp), sum(self._val), per)

    @property
    def comparison_count(self) -> int:
        return sum(self._cmp)

    @property
    def value_count(self) -> int:
        return sum(self._val)

    def _agent(self, agent: int) -> int:
        if not 1 <= agent <= self.n:
            raise OutOfRange(f"agent {agent} not in 1..{self.n}")
        return agent - 1

    def _item(self, j: int) -> None:
        if not 1 <= j <= self.m:
            raise OutOfRange(f"item {j} not in 1..{self.m}")

    def _pair(self, agent, j, jp) -> int:
        a = self._agent(agent)
        self._item(j)
        self._item(jp)
        if j == jp:
            raise SameItemCompared(f"item {j} compared with itself")
        return a

    def _arrays(self, agent, a, b):
        ai = self._agent(agent)
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        a, b = np.broadcast_arrays(a, b)
        if a.size:
            lo = min(a.min(), b.min())
            hi = max(a.max(), b.max())
            if lo < 1 or hi > self.m:
                raise OutOfRange(f"items must lie in 1..{self.m}")
            if np.any(a == b):
                raise SameItemCompared("an item was compared with itself")
        return ai, a, b

    # -- noiseless

    def compare(self, agent: int, j: int, jp: int) -> bool:
        """True iff ``agent`` strictly prefers item ``j`` to item ``jp``."""
        m = self.m
        if not (0 < agent <= self.n and 0 < j <= m and 0 < jp <= m) or j == jp:
            self._pair(agent, j, jp)  # raises the precise error
        a = agent - 1
        self._cmp[a] += 1
        row = self._rank_rows[a]
        return row[j] > row[jp]

    def compare_many(self, agent: int, a, b, *, check: bool = True) -> np.ndarray:
        """Elementwise ``compare`` over broadcast item arrays; bills one query per pair.

        ``check=False`` skips argument validation for callers that pass
        arrays of distinct in-range items.
        """
        if check:
            ai, a, b = self._arrays(agent, a, b)
            size = a.size
        else:
            ai = agent - 1
            size = max(np.size(a), np.size(b))
        self._cmp[ai] += size
        row = self._rank[ai]
        return row[a] > row[b]

    def value(self, agent: int, j: int) -> Utility:
        a = self._agent(agent)
        self._item(j)
        self._val[a] += 1
        return self.instance.utilities[a][j - 1]

    # -- noisy

    def noisy_compare(self, agent: int, j: int, jp: int) -> bool:
        a = self._pair(agent, j, jp)
        self._cmp[a] += 1
        row = self._rank_rows[a]
        return (row[j] > row[jp]) != (self._rng.random() < self.rho)

    def noisy_compare_many(self, agent: int, a, b) -> np.ndarray:
        ai, a, b = self._arrays(agent, a, b)
        self._cmp[ai] += a.size
        row = self._rank[ai]
        return (row[a] > row[b]) ^ (self._rng.random(a.shape) < self.rho)

    def noisy_compare_repeat(self, agent: int, j: int, jp: int, times: int) -> np.ndarray:
        """``times`` independent noisy answers to the same comparison."""
        a = self._pair(agent, j, jp)
        self._cmp[a] += times
        row = self._rank_rows[a]
        return (row[j] > row[jp]) ^ (self._rng.random(times) < self.rho)

    def noisy_value(self, agent: int, j: int) -> Utility:
        return self.noisy_value_repeat(agent, j, 1)[0]

    def noisy_value_repeat(self, agent: int, j: int, times: int) -> list[Utility]:
        """``times`` independent noisy answers to the value query ``(agent, j)``."""
        a = self._agent(agent)
        self._item(j)
        self._val[a] += times
        truth = self.instance.utilities[a][j - 1]
        corrupted = self._rng.random(times) < self.rho
        answers = []
        for bad in corrupted.tolist():
            ans = truth
            if bad:
                ans = self._adversary.corrupt(self.instance, agent, j, self.history, self._rng)
            self.history.append((agent, j, ans))
            answers.append(ans)
        return answers
