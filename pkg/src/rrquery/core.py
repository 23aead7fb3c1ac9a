"""Domain types and the brute-force round-robin semantics.

Agents and items are 1-indexed everywhere in the public API: agent ``i`` owns
row ``i - 1`` of the utility table and item ``j`` is column ``j - 1``.
"""

from __future__ import annotations

import json
import numbers
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Optional, Sequence

from .errors import (
    DuplicateUtility,
    FewerItemsThanAgents,
    InvalidInstance,
    MalformedAllocation,
    TooFewAgents,
)

Utility = numbers.Rational
PickEvent = tuple[int, int, int]  # (round, agent, item)


def as_exact(value: Any) -> Utility:
    """Coerce a utility to an exact int or Fraction.

    Floats are read through their shortest decimal repr, so ``0.1`` becomes
    ``Fraction(1, 10)`` rather than the binary approximation.
    """
    if isinstance(value, bool):
        raise InvalidInstance(f"utility {value!r} is not a number")
    if isinstance(value, int):
        return value
    if isinstance(value, Fraction):
        return value.numerator if value.denominator == 1 else value
    if isinstance(value, float):
        if value != value or value in (float("inf"), float("-inf")):
            raise InvalidInstance(f"utility {value!r} is not finite")
        return as_exact(Fraction(repr(value)))
    if isinstance(value, str):
        try:
            return as_exact(Fraction(value))
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidInstance(f"cannot parse utility {value!r}") from exc
    if isinstance(value, numbers.Integral):
        return int(value)
    if isinstance(value, numbers.Rational):
        return as_exact(Fraction(value.numerator, value.denominator))
    raise InvalidInstance(f"utility {value!r} has unsupported type {type(value).__name__}")


def _check(n: int, m: int, rows: Sequence[Sequence[Utility]]) -> None:
    if n < 2:
        raise TooFewAgents(f"need at least 2 agents, got n={n}")
    if m < n:
        raise FewerItemsThanAgents(f"need m >= n, got n={n}, m={m}")
    if len(rows) != n:
        raise InvalidInstance(f"expected {n} utility rows, got {len(rows)}")
    for i, row in enumerate(rows, start=1):
        if len(row) != m:
            raise InvalidInstance(f"agent {i}: expected {m} utilities, got {len(row)}")
        seen = set()
        for v in row:
            if v < 0:
                raise InvalidInstance(f"agent {i}: negative utility {v}")
            if v in seen:
                raise DuplicateUtility(i, v)
            seen.add(v)


@dataclass(frozen=True)
class Instance:
    """Strict additive preferences of ``n`` agents over ``m`` items."""

    n: int
    m: int
    utilities: tuple[tuple[Utility, ...], ...]
    _rankings: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        rows = tuple(tuple(as_exact(v) for v in row) for row in self.utilities)
        _check(self.n, self.m, rows)
        object.__setattr__(self, "utilities", rows)
        rankings = tuple(
            tuple(sorted(range(1, self.m + 1), key=lambda j, r=row: r[j - 1], reverse=True))
            for row in rows
        )
        object.__setattr__(self, "_rankings", rankings)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[Any]]) -> "Instance":
        rows = [list(r) for r in rows]
        return cls(n=len(rows), m=len(rows[0]) if rows else 0, utilities=rows)

    def utility(self, agent: int, item: int) -> Utility:
        return self.utilities[agent - 1][item - 1]

    def ranking(self, agent: int) -> tuple[int, ...]:
        """Items of ``agent`` ordered best-first."""
        return self._rankings[agent - 1]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "utilities": [[_json_value(v) for v in row] for row in self.utilities],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Instance":
        try:
            n, m, rows = int(data["n"]), int(data["m"]), data["utilities"]
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInstance(f"malformed instance document: {exc}") from exc
        if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
            raise InvalidInstance("'utilities' must be a list of lists")
        return cls(n=n, m=m, utilities=rows)


def _json_value(v: Utility):
    if isinstance(v, int):
        return v
    return f"{v.numerator}/{v.denominator}"


def validate_instance(inst: Instance) -> None:
    """Raise if ``inst`` breaks any Instance invariant; return None otherwise."""
    rows = tuple(tuple(as_exact(v) for v in row) for row in inst.utilities)
    _check(inst.n, inst.m, rows)


def bundle_sizes(n: int, m: int) -> list[int]:
    """Number of items agent ``i`` receives under cyclic picking: ``1 + (m - i) // n``."""
    return [1 + (m - i) // n for i in range(1, n + 1)]


@dataclass(frozen=True)
class Allocation:
    """Disjoint bundles of items, plus the pick-by-pick trace when available.

    Equality compares bundles only; two runs that reach the same bundles are
    the same allocation regardless of whether they kept a trace.
    """

    bundles: tuple[tuple[int, ...], ...]
    trace: Optional[tuple[PickEvent, ...]] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "bundles", tuple(tuple(sorted(b)) for b in self.bundles))
        if self.trace is not None:
            object.__setattr__(self, "trace", tuple(tuple(e) for e in self.trace))

    @property
    def n(self) -> int:
        return len(self.bundles)

    def owner(self) -> dict[int, int]:
        return {j: i for i, b in enumerate(self.bundles, start=1) for j in b}

    def check(self, m: int) -> None:
        """Raise MalformedAllocation unless the bundles partition ``[m]``
        with round-robin bundle sizes and a consistent trace."""
        items = [j for b in self.bundles for j in b]
        if sorted(items) != list(range(1, m + 1)):
            raise MalformedAllocation("bundles do not partition the item set")
        sizes = [len(b) for b in self.bundles]
        if sizes != bundle_sizes(self.n, m):
            raise MalformedAllocation(f"bundle sizes {sizes} do not match cyclic picking")
        if self.trace is None:
            return
        replay: list[set[int]] = [set() for _ in self.bundles]
        for t, (rnd, agent, item) in enumerate(self.trace):
            if (rnd, agent) != (t // self.n + 1, t % self.n + 1):
                raise MalformedAllocation(f"pick {t} out of cyclic order: {(rnd, agent, item)}")
            replay[agent - 1].add(item)
        if [sorted(b) for b in replay] != [list(b) for b in self.bundles]:
            raise MalformedAllocation("trace does not reproduce the bundles")

    def to_dict(self) -> dict:
        out: dict = {"bundles": [list(b) for b in self.bundles]}
        if self.trace is not None:
            out["trace"] = [list(e) for e in self.trace]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Allocation":
        try:
            bundles = [[int(j) for j in b] for b in data["bundles"]]
            trace = data.get("trace")
            if trace is not None:
                trace = [tuple(int(x) for x in e) for e in trace]
                if any(len(e) != 3 for e in trace):
                    raise ValueError("trace events must be [round, agent, item]")
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedAllocation(f"malformed allocation document: {exc}") from exc
        return cls(bundles=bundles, trace=trace)


def replay_rankings(
    rankings: Sequence[Sequence[int]], m: int, *, trace: bool = True
) -> Allocation:
    """Run cyclic picking when each agent's remaining-item order is known.

    ``rankings[i]`` lists (at least) every item agent ``i + 1`` could still
    want, best first. No queries are made; callers supply the orders.
    """
    n = len(rankings)
    taken = bytearray(m + 1)
    cursor = [0] * n
    bundles: list[list[int]] = [[] for _ in range(n)]
    events: list[PickEvent] = []
    for t in range(m):
        i = t % n
        order, c = rankings[i], cursor[i]
        while taken[order[c]]:
            c += 1
        j = order[c]
        cursor[i] = c + 1
        taken[j] = 1
        bundles[i].append(j)
        if trace:
            events.append((t // n + 1, i + 1, j))
    return Allocation(bundles=bundles, trace=events if trace else None)


def round_robin_reference(inst: Instance, *, trace: bool = True) -> Allocation:
    """The ground-truth round-robin allocation, read straight off the utilities."""
    return replay_rankings([inst.ranking(i) for i in range(1, inst.n + 1)], inst.m, trace=trace)


@dataclass
class RunReport:
    """One allocator run: its output, query bill, and provenance."""

    allocation: Allocation
    transcript: Any  # oracle.QueryTranscript
    algorithm: str
    seed: Optional[int] = None
    elapsed: float = 0.0
    success: Optional[bool] = None
    meta: dict = field(default_factory=dict)

    def to_dict(self, *, timing: bool = False) -> dict:
        out = {
            "algorithm": self.algorithm,
            "seed": self.seed,
            "allocation": self.allocation.to_dict(),
            "transcript": self.transcript.to_dict(),
        }
        if self.meta:
            out["meta"] = dict(self.meta)
        if self.success is not None:
            out["success"] = int(self.success)
        if timing:
            out["elapsed"] = self.elapsed
        return out


def load_json(path) -> Any:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def dump_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ": "), indent=2) + "\n"
