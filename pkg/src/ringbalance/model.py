"""Problem data model: instances, assignments, quotas, stage intervals and cost.

Colors and agents are 0-indexed. ``Instance.q[j][i]`` is the number of items of
color ``j`` held by the agent at ring position ``i``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

Rational = Union[int, Fraction]


class InstanceError(ValueError):
    """Base class for malformed problem instances."""


class NegativeCount(InstanceError):
    pass


class FewerColorsThanAgents(InstanceError):
    pass


class InvalidBase(ValueError):
    pass


@dataclass(frozen=True)
class Instance:
    n: int
    m: int
    q: tuple[tuple[int, ...], ...]
    meta: tuple[tuple[str, object], ...] = ()

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence[int]], meta: dict | None = None) -> "Instance":
        q = tuple(tuple(int(v) for v in row) for row in rows)
        if not q:
            raise InstanceError("instance needs at least one color")
        n = len(q[0])
        if any(len(row) != n for row in q):
            raise InstanceError("ragged color-count matrix")
        inst = cls(n=n, m=len(q), q=q, meta=tuple(sorted((meta or {}).items())))
        validate_instance(inst)
        return inst

    def weight(self, color: int, agent: int) -> int:
        return self.q[color][agent]

    def column(self, agent: int) -> tuple[int, ...]:
        """Weights held by one agent, indexed by color."""
        return tuple(row[agent] for row in self.q)

    @property
    def p(self) -> int:
        """Largest number of same-colored items held by any agent."""
        return max(max(row) for row in self.q)

    @property
    def total_items(self) -> int:
        return sum(sum(row) for row in self.q)

    def meta_dict(self) -> dict:
        return dict(self.meta)


def validate_instance(inst: Instance) -> None:
    if inst.n < 1:
        raise InstanceError(f"need at least one agent, got n={inst.n}")
    if inst.m != len(inst.q) or any(len(row) != inst.n for row in inst.q):
        raise InstanceError("matrix shape does not match (m, n)")
    for j, row in enumerate(inst.q):
        for i, v in enumerate(row):
            if not isinstance(v, int) or isinstance(v, bool):
                raise InstanceError(f"Q[{j}][{i}] is not an integer: {v!r}")
            if v < 0:
                raise NegativeCount(f"Q[{j}][{i}] = {v} < 0")
    if inst.m < inst.n:
        raise FewerColorsThanAgents(f"m={inst.m} colors cannot be balanced over n={inst.n} agents")


@dataclass(frozen=True)
class Assignment:
    """Total map from color index to agent index."""

    pi: tuple[int, ...]

    @classmethod
    def of(cls, pi: Iterable[int]) -> "Assignment":
        return cls(tuple(int(a) for a in pi))

    def degrees(self, n: int) -> list[int]:
        deg = [0] * n
        for a in self.pi:
            deg[a] += 1
        return deg

    def colors_of(self, agent: int) -> list[int]:
        return [j for j, a in enumerate(self.pi) if a == agent]


def is_total(a: Assignment, inst: Instance) -> bool:
    return len(a.pi) == inst.m and all(0 <= x < inst.n for x in a.pi)


def is_balanced(a: Assignment, inst: Instance) -> bool:
    if not is_total(a, inst):
        return False
    floor = inst.m // inst.n
    deg = a.degrees(inst.n)
    at_floor = sum(1 for d in deg if d == floor)
    at_ceil = sum(1 for d in deg if d == floor + 1)
    return at_floor == (floor + 1) * inst.n - inst.m and at_ceil == inst.m - floor * inst.n


def cost(a: Assignment, inst: Instance) -> int:
    """Number of items that must move so each color sits at its assignee."""
    return sum(
        inst.q[j][i]
        for j in range(inst.m)
        for i in range(inst.n)
        if i != a.pi[j]
    )


def kept_weight(a: Assignment, inst: Instance) -> int:
    return sum(inst.q[j][a.pi[j]] for j in range(inst.m))


@dataclass(frozen=True)
class Quota:
    g: int
    k: tuple[int, ...]


def quota_pivot(n: int, m: int) -> int:
    return (m // n + 1) * n - m


def quota(i: int, n: int, m: int) -> int:
    if not 0 <= i < n:
        raise IndexError(f"agent {i} outside ring of size {n}")
    return m // n if i < quota_pivot(n, m) else m // n + 1


def quotas(n: int, m: int) -> Quota:
    return Quota(g=quota_pivot(n, m), k=tuple(quota(i, n, m) for i in range(n)))


@dataclass(frozen=True)
class StageInterval:
    lo: int
    hi: float  # exclusive; math.inf for the first stage
    r: int
    base: Fraction

    def __contains__(self, w: int) -> bool:
        return self.lo <= w < self.hi

    def __str__(self) -> str:
        hi = "inf" if self.hi == math.inf else str(self.hi)
        return f"[{self.lo},{hi})"


def _rounded(x: Fraction, base: Fraction) -> int:
    # ceiling unless the value has dropped to 1/base or below
    return math.ceil(x) if x > 1 / base else 0


def stage_intervals(p_hat: int, base: Rational = 2) -> list[StageInterval]:
    """Weight intervals for the assignment stages, heaviest first.

    Thresholds are ``{p_hat / base**r}`` where ``{x}`` rounds up, or to zero once
    ``x <= 1/base``. Intervals that round to empty are dropped, so the result has
    strictly decreasing bounds; the first is unbounded above and the last is
    ``[0, 1)``. For ``base == 2`` and ``p_hat`` a power of two this is exactly
    ``[p/2, inf), [p/4, p/2), ..., [1, 2), [0, 1)``.
    """
    base = Fraction(base)
    if base <= 1:
        raise InvalidBase(f"interval base must exceed 1, got {base}")
    if p_hat < base:
        raise ValueError(f"p_hat={p_hat} must be at least the base {base}")
    thresholds = []
    x = Fraction(p_hat)
    while True:
        t = _rounded(x, base)
        thresholds.append(t)
        if t == 0:
            break
        x /= base
    out: list[StageInterval] = []
    for r in range(len(thresholds) - 1):
        lo = thresholds[r + 1]
        hi = math.inf if r == 0 else thresholds[r]
        if lo < hi:
            out.append(StageInterval(lo=lo, hi=hi, r=len(out), base=base))
    return out


def approximation_ratio(cost_alg: int, cost_opt: int) -> Fraction | float:
    if cost_opt < 0 or cost_alg < 0:
        raise ValueError("costs are non-negative")
    if cost_opt == 0:
        return Fraction(1) if cost_alg == 0 else math.inf
    return Fraction(cost_alg, cost_opt)
