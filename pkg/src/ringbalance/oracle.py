"""Exact optimal balanced assignments.

The primary solver is a min-cost flow (successive shortest paths with
Dijkstra and node potentials) on the network

    source -> color (cap 1) -> agent (cap 1, cost P - Q[j][i])
    agent -> sink (cap floor(m/n))
    agent -> collector (cap 1) -> sink (cap m - n*floor(m/n))

which admits exactly the balanced colorings. Minimising cost maximises the
kept weight, and cost = total items - kept weight. An exhaustive enumerator
and a slot-expanded linear assignment (scipy) serve as independent checks.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

from .model import Assignment, Instance, cost

EXHAUSTIVE_LIMIT = 10 ** 6


class TooLarge(ValueError):
    pass


class NotFamilyInstance(ValueError):
    pass


@dataclass
class FlowNetwork:
    """Residual graph stored as parallel edge arrays; edge ``e ^ 1`` is the reverse of ``e``."""

    size: int
    head: list[int]
    cap: list[int]
    cost: list[int]
    adj: list[list[int]]

    @classmethod
    def empty(cls, size: int) -> "FlowNetwork":
        return cls(size, [], [], [], [[] for _ in range(size)])

    def add_arc(self, u: int, v: int, cap: int, cost: int) -> int:
        e = len(self.head)
        self.head += [v, u]
        self.cap += [cap, 0]
        self.cost += [cost, -cost]
        self.adj[u].append(e)
        self.adj[v].append(e + 1)
        return e

    def min_cost_flow(self, s: int, t: int, want: int) -> tuple[int, int]:
        """Push up to ``want`` units from s to t; returns (flow, cost). Arc costs must start non-negative."""
        pot = [0] * self.size
        flow = total = 0
        while flow < want:
            dist = [math.inf] * self.size
            via = [-1] * self.size
            dist[s] = 0
            heap = [(0, s)]
            while heap:
                d, u = heapq.heappop(heap)
                if d > dist[u]:
                    continue
                for e in self.adj[u]:
                    if self.cap[e] <= 0:
                        continue
                    v = self.head[e]
                    nd = d + self.cost[e] + pot[u] - pot[v]
                    if nd < dist[v]:
                        dist[v] = nd
                        via[v] = e
                        heapq.heappush(heap, (nd, v))
            if dist[t] == math.inf:
                break
            for v in range(self.size):
                if dist[v] < math.inf:
                    pot[v] += dist[v]
            push = want - flow
            v = t
            while v != s:
                e = via[v]
                push = min(push, self.cap[e])
                v = self.head[e ^ 1]
            v = t
            while v != s:
                e = via[v]
                self.cap[e] -= push
                self.cap[e ^ 1] += push
                total += push * self.cost[e]
                v = self.head[e ^ 1]
            flow += push
        return flow, total


def build_network(inst: Instance) -> tuple[FlowNetwork, dict[tuple[int, int], int]]:
    n, m = inst.n, inst.m
    floor = m // n
    extra = m - floor * n
    big = inst.p
    src, collector, sink = 0, m + n + 1, m + n + 2
    net = FlowNetwork.empty(m + n + 3)
    arcs = {}
    for j in range(m):
        net.add_arc(src, 1 + j, 1, 0)
        for i in range(n):
            arcs[j, i] = net.add_arc(1 + j, 1 + m + i, 1, big - inst.q[j][i])
    for i in range(n):
        net.add_arc(1 + m + i, sink, floor, 0)
        if extra:
            net.add_arc(1 + m + i, collector, 1, 0)
    if extra:
        net.add_arc(collector, sink, extra, 0)
    return net, arcs


def optimal_assignment(inst: Instance) -> tuple[Assignment, int]:
    net, arcs = build_network(inst)
    flow, _ = net.min_cost_flow(0, inst.m + inst.n + 2, inst.m)
    if flow != inst.m:
        raise RuntimeError("balanced flow network did not saturate")
    pi = [-1] * inst.m
    for (j, i), e in arcs.items():
        if net.cap[e] == 0:
            pi[j] = i
    a = Assignment.of(pi)
    return a, cost(a, inst)


def optimal_cost(inst: Instance) -> int:
    return optimal_assignment(inst)[1]


def max_kept_weight(inst: Instance) -> int:
    """Kept weight of an optimum, read from the flow cost alone."""
    net, _ = build_network(inst)
    _, total = net.min_cost_flow(0, inst.m + inst.n + 2, inst.m)
    return inst.m * inst.p - total


def count_balanced(n: int, m: int) -> int:
    floor = m // n
    extra = m - floor * n
    ways = math.comb(n, extra) * math.factorial(m)
    ways //= math.factorial(floor) ** (n - extra) * math.factorial(floor + 1) ** extra
    return ways


def exhaustive_optimal(inst: Instance, limit: int = EXHAUSTIVE_LIMIT) -> tuple[Assignment, int]:
    """Enumerate every balanced coloring (with bound pruning) and return a cheapest one."""
    n, m = inst.n, inst.m
    if count_balanced(n, m) > limit:
        raise TooLarge(f"{count_balanced(n, m)} balanced colorings exceed the limit of {limit}")
    floor = m // n
    extra = m - floor * n
    deg = [0] * n
    pi = [0] * m
    best_kept = -1
    best_pi: list[int] = []
    # optimistic bound: every remaining color kept at its largest weight
    tail = [0] * (m + 1)
    for j in range(m - 1, -1, -1):
        tail[j] = tail[j + 1] + max(inst.q[j])
    full = 0

    def go(j: int, kept: int) -> None:
        nonlocal best_kept, best_pi, full
        if kept + tail[j] <= best_kept:
            return
        if j == m:
            best_kept = kept
            best_pi = pi[:]
            return
        for i in range(n):
            d = deg[i]
            if d < floor or (d == floor and full < extra):
                deg[i] += 1
                if d == floor:
                    full += 1
                pi[j] = i
                go(j + 1, kept + inst.q[j][i])
                if d == floor:
                    full -= 1
                deg[i] -= 1

    go(0, 0)
    a = Assignment.of(best_pi)
    return a, cost(a, inst)


def lsa_optimal_cost(inst: Instance) -> int:
    """Cross-check via scipy's linear assignment on per-agent slots."""
    import numpy as np
    from scipy.optimize import linear_sum_assignment

    n, m = inst.n, inst.m
    floor = m // n
    bonus = inst.total_items + 1  # makes every floor slot worth filling first
    q = np.asarray(inst.q, dtype=np.int64)
    cols = []
    for i in range(n):
        cols += [(i, True)] * floor + [(i, False)]
    gain = np.empty((m, len(cols)), dtype=np.int64)
    for c, (i, is_floor) in enumerate(cols):
        gain[:, c] = q[:, i] + (bonus if is_floor else 0)
    rows, picked = linear_sum_assignment(gain, maximize=True)
    kept = int(gain[rows, picked].sum()) - bonus * n * floor
    return inst.total_items - kept


def family_pairs(inst: Instance) -> list[dict]:
    meta = inst.meta_dict()
    if meta.get("family") not in ("I1", "I2") or "pairs" not in meta:
        raise NotFamilyInstance("instance carries no family-I pair structure")
    return [dict(p) for p in meta["pairs"]]


def verify_pair_lemma(inst: Instance, assignment: Assignment | None = None) -> bool:
    """True iff every pair (a_i, a_i') receives only colors from its own C_i."""
    pairs = family_pairs(inst)
    if assignment is None:
        assignment, _ = optimal_assignment(inst)
    for pair in pairs:
        members = {pair["i"], pair["i_prime"]}
        own = set(pair["colors"])
        got = {j for j, a in enumerate(assignment.pi) if a in members}
        if got != own:
            return False
    return True
