"""Sync-Balance and Async-Balance as agent programs.

Phase 1 elects a leader and labels the ring (see :mod:`election`). Phase 2
agrees on an upper bound of the largest weight. Phase 3 assigns colors in
stages of decreasing weight intervals; within a stage agents claim colors in
ring order starting at the leader.

Agents are addressed by physical ring position ``pos``; ``label`` is the
clockwise distance from the leader. All Phase 2/3 traffic flows clockwise.
"""
from __future__ import annotations

import dataclasses
import random
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

from .election import check_ids, leader_elect
from .model import (
    Assignment,
    Instance,
    StageInterval,
    quota,
    stage_intervals,
)
from .sim import (
    CLOCKWISE,
    DelayModel,
    Final,
    Message,
    RunMetrics,
    StageRecord,
    UnitDelay,
    color_bits,
    counter_bits,
    label_bits,
    run_async,
    run_sync,
    weight_bits,
)


class ProtocolError(RuntimeError):
    pass


class DesyncDetected(ProtocolError):
    pass


class Stall(ProtocolError):
    pass


class InvalidConfig(ValueError):
    pass


class SelectionPolicy(str, Enum):
    HIGHEST_WEIGHT = "highest-weight"
    LOWEST_INDEX = "lowest-index"


VARIANTS = ("base", "two-approx", "eps", "gather")


@dataclass(frozen=True)
class ProtocolConfig:
    mode: str = "sync"  # sync | async
    variant: str = "base"
    policy: SelectionPolicy = SelectionPolicy.HIGHEST_WEIGHT
    epsilon: Fraction | None = None
    delay: DelayModel = UnitDelay()
    seed: int = 0
    leader: int | None = None  # force this ring position to win the election
    ids: tuple[int, ...] | None = None
    quota_rule: str = "pooled"  # pooled | label
    async_p_hat: str = "pow2"  # pow2 | exact
    gap_repair: bool = True
    max_phase2_stages: int = 64

    def __post_init__(self):
        if self.mode not in ("sync", "async"):
            raise InvalidConfig(f"mode must be sync or async, not {self.mode!r}")
        if self.variant not in VARIANTS:
            raise InvalidConfig(f"unknown variant {self.variant!r}")
        if self.quota_rule not in ("pooled", "label"):
            raise InvalidConfig(f"unknown quota rule {self.quota_rule!r}")
        if self.async_p_hat not in ("pow2", "exact"):
            raise InvalidConfig(f"unknown async p estimate {self.async_p_hat!r}")
        object.__setattr__(self, "policy", SelectionPolicy(self.policy))

    def replace(self, **changes) -> "ProtocolConfig":
        return dataclasses.replace(self, **changes)


def ring_ids(n: int, config: ProtocolConfig) -> list[int]:
    if config.ids is not None:
        ids = list(config.ids)
        if len(ids) != n:
            raise InvalidConfig(f"{len(ids)} ids for a ring of {n}")
        check_ids(ids)
    else:
        ids = list(range(n))
        random.Random(config.seed).shuffle(ids)
    if config.leader is not None:
        if not 0 <= config.leader < n:
            raise InvalidConfig(f"leader {config.leader} outside ring of size {n}")
        ids[config.leader] = max(ids) + 1
    return ids


def speak_up(p_i: int, r: int, gap_repair: bool = True) -> int:
    """B_i(r): 1 in the single Phase-2 stage whose range holds the agent's max weight."""
    if r < 0:
        raise ValueError("stage index is non-negative")
    if r == 0:
        return int(p_i == 0 or (gap_repair and p_i == 1))
    return int(2 ** r <= p_i < 2 ** (r + 1))


def speak_stage(p_i: int) -> int:
    return 0 if p_i <= 1 else p_i.bit_length() - 1


def pow2_estimate(p: int) -> tuple[int, int]:
    """(ell, p') with p' = 2**(ell+1), as agreed by the synchronous Phase 2."""
    ell = speak_stage(p)
    return ell, 2 ** (ell + 1)


# -- quotas -----------------------------------------------------------------


class QuotaBook:
    """Caps on how many colors an agent may take.

    ``label`` follows the fixed per-label quotas. ``pooled`` lets any agent
    take ``floor(m/n) + 1`` colors while the shared pool of ``m mod n`` extra
    slots lasts; taking the extra color uses one pool slot.
    """

    def __init__(self, n: int, m: int, rule: str):
        self.n, self.m, self.rule = n, m, rule
        self.floor = m // n
        self.extra = m - self.floor * n

    def spare(self, label: int, deg: int, pool_used: int) -> int:
        if self.rule == "label":
            return max(0, quota(label, self.n, self.m) - deg)
        s = max(0, self.floor - deg)
        if deg <= self.floor and pool_used < self.extra:
            s += 1
        return s

    def pool_after(self, deg_before: int, deg_after: int, pool_used: int) -> int:
        if self.rule == "pooled" and deg_before <= self.floor < deg_after:
            return pool_used + 1
        return pool_used


def order_candidates(cands, weights, policy: SelectionPolicy) -> list[int]:
    if policy is SelectionPolicy.HIGHEST_WEIGHT:
        return sorted(cands, key=lambda j: (-weights[j], j))
    return sorted(cands)


# -- claim rules ------------------------------------------------------------


class GreedyClaims:
    """Base rule: each agent takes what it can of its list, in ring order.

    The circulating message is ``(pool_used, colors)``. The pool counter is
    only charged under the pooled quota rule when ``n`` does not divide ``m``;
    otherwise the pool is empty and every agent knows it.
    """

    weighted = False

    def __init__(self, inst: Instance, book: QuotaBook):
        self.inst, self.book = inst, book

    def empty(self, agent):
        return (agent.pool_used, ())

    def is_empty(self, M) -> bool:
        return not M[1]

    def bits(self, M) -> int:
        b = len(M[1]) * color_bits(self.inst.m)
        if self.book.rule == "pooled" and self.book.extra:
            b += counter_bits(self.inst.n)
        return max(1, b)

    def contribute(self, agent, L, M):
        pool_used, taken = M
        seen = set(taken)
        cands = order_candidates([j for j in L if j not in seen], agent.weights, agent.policy)
        take = cands[: self.book.spare(agent.label, agent.deg, pool_used)]
        if not take:
            return M
        before = agent.deg
        agent.deg += len(take)
        agent.mine.extend(take)
        pool_used = self.book.pool_after(before, agent.deg, pool_used)
        return (pool_used, taken + tuple(take))

    def settle(self, agent, final) -> tuple[int, ...]:
        """Apply the stage's complete claim list; returns the colors it assigned."""
        pool_used, taken = final
        agent.pool_used = pool_used
        return taken


class WeightedClaims:
    """Two-approximation rule: claims carry weights and the heaviest claimant wins.

    The message is a tuple of per-agent segments ``(label, ((color, weight), ...))``.
    Every agent resolves the complete list identically: colors in order of
    their best claim (then index), each to the heaviest claimant (then lowest
    label) that still has room; a color nobody can take stays for later stages.
    """

    weighted = True

    def __init__(self, inst: Instance, book: QuotaBook):
        self.inst, self.book = inst, book

    def empty(self, agent):
        return ()

    def is_empty(self, M) -> bool:
        return not M

    def bits(self, M) -> int:
        per_claim = color_bits(self.inst.m) + weight_bits(self.inst.p)
        return max(1, sum(label_bits(self.inst.n) + len(claims) * per_claim for _, claims in M))

    def contribute(self, agent, L, M):
        if not L or self.book.spare(agent.label, agent.degrees[agent.label], agent.pool_used) == 0:
            return M
        claims = tuple((j, agent.weights[j]) for j in sorted(L))
        return M + ((agent.label, claims),)

    def settle(self, agent, final) -> tuple[int, ...]:
        bids: dict[int, list[tuple[int, int]]] = {}
        for label, claims in final:
            for j, w in claims:
                bids.setdefault(j, []).append((w, label))
        order = sorted(bids, key=lambda j: (-max(w for w, _ in bids[j]), j))
        won = []
        for j in order:
            for w, label in sorted(bids[j], key=lambda b: (-b[0], b[1])):
                deg = agent.degrees[label]
                if self.book.spare(label, deg, agent.pool_used) > 0:
                    agent.pool_used = self.book.pool_after(deg, deg + 1, agent.pool_used)
                    agent.degrees[label] = deg + 1
                    won.append(j)
                    if label == agent.label:
                        agent.mine.append(j)
                    break
        agent.deg = agent.degrees[agent.label]
        return tuple(won)


def make_rule(inst: Instance, config: ProtocolConfig):
    book = QuotaBook(inst.n, inst.m, config.quota_rule)
    if config.variant == "two-approx":
        return WeightedClaims(inst, book)
    return GreedyClaims(inst, book)


# -- agents -----------------------------------------------------------------


class _RingAgent:
    def __init__(self, pos: int, label: int, n: int):
        self.pos, self.label, self.n = pos, label, n
        self.out: list[Message] = []
        self.inbox: list[Message] = []
        self.now = 0

    def _send(self, kind: str, payload, bits: int, phase: str, stage: int | None = None) -> None:
        self.out.append(
            Message(self.pos, (self.pos + 1) % self.n, kind, payload, bits=bits, phase=phase,
                    direction=CLOCKWISE, stage=stage)
        )

    # round-program helpers: one tick ends the current round
    def _tick(self):
        if self.inbox:
            kinds = sorted({m.kind for m in self.inbox})
            raise DesyncDetected(f"agent {self.label} got unexpected {kinds} at round {self.now}")
        sends, self.out = self.out, []
        self.inbox = list((yield sends))
        self.now += 1

    def _wait(self, k: int):
        for _ in range(k):
            yield from self._tick()

    def _take(self, kind: str) -> Message | None:
        for idx, m in enumerate(self.inbox):
            if m.kind == kind:
                return self.inbox.pop(idx)
        return None

    # event-program helper
    def _recv(self, kind: str):
        sends, self.out = self.out, []
        msg = yield sends
        if msg.kind != kind:
            raise DesyncDetected(f"agent {self.label} expected {kind}, got {msg.kind}")
        return msg


class PhaseTwoAgent(_RingAgent):
    def __init__(self, pos: int, label: int, n: int, p_i: int, p: int, gap_repair: bool = True,
                 max_stages: int = 64):
        super().__init__(pos, label, n)
        self.p_i = p_i
        self.p = p  # only used to size weight payloads
        self.gap_repair = gap_repair
        self.max_stages = max_stages
        self.spoke: list[int] = []  # stages in which this agent spoke up
        self.A = 0
        self.ell: int | None = None
        self.p_prime: int | None = None
        self.p_max: int | None = None

    def sync_program(self):
        n, i = self.n, self.label
        self.inbox = list((yield))
        r = 0
        while True:
            yield from self._wait(i)
            if i > 0:
                done = self._take("ell")
                if done is not None:
                    self.ell = done.payload
                    self.p_prime = 2 ** (self.ell + 1)
                    if i < n - 1:
                        self._send("ell", self.ell, max(1, self.ell.bit_length()), "phase2")
                    yield Final(self.out)
                    return
            got = self._take("count")
            M = got.payload if got is not None else 0
            b = speak_up(self.p_i, r, self.gap_repair)
            if b:
                self.spoke.append(r)
            M += b
            if M > 0:
                self._send("count", M, counter_bits(n), "phase2", stage=r)
            yield from self._wait(n - i)
            if i == 0:
                got = self._take("count")
                self.A += got.payload if got is not None else 0
                if self.A >= n:
                    self.ell = r
                    self.p_prime = 2 ** (r + 1)
                    if n > 1:
                        self._send("ell", r, max(1, r.bit_length()), "phase2")
                    yield Final(self.out)
                    return
                if r >= self.max_stages:
                    raise Stall(f"only {self.A} of {n} agents spoke up after {r + 1} stages")
            r += 1

    def async_program(self):
        n, i = self.n, self.label
        bits = weight_bits(self.p)
        if i == 0:
            self._send("max", self.p_i, bits, "phase2")
            msg = yield from self._recv("max")
            self.p_max = msg.payload
            self._send("p", self.p_max, bits, "phase2")
            yield from self._recv("p")
            yield Final(self.out)
            return
        msg = yield from self._recv("max")
        self._send("max", max(msg.payload, self.p_i), bits, "phase2")
        msg = yield from self._recv("p")
        self.p_max = msg.payload
        self._send("p", self.p_max, bits, "phase2")
        yield Final(self.out)


class BalanceAgent(_RingAgent):
    """Phase-3 agent; replicated view of the assigned colors plus own quota."""

    def __init__(self, pos: int, label: int, inst: Instance, intervals, rule, policy: SelectionPolicy,
                 assigned=()):
        super().__init__(pos, label, inst.n)
        self.m = inst.m
        self.weights = inst.column(pos)
        self.intervals = list(intervals)
        self.rule = rule
        self.policy = policy
        self.assigned: set[int] = set(assigned)
        self.color_stage: dict[int, int] = {}
        self.mine: list[int] = []
        self.deg = 0
        self.degrees = [0] * inst.n  # per-label counts, kept by the weighted rule
        self.pool_used = 0
        self.stage_log: list[tuple[int, int | None]] = []
        self.step2_log: dict[int, bool] = {}

    def candidates(self, iv: StageInterval) -> list[int]:
        return [j for j in range(self.m) if j not in self.assigned and self.weights[j] in iv]

    def complete(self) -> bool:
        return len(self.assigned) == self.m

    def _settle(self, iv: StageInterval, final) -> None:
        for j in self.rule.settle(self, final):
            self.assigned.add(j)
            self.color_stage[j] = iv.r

    def _claim_bits(self, M) -> int:
        return self.rule.bits(M)

    def sync_program(self):
        """Algorithms 1 and 2: clock-driven stages with silent skips."""
        n, i = self.n, self.label
        self.inbox = list((yield))
        for iv in self.intervals:
            if self.complete():
                break
            self.stage_log.append((iv.r, self.now))
            L = self.candidates(iv)
            yield from self._wait(i)
            got = self._take("label")
            step2 = True
            if got is not None:  # case 1: someone earlier has candidates
                k = got.payload
                if (i + 1) % n != k:
                    self._send("label", k, label_bits(n), "phase3", iv.r)
                yield from self._wait(n - i + k - 1)
            elif L:  # case 2: this agent originates
                self._send("label", i, label_bits(n), "phase3", iv.r)
                yield from self._wait(n - 1)
            else:  # case 3
                yield from self._wait(n)
                got = self._take("label")
                if got is not None:
                    k = got.payload
                    if k - i - 1 > 0:
                        self._send("label", k, label_bits(n), "phase3", iv.r)
                    yield from self._wait(k - i - 1)
                else:
                    step2 = False
                    yield from self._wait(n - i)
            self.step2_log[iv.r] = step2
            if not step2:
                continue
            # step 2
            yield from self._wait(i)
            got = self._take("claims")
            M = got.payload if got is not None else self.rule.empty(self)
            M = self.rule.contribute(self, L, M)
            if not self.rule.is_empty(M):
                self._send("claims", M, self._claim_bits(M), "phase3", iv.r)
            yield from self._wait(n)
            if i == 0:
                got = self._take("claims")
            else:
                got = self._take("final")
            final = got.payload if got is not None else self.rule.empty(self)
            if i < n - 1 and not self.rule.is_empty(final):
                self._send("final", final, self._claim_bits(final), "phase3", iv.r)
            self._settle(iv, final)
            if self.complete():
                break
            yield from self._wait(n - i)
        yield Final(self.out)

    def async_program(self):
        """Message-driven stages: a boolean OR circulates, then the claim list."""
        n, i = self.n, self.label
        for iv in self.intervals:
            if self.complete():
                break
            self.stage_log.append((iv.r, None))
            L = self.candidates(iv)
            if i == 0:
                self._send("or", bool(L), 1, "phase3", iv.r)
                msg = yield from self._recv("or")
                flag = msg.payload
                self._send("or", flag, 1, "phase3", iv.r)
            else:
                msg = yield from self._recv("or")
                self._send("or", msg.payload or bool(L), 1, "phase3", iv.r)
                msg = yield from self._recv("or")
                flag = msg.payload
                if i < n - 1:
                    self._send("or", flag, 1, "phase3", iv.r)
            self.step2_log[iv.r] = flag
            if not flag:
                continue
            if i == 0:
                M = self.rule.contribute(self, L, self.rule.empty(self))
                self._send("claims", M, self._claim_bits(M), "phase3", iv.r)
                final = (yield from self._recv("claims")).payload
                self._send("final", final, self._claim_bits(final), "phase3", iv.r)
            else:
                M = (yield from self._recv("claims")).payload
                M = self.rule.contribute(self, L, M)
                self._send("claims", M, self._claim_bits(M), "phase3", iv.r)
                final = (yield from self._recv("final")).payload
                if i < n - 1:
                    self._send("final", final, self._claim_bits(final), "phase3", iv.r)
            self._settle(iv, final)
        yield Final(self.out)


class _Program:
    """Binds one of an agent's programs for the engines."""

    def __init__(self, agent, method: str):
        self.agent = agent
        self.pos = agent.pos
        self._method = method

    def program(self):
        return getattr(self.agent, self._method)()


# -- phase runners ----------------------------------------------------------


def _ring_positions(labels) -> list[int]:
    """pos_by_label[label] = ring position."""
    out = [0] * len(labels)
    for pos, lab in enumerate(labels):
        out[lab] = pos
    return out


@dataclass
class PhaseTwoResult:
    ell: int | None
    p_hat: int
    metrics: RunMetrics
    speak_stages: tuple[tuple[int, ...], ...] = ()  # per ring position
    p: int | None = None  # exact maximum, async only


def phase2_sync(inst: Instance, labels=None, *, gap_repair: bool = True, max_stages: int = 64,
                trace: list | None = None) -> PhaseTwoResult:
    """Staged speak-up count; returns ell and p' = 2**(ell+1)."""
    n = inst.n
    labels = tuple(range(n)) if labels is None else tuple(labels)
    p_i = [max(inst.column(pos)) for pos in range(n)]
    if n == 1:
        ell = speak_stage(p_i[0])
        return PhaseTwoResult(ell, 2 ** (ell + 1), RunMetrics(), ((ell,),))
    agents = [PhaseTwoAgent(pos, labels[pos], n, p_i[pos], inst.p, gap_repair, max_stages)
              for pos in range(n)]
    _, metrics = run_sync([_Program(a, "sync_program") for a in agents], trace=trace)
    leader = next(a for a in agents if a.label == 0)
    for a in agents:
        if a.p_prime != leader.p_prime:
            raise DesyncDetected(f"agent {a.label} ended Phase 2 with p'={a.p_prime}")
    return PhaseTwoResult(leader.ell, leader.p_prime, metrics, tuple(tuple(a.spoke) for a in agents))


def async_p_hat(p: int, how: str = "pow2") -> int:
    if how == "pow2":
        return pow2_estimate(p)[1]
    return max(p, 2)


def phase2_async(inst: Instance, labels=None, *, delay: DelayModel | None = None, how: str = "pow2",
                 trace: list | None = None) -> PhaseTwoResult:
    """Two circulations: running maximum, then dissemination of p."""
    n = inst.n
    labels = tuple(range(n)) if labels is None else tuple(labels)
    p_i = [max(inst.column(pos)) for pos in range(n)]
    if n == 1:
        return PhaseTwoResult(None, async_p_hat(p_i[0], how), RunMetrics(), p=p_i[0])
    agents = [PhaseTwoAgent(pos, labels[pos], n, p_i[pos], inst.p) for pos in range(n)]
    _, metrics = run_async([_Program(a, "async_program") for a in agents], delay, trace=trace)
    p = agents[0].p_max
    if any(a.p_max != p for a in agents):
        raise DesyncDetected("agents disagree on p")
    return PhaseTwoResult(None, async_p_hat(p, how), metrics, p=p)


@dataclass
class PhaseThreeResult:
    owner: dict[int, int]  # color -> ring position
    color_stage: dict[int, int]
    metrics: RunMetrics
    step2: dict[int, bool]


def phase3(inst: Instance, labels, intervals, config: ProtocolConfig, *, assigned=(),
           trace: list | None = None) -> PhaseThreeResult:
    n = inst.n
    rule = make_rule(inst, config)
    if n == 1:
        owner = {j: 0 for j in range(inst.m) if j not in set(assigned)}
        last = intervals[-1].r if intervals else 0
        return PhaseThreeResult(owner, {j: last for j in owner}, RunMetrics(), {})
    agents = [BalanceAgent(pos, labels[pos], inst, intervals, rule, config.policy, assigned)
              for pos in range(n)]
    if config.mode == "sync":
        _, metrics = run_sync([_Program(a, "sync_program") for a in agents], trace=trace)
        starts = {tuple(a.stage_log) for a in agents}
        if len(starts) != 1:
            raise DesyncDetected("agents reached stage boundaries at different rounds")
    else:
        _, metrics = run_async([_Program(a, "async_program") for a in agents], config.delay, trace=trace)
    views = {(frozenset(a.assigned), tuple(sorted(a.color_stage.items()))) for a in agents}
    if len(views) != 1:
        raise DesyncDetected("agents ended Phase 3 with different views of the assigned colors")
    owner: dict[int, int] = {}
    for a in agents:
        for j in a.mine:
            if j in owner:
                raise ProtocolError(f"color {j} taken by two agents")
            owner[j] = a.pos
    leader = next(a for a in agents if a.label == 0)
    return PhaseThreeResult(owner, dict(leader.color_stage), metrics, dict(leader.step2_log))


def phase3_stage_sync(inst: Instance, r: int, assigned=(), *, labels=None, p_hat: int | None = None,
                      config: ProtocolConfig | None = None) -> PhaseThreeResult:
    """Run stage ``r`` alone, starting from the already-assigned colors."""
    config = (config or ProtocolConfig()).replace(mode="sync")
    return _single_stage(inst, r, assigned, labels, p_hat, config)


def phase3_stage_async(inst: Instance, r: int, assigned=(), *, labels=None, p_hat: int | None = None,
                       config: ProtocolConfig | None = None) -> PhaseThreeResult:
    config = (config or ProtocolConfig()).replace(mode="async")
    return _single_stage(inst, r, assigned, labels, p_hat, config)


def _single_stage(inst, r, assigned, labels, p_hat, config):
    labels = tuple(range(inst.n)) if labels is None else tuple(labels)
    if p_hat is None:
        p_hat = pow2_estimate(inst.p)[1]
    iv = schedule(p_hat, config)[r]
    return phase3(inst, labels, [iv], config, assigned=assigned)


def interval_base(config: ProtocolConfig) -> Fraction:
    if config.variant == "eps":
        return 1 + Fraction(config.epsilon)
    return Fraction(2)


def schedule(p_hat: int, config: ProtocolConfig) -> list[StageInterval]:
    return stage_intervals(p_hat, interval_base(config))


# -- full protocol ----------------------------------------------------------


@dataclass
class BalanceRun:
    assignment: Assignment
    metrics: RunMetrics
    leader_pos: int
    labels: tuple[int, ...]
    p_hat: int
    intervals: list[StageInterval]
    color_stage: dict[int, int]
    ell: int | None = None
    p: int | None = None
    speak_stages: tuple[tuple[int, ...], ...] = ()
    config: ProtocolConfig = field(default_factory=ProtocolConfig)


def _shift_trace(trace, start: int, offset: int) -> None:
    if trace is None:
        return
    for rec in trace[start:]:
        rec["t"] += offset


def simulate_balance(inst: Instance, config: ProtocolConfig | None = None, trace: list | None = None) -> BalanceRun:
    """Phase 1, 2 and 3 back to back; each phase starts when the previous one has ended."""
    config = config or ProtocolConfig()
    if config.variant == "gather":
        raise InvalidConfig("the gather baseline is run by variants.run_gather_baseline")
    n = inst.n
    ids = ring_ids(n, config)
    elapsed = 0
    mark = len(trace) if trace is not None else 0
    election = leader_elect(ids, config.mode, config.delay, trace=trace)
    elapsed += election.metrics.time_units
    labels = election.labels
    mark = len(trace) if trace is not None else 0
    if config.mode == "sync":
        ph2 = phase2_sync(inst, labels, gap_repair=config.gap_repair,
                          max_stages=config.max_phase2_stages, trace=trace)
    else:
        ph2 = phase2_async(inst, labels, delay=config.delay, how=config.async_p_hat, trace=trace)
    _shift_trace(trace, mark, elapsed)
    elapsed += ph2.metrics.time_units
    intervals = schedule(ph2.p_hat, config)
    mark = len(trace) if trace is not None else 0
    ph3 = phase3(inst, labels, intervals, config, trace=trace)
    _shift_trace(trace, mark, elapsed)
    if len(ph3.owner) != inst.m:
        missing = sorted(set(range(inst.m)) - set(ph3.owner))
        raise ProtocolError(f"colors left unassigned: {missing}")
    assignment = Assignment.of(ph3.owner[j] for j in range(inst.m))
    metrics = election.metrics.merge(ph2.metrics).merge(ph3.metrics)
    metrics.stages = stage_records(intervals, ph3)
    return BalanceRun(
        assignment=assignment,
        metrics=metrics,
        leader_pos=election.leader_pos,
        labels=labels,
        p_hat=ph2.p_hat,
        intervals=intervals,
        color_stage=ph3.color_stage,
        ell=ph2.ell,
        p=ph2.p,
        speak_stages=ph2.speak_stages,
        config=config,
    )


def stage_records(intervals, ph3: PhaseThreeResult) -> list[StageRecord]:
    out = []
    for iv in intervals:
        if iv.r not in ph3.step2 and ph3.step2:
            break  # early stop: later stages never ran
        k_r = sum(1 for r in ph3.color_stage.values() if r == iv.r)
        out.append(StageRecord(
            r=iv.r, lo=iv.lo, hi=iv.hi, k_r=k_r,
            units=ph3.metrics.units_per_stage.get(("phase3", iv.r), 0),
            step2=ph3.step2.get(iv.r, False),
        ))
    return out


def run_balance(inst: Instance, config: ProtocolConfig | None = None) -> tuple[Assignment, RunMetrics]:
    run = simulate_balance(inst, config)
    return run.assignment, run.metrics
