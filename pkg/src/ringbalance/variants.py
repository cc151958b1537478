"""Balance variants and the gather-at-leader baseline."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .balance import BalanceRun, InvalidConfig, ProtocolConfig, ring_ids, simulate_balance
from .election import leader_elect
from .model import Assignment, Instance
from .oracle import optimal_assignment
from .sim import (
    CLOCKWISE,
    COUNTERCLOCKWISE,
    Final,
    Message,
    RoundAdapter,
    RunMetrics,
    label_bits,
    run_async,
    run_sync,
    weight_bits,
)


class InvalidEpsilon(InvalidConfig):
    pass


def check_epsilon(eps) -> Fraction:
    try:
        eps = Fraction(eps)
    except (TypeError, ValueError) as exc:
        raise InvalidEpsilon(f"epsilon must be a rational number, got {eps!r}") from exc
    if not 0 < eps < 1:
        raise InvalidEpsilon(f"epsilon must lie strictly between 0 and 1, got {eps}")
    return eps


def run_two_approx(inst: Instance, config: ProtocolConfig | None = None) -> tuple[Assignment, RunMetrics]:
    run = simulate_balance(inst, (config or ProtocolConfig()).replace(variant="two-approx"))
    return run.assignment, run.metrics


def run_eps_approx(inst: Instance, eps, config: ProtocolConfig | None = None) -> tuple[Assignment, RunMetrics]:
    eps = check_epsilon(eps)
    run = simulate_balance(inst, (config or ProtocolConfig()).replace(variant="eps", epsilon=eps))
    return run.assignment, run.metrics


class GatherAgent:
    """Sends its weight vector to the leader along the shorter arc, then waits for the result."""

    def __init__(self, pos: int, label: int, inst: Instance):
        self.pos, self.label = pos, label
        self.n, self.m = inst.n, inst.m
        self.inst = inst
        self.vector = inst.column(pos)
        self.vector_bits = inst.m * weight_bits(inst.p) + label_bits(inst.n)
        self.result_bits = inst.m * label_bits(inst.n)
        self.half = self.n // 2  # clockwise broadcast covers labels 1..half
        self.pi: tuple[int, ...] | None = None

    def _msg(self, kind, payload, bits, phase, direction) -> Message:
        return Message(self.pos, (self.pos + direction) % self.n, kind, payload, bits=bits,
                       phase=phase, direction=direction)

    def program(self):
        n, i = self.n, self.label
        if i == 0:
            yield from self._lead()
            return
        # toward the leader: counterclockwise if that arc is not longer
        direction = COUNTERCLOCKWISE if i <= n - i else CLOCKWISE
        out = [self._msg("vector", (i, self.vector), self.vector_bits, "gather", direction)]
        while True:
            msg = yield out
            out = []
            if msg.kind == "vector":
                out.append(self._msg("vector", msg.payload, self.vector_bits, "gather", msg.direction))
            elif msg.kind == "result":
                self.pi = msg.payload
                last = i == self.half if msg.direction == CLOCKWISE else i == self.half + 1
                if not last:
                    out.append(self._msg("result", msg.payload, self.result_bits, "broadcast", msg.direction))
                yield Final(out)
                return

    def _lead(self):
        n = self.n
        columns = {0: self.vector}
        out: list[Message] = []
        while len(columns) < n:
            msg = yield out
            out = []
            if msg.kind == "vector":
                label, vec = msg.payload
                columns[label] = vec
        rows = [[columns[lab][j] for lab in range(n)] for j in range(self.m)]
        a, _ = optimal_assignment(Instance.from_rows(rows))
        # labels -> the leader broadcasts label-indexed owners
        self.pi = a.pi
        out = [self._msg("result", a.pi, self.result_bits, "broadcast", CLOCKWISE)]
        if n - 1 > self.half:
            out.append(self._msg("result", a.pi, self.result_bits, "broadcast", COUNTERCLOCKWISE))
        yield Final(out)


@dataclass
class GatherRun:
    assignment: Assignment
    metrics: RunMetrics
    leader_pos: int


def run_gather_baseline(inst: Instance, config: ProtocolConfig | None = None) -> tuple[Assignment, RunMetrics]:
    run = simulate_gather(inst, config)
    return run.assignment, run.metrics


def simulate_gather(inst: Instance, config: ProtocolConfig | None = None, trace: list | None = None) -> GatherRun:
    config = config or ProtocolConfig(variant="gather")
    n = inst.n
    if n == 1:
        return GatherRun(Assignment.of([0] * inst.m), RunMetrics(), 0)
    election = leader_elect(ring_ids(n, config), config.mode, config.delay, trace=trace)
    labels = election.labels
    mark = len(trace) if trace is not None else 0
    agents = [GatherAgent(pos, labels[pos], inst) for pos in range(n)]
    if config.mode == "sync":
        _, metrics = run_sync([RoundAdapter(a) for a in agents], trace=trace)
    else:
        _, metrics = run_async(agents, config.delay, trace=trace)
    if trace is not None:
        for rec in trace[mark:]:
            rec["t"] += election.metrics.time_units
    by_label = agents[election.leader_pos].pi
    if any(a.pi != by_label for a in agents):
        raise RuntimeError("gather broadcast did not reach every agent")
    pos_of = [0] * n
    for pos, lab in enumerate(labels):
        pos_of[lab] = pos
    assignment = Assignment.of(pos_of[lab] for lab in by_label)
    return GatherRun(assignment, election.metrics.merge(metrics), election.leader_pos)


@dataclass
class ProtocolRun:
    """Uniform result for any protocol or variant."""

    assignment: Assignment
    metrics: RunMetrics
    leader_pos: int
    detail: BalanceRun | None = None


def run_protocol(inst: Instance, config: ProtocolConfig, trace: list | None = None) -> ProtocolRun:
    if config.variant == "gather":
        g = simulate_gather(inst, config, trace=trace)
        return ProtocolRun(g.assignment, g.metrics, g.leader_pos)
    if config.variant == "eps":
        config = config.replace(epsilon=check_epsilon(config.epsilon))
    run = simulate_balance(inst, config, trace=trace)
    return ProtocolRun(run.assignment, run.metrics, run.leader_pos, run)
