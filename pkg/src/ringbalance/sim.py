"""Deterministic ring simulator: a lock-step round engine and an event engine.

Agents are generator programs. A round program is primed once, then receives
the list of messages delivered in each round and yields the messages it sends
in that round. An event program yields its start-up sends, then receives one
delivered message at a time and yields the sends it triggers. Returning from
the generator halts the agent.

Message cost follows the basic-message model with both constants set to 1:
a message of ``b`` payload bits costs ``max(1, ceil(b / ceil(log2 n)))`` units.
"""
from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Protocol

CLOCKWISE = 1
COUNTERCLOCKWISE = -1


class SimulationError(RuntimeError):
    pass


class NonNeighborSend(SimulationError):
    pass


class RoundLimitExceeded(SimulationError):
    pass


class EventLimitExceeded(SimulationError):
    pass


def label_bits(n: int) -> int:
    """ceil(log2 n), at least 1."""
    return max(1, (n - 1).bit_length())


def color_bits(m: int) -> int:
    return max(1, (m - 1).bit_length())


def counter_bits(n: int) -> int:
    """Bits for a counter in 0..n, i.e. ceil(log2(n+1))."""
    return max(1, n.bit_length())


def weight_bits(p: int) -> int:
    """Bits for a weight in 0..p, i.e. ceil(log2(p+1))."""
    return max(1, p.bit_length())


@dataclass(frozen=True)
class Message:
    src: int
    dst: int
    kind: str
    payload: Any = None
    bits: int = 1
    phase: str = ""
    direction: int = CLOCKWISE
    stage: int | None = None

    def __post_init__(self):
        if self.bits < 1:
            raise ValueError("payload_bits must be at least 1")


class Final(list):
    """Sends yielded as an agent's last act; the agent halts once they are posted."""


def neighbor(pos: int, n: int, direction: int = CLOCKWISE) -> int:
    return (pos + direction) % n


@dataclass
class MessageAccounting:
    n: int
    total_units: int = 0
    messages: int = 0
    per_phase: dict[str, int] = field(default_factory=dict)
    per_stage: dict[tuple[str, int], int] = field(default_factory=dict)

    @property
    def basic_unit_bits(self) -> int:
        return label_bits(self.n)

    def units_for(self, bits: int) -> int:
        unit = self.basic_unit_bits
        return max(1, -(-bits // unit))

    def charge(self, msg: Message) -> int:
        units = self.units_for(msg.bits)
        self.total_units += units
        self.messages += 1
        self.per_phase[msg.phase] = self.per_phase.get(msg.phase, 0) + units
        if msg.stage is not None:
            key = (msg.phase, msg.stage)
            self.per_stage[key] = self.per_stage.get(key, 0) + units
        return units


def charge(msg: Message, acct: MessageAccounting) -> int:
    return acct.charge(msg)


@dataclass
class StageRecord:
    r: int
    lo: int
    hi: float
    k_r: int
    units: int
    step2: bool


@dataclass
class RunMetrics:
    units_total: int = 0
    messages_total: int = 0
    units_per_phase: dict[str, int] = field(default_factory=dict)
    units_per_stage: dict[tuple[str, int], int] = field(default_factory=dict)
    time_units: int = 0
    completed: bool = True
    stages: list[StageRecord] = field(default_factory=list)

    @classmethod
    def from_accounting(cls, acct: MessageAccounting, time_units: int, completed: bool = True) -> "RunMetrics":
        return cls(
            units_total=acct.total_units,
            messages_total=acct.messages,
            units_per_phase=dict(sorted(acct.per_phase.items())),
            units_per_stage=dict(sorted(acct.per_stage.items())),
            time_units=time_units,
            completed=completed,
        )

    def merge(self, other: "RunMetrics") -> "RunMetrics":
        """Sequential composition of two runs."""
        phases = dict(self.units_per_phase)
        for k, v in other.units_per_phase.items():
            phases[k] = phases.get(k, 0) + v
        stages = dict(self.units_per_stage)
        for k, v in other.units_per_stage.items():
            stages[k] = stages.get(k, 0) + v
        return RunMetrics(
            units_total=self.units_total + other.units_total,
            messages_total=self.messages_total + other.messages_total,
            units_per_phase=dict(sorted(phases.items())),
            units_per_stage=dict(sorted(stages.items())),
            time_units=self.time_units + other.time_units,
            completed=self.completed and other.completed,
            stages=self.stages + other.stages,
        )


class RingAgent(Protocol):
    pos: int

    def program(self): ...


class _Tracer:
    def __init__(self, sink):
        self.sink = sink

    def record(self, t, msg: Message, units: int) -> None:
        if self.sink is not None:
            self.sink.append({"t": t, "src": msg.src, "dst": msg.dst, "phase": msg.phase, "units": units})


def _check_link(msg: Message, n: int) -> None:
    if msg.dst not in (neighbor(msg.src, n, CLOCKWISE), neighbor(msg.src, n, COUNTERCLOCKWISE)):
        raise NonNeighborSend(f"agent {msg.src} cannot send to {msg.dst} on a ring of {n}")
    if msg.dst != neighbor(msg.src, n, msg.direction):
        raise NonNeighborSend(f"direction {msg.direction} from {msg.src} does not reach {msg.dst}")


def run_sync(agents: list, max_rounds: int = 1_000_000, *, strict: bool = True, trace: list | None = None):
    """Run round programs in lock step.

    A message sent in round ``t`` is delivered at the start of round ``t + 1``.
    Returns ``(agents, RunMetrics)``. With ``strict`` a run that has not halted
    after ``max_rounds`` raises :class:`RoundLimitExceeded`; otherwise it stops
    there and reports ``completed=False``.
    """
    n = len(agents)
    acct = MessageAccounting(n)
    tracer = _Tracer(trace)
    programs = {}
    for agent in agents:
        gen = agent.program()
        next(gen)
        programs[agent.pos] = gen
    order = sorted(programs)
    pending: dict[int, list[Message]] = {}
    last_active = -1
    t = 0
    while programs and t < max_rounds:
        delivered = pending
        pending = {}
        for pos in order:
            gen = programs.get(pos)
            if gen is None:
                continue
            try:
                sends = gen.send(delivered.get(pos, []))
            except StopIteration:
                del programs[pos]
                continue
            last_active = t
            for msg in sends or ():
                if msg.src != pos:
                    raise SimulationError(f"agent {pos} forged a message from {msg.src}")
                _check_link(msg, n)
                units = acct.charge(msg)
                tracer.record(t, msg, units)
                pending.setdefault(msg.dst, []).append(msg)
            if isinstance(sends, Final):
                del programs[pos]
        t += 1
    completed = not programs
    if not completed and strict:
        raise RoundLimitExceeded(f"agents still running after {max_rounds} rounds")
    elapsed = last_active + 1 if completed else t
    return agents, RunMetrics.from_accounting(acct, elapsed, completed)


class DelayModel:
    """Per-message link delay; ``sampler()`` returns a fresh deterministic sampler."""

    def sampler(self) -> Callable[[Message], int]:
        raise NotImplementedError


@dataclass(frozen=True)
class UnitDelay(DelayModel):
    def sampler(self):
        return lambda msg: 1

    def __str__(self):
        return "unit"


@dataclass(frozen=True)
class UniformDelay(DelayModel):
    lo: int = 1
    hi: int = 5
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.lo <= self.hi:
            raise ValueError("uniform delays need 1 <= lo <= hi")

    def sampler(self):
        rng = random.Random(self.seed)
        return lambda msg: rng.randint(self.lo, self.hi)

    def __str__(self):
        return f"uniform:{self.lo},{self.hi}"


@dataclass(frozen=True)
class TableDelay(DelayModel):
    """Fixed delay per directed link ``(src, dst)``; unlisted links take ``default``."""

    table: tuple[tuple[tuple[int, int], int], ...]
    default: int = 1

    def __post_init__(self):
        if self.default < 1 or any(d < 1 for _, d in self.table):
            raise ValueError("link delays must be at least 1")

    @classmethod
    def from_mapping(cls, mapping: dict, default: int = 1) -> "TableDelay":
        items = []
        for key, d in mapping.items():
            if isinstance(key, str):
                src, dst = (int(x) for x in key.replace("->", ",").split(","))
            else:
                src, dst = key
            items.append(((src, dst), int(d)))
        return cls(tuple(sorted(items)), default)

    @classmethod
    def adversarial(cls, n: int, seed: int, hi: int = 9) -> "TableDelay":
        """Random but fixed per-link delays, skewed so one direction is slow."""
        rng = random.Random(seed)
        items = []
        for i in range(n):
            items.append(((i, (i + 1) % n), rng.randint(1, hi)))
            items.append(((i, (i - 1) % n), rng.randint(1, 2)))
        return cls.from_mapping(dict(items))

    def sampler(self):
        lookup = dict(self.table)
        return lambda msg: lookup.get((msg.src, msg.dst), self.default)

    def __str__(self):
        return "table"


def run_async(agents: list, delay: DelayModel | None = None, max_events: int = 5_000_000, *, trace: list | None = None):
    """Run event programs under a delay model with FIFO links.

    Deliveries are ordered by ``(time, send sequence)``; a message never
    overtakes an earlier one on the same directed link. Elapsed time is the
    latest delivery time.
    """
    n = len(agents)
    delay = delay or UnitDelay()
    sample = delay.sampler()
    acct = MessageAccounting(n)
    tracer = _Tracer(trace)
    queue: list[tuple[int, int, Message]] = []
    link_clock: dict[tuple[int, int, int], int] = {}
    seq = 0

    def post(now: int, sends: Iterable[Message] | None, pos: int) -> None:
        nonlocal seq
        for msg in sends or ():
            if msg.src != pos:
                raise SimulationError(f"agent {pos} forged a message from {msg.src}")
            _check_link(msg, n)
            units = acct.charge(msg)
            tracer.record(now, msg, units)
            link = (msg.src, msg.dst, msg.direction)
            at = max(now + sample(msg), link_clock.get(link, 0))
            link_clock[link] = at
            heapq.heappush(queue, (at, seq, msg))
            seq += 1

    programs = {}
    for agent in sorted(agents, key=lambda a: a.pos):
        gen = agent.program()
        try:
            sends = next(gen)
        except StopIteration:
            continue
        post(0, sends, agent.pos)
        if not isinstance(sends, Final):
            programs[agent.pos] = gen

    now = 0
    events = 0
    while queue and programs:
        at, _, msg = heapq.heappop(queue)
        now = at
        events += 1
        if events > max_events:
            raise EventLimitExceeded(f"more than {max_events} deliveries")
        gen = programs.get(msg.dst)
        if gen is None:
            continue
        try:
            sends = gen.send(msg)
        except StopIteration:
            del programs[msg.dst]
            continue
        post(now, sends, msg.dst)
        if isinstance(sends, Final):
            del programs[msg.dst]
    completed = not programs
    return agents, RunMetrics.from_accounting(acct, now, completed)


class RoundAdapter:
    """Runs an event program on the round engine, one delivery at a time."""

    def __init__(self, agent):
        self.agent = agent
        self.pos = agent.pos

    def program(self):
        gen = self.agent.program()
        try:
            first = next(gen)
        except StopIteration:
            return
        inbox = yield
        if isinstance(first, Final):
            yield first
            return
        sends = list(first or ())
        while True:
            inbox = yield sends
            sends = []
            for msg in inbox:
                try:
                    out = gen.send(msg)
                except StopIteration:
                    yield Final(sends)
                    return
                sends.extend(out or ())
                if isinstance(out, Final):
                    yield Final(sends)
                    return
