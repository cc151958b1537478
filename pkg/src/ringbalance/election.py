"""Hirschberg-Sinclair leader election followed by a labelling pass.

The maximum id wins. The leader then sends a hop counter clockwise so each
agent learns its label, i.e. its clockwise distance from the leader. Probe
and reply messages carry an id, a phase and a hop count; they are charged as
one basic message each since their size is a constant number of labels.
"""
from __future__ import annotations

from dataclasses import dataclass

from .sim import (
    CLOCKWISE,
    COUNTERCLOCKWISE,
    DelayModel,
    Final,
    Message,
    RoundAdapter,
    RunMetrics,
    label_bits,
    run_async,
    run_sync,
)


class DuplicateIds(ValueError):
    pass


@dataclass
class ElectionResult:
    leader_pos: int
    leader_id: int
    labels: tuple[int, ...]  # labels[pos] = clockwise distance from the leader
    metrics: RunMetrics


class ElectionAgent:
    def __init__(self, pos: int, n: int, ident: int):
        self.pos = pos
        self.n = n
        self.id = ident
        self.label: int | None = None
        self.leader_id: int | None = None

    def _msg(self, kind: str, payload, direction: int) -> Message:
        return Message(
            self.pos,
            (self.pos + direction) % self.n,
            kind,
            payload,
            bits=label_bits(self.n),
            phase="phase1",
            direction=direction,
        )

    def _probes(self, phase: int) -> list[Message]:
        return [
            self._msg("probe", (self.id, phase, 1), CLOCKWISE),
            self._msg("probe", (self.id, phase, 1), COUNTERCLOCKWISE),
        ]

    def program(self):
        n = self.n
        phase = 0
        replies = 0
        out: list[Message] = self._probes(phase)
        while True:
            msg = yield out
            out = []
            if msg.kind == "probe":
                j, k, d = msg.payload
                if j == self.id:
                    # own probe went all the way round: this agent wins
                    self.label = 0
                    self.leader_id = self.id
                    out = Final([self._msg("elected", (1, self.id), CLOCKWISE)])
                elif j > self.id:
                    if d < 2 ** k:
                        out.append(self._msg("probe", (j, k, d + 1), msg.direction))
                    else:
                        out.append(self._msg("reply", (j, k), -msg.direction))
            elif msg.kind == "reply":
                j, k = msg.payload
                if j != self.id:
                    out.append(self._msg("reply", (j, k), msg.direction))
                else:
                    replies += 1
                    if replies == 2:
                        phase += 1
                        replies = 0
                        out = self._probes(phase)
            elif msg.kind == "elected":
                hops, leader_id = msg.payload
                self.label = hops
                self.leader_id = leader_id
                if hops < n - 1:
                    out = Final([self._msg("elected", (hops + 1, leader_id), CLOCKWISE)])
                else:
                    out = Final()


def check_ids(ids) -> None:
    if len(set(ids)) != len(ids):
        raise DuplicateIds(f"ids must be distinct: {list(ids)}")


def leader_elect(ids, mode: str = "sync", delay: DelayModel | None = None, trace: list | None = None) -> ElectionResult:
    """Elect the maximum id on a ring whose clockwise order is ``ids``."""
    ids = list(ids)
    check_ids(ids)
    n = len(ids)
    if n == 0:
        raise ValueError("empty ring")
    if n == 1:
        return ElectionResult(0, ids[0], (0,), RunMetrics())
    agents = [ElectionAgent(pos, n, ident) for pos, ident in enumerate(ids)]
    if mode == "sync":
        _, metrics = run_sync([RoundAdapter(a) for a in agents], trace=trace)
    elif mode == "async":
        _, metrics = run_async(agents, delay, trace=trace)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    leader = next(a for a in agents if a.label == 0)
    labels = tuple((a.pos - leader.pos) % n for a in agents)
    if any(a.label != lab for a, lab in zip(agents, labels)):
        raise RuntimeError("labelling pass left agents with inconsistent labels")
    return ElectionResult(leader.pos, leader.id, labels, metrics)
