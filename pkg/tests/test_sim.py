import pytest
from hypothesis import given, settings, strategies as st

from ringbalance.sim import (
    CLOCKWISE,
    COUNTERCLOCKWISE,
    Final,
    Message,
    MessageAccounting,
    NonNeighborSend,
    RoundAdapter,
    RoundLimitExceeded,
    TableDelay,
    UniformDelay,
    UnitDelay,
    charge,
    color_bits,
    label_bits,
    run_async,
    run_sync,
)


class Token:
    """Round program sending one token clockwise every round, forever."""

    def __init__(self, pos, n):
        self.pos, self.n = pos, n

    def program(self):
        inbox = yield
        while True:
            inbox = yield [Message(self.pos, (self.pos + 1) % self.n, "tok")]


class Silent:
    def __init__(self, pos):
        self.pos = pos

    def program(self):
        yield
        yield Final([])


def test_sync_token_ring_units_and_rounds():
    agents = [Token(i, 3) for i in range(3)]
    _, metrics = run_sync(agents, max_rounds=5, strict=False)
    assert metrics.units_total == 15
    assert metrics.time_units == 5
    assert not metrics.completed


def test_sync_round_limit_raises_when_strict():
    with pytest.raises(RoundLimitExceeded):
        run_sync([Token(i, 3) for i in range(3)], max_rounds=5)


def test_sync_silent_agents_cost_nothing():
    _, metrics = run_sync([Silent(i) for i in range(4)])
    assert metrics.units_total == 0 and metrics.completed


class Sender:
    """Event program: position 0 sends the given payloads clockwise; others record arrivals."""

    def __init__(self, pos, n, payloads=(), bad=False, want=0):
        self.pos, self.n, self.payloads, self.bad, self.want = pos, n, payloads, bad, want
        self.got = []

    def program(self):
        if self.pos == 0:
            dst = 2 if self.bad else 1
            yield Final([Message(0, dst, "x", p) for p in self.payloads])
            return
        while True:
            msg = yield []
            self.got.append(msg.payload)
            if len(self.got) == self.want:
                yield Final([])
                return


def _pair(payloads):
    return [Sender(0, 2, payloads), Sender(1, 2, want=len(payloads))]


def test_async_unit_delay_delivers_at_time_one():
    agents = _pair(["a"])
    _, metrics = run_async(agents, UnitDelay())
    assert agents[1].got == ["a"]
    assert metrics.time_units == 1


@given(st.integers(0, 10_000), st.integers(2, 12))
@settings(max_examples=50)
def test_async_fifo_under_random_delays(seed, k):
    agents = _pair(list(range(k)))
    run_async(agents, UniformDelay(1, 9, seed))
    assert agents[1].got == list(range(k))


def test_non_neighbor_send_rejected():
    agents = [Sender(i, 4, ["x"], bad=True, want=1) for i in range(4)]
    with pytest.raises(NonNeighborSend):
        run_async(agents)


@pytest.mark.parametrize("bits,n,units", [(3, 16, 1), (9, 16, 3), (1, 2, 1), (64, 1024, 7)])
def test_charge(bits, n, units):
    acct = MessageAccounting(n)
    assert charge(Message(0, 1, "x", bits=bits), acct) == units
    assert acct.total_units == units and acct.messages == 1


@given(st.integers(2, 200), st.integers(2, 400), st.integers(1, 50))
def test_color_list_charge(n, m, k):
    acct = MessageAccounting(n)
    bits = k * color_bits(m)
    assert acct.units_for(bits) == -(-bits // label_bits(n))


def test_payload_bits_must_be_positive():
    with pytest.raises(ValueError):
        Message(0, 1, "x", bits=0)


def test_table_delay_lookup():
    delay = TableDelay.from_mapping({"0,1": 4}, default=2)
    sample = delay.sampler()
    assert sample(Message(0, 1, "x")) == 4
    assert sample(Message(1, 0, "x", direction=COUNTERCLOCKWISE)) == 2


def test_adversarial_table_is_deterministic():
    assert TableDelay.adversarial(6, 3) == TableDelay.adversarial(6, 3)


class Echo:
    """Event program: 0 starts a token that goes once around the ring."""

    def __init__(self, pos, n):
        self.pos, self.n = pos, n

    def program(self):
        nxt = (self.pos + 1) % self.n
        if self.pos == 0:
            yield [Message(0, nxt, "tok", direction=CLOCKWISE)]
            yield Final([])
            return
        yield []
        yield Final([Message(self.pos, nxt, "tok", direction=CLOCKWISE)])


def test_round_adapter_matches_async_counts():
    n = 5
    _, am = run_async([Echo(i, n) for i in range(n)])
    _, sm = run_sync([RoundAdapter(Echo(i, n)) for i in range(n)])
    assert am.units_total == sm.units_total == n
    assert am.time_units == n
