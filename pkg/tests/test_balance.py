import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from ringbalance.balance import (
    InvalidConfig,
    ProtocolConfig,
    SelectionPolicy,
    phase2_async,
    phase2_sync,
    phase3_stage_async,
    phase3_stage_sync,
    pow2_estimate,
    ring_ids,
    run_balance,
    simulate_balance,
    speak_up,
)
from ringbalance.instances import gen_random
from ringbalance.model import Assignment, Instance, approximation_ratio, cost, is_balanced
from ringbalance.oracle import optimal_cost
from ringbalance.sim import TableDelay, UniformDelay, UnitDelay

LEAD_I = ProtocolConfig(leader=0)


@pytest.mark.parametrize("p_i,r,b", [(0, 0, 1), (5, 2, 1), (5, 1, 0), (1, 0, 1), (1, 1, 0), (8, 3, 1)])
def test_speak_up(p_i, r, b):
    assert speak_up(p_i, r) == b


def test_speak_up_without_gap_repair_skips_one():
    assert all(speak_up(1, r, gap_repair=False) == 0 for r in range(5))


def test_phase2_sync_hand_trace():
    inst = Instance.from_rows([[1, 4, 5], [0, 0, 0], [0, 0, 0]])
    res = phase2_sync(inst)
    assert (res.ell, res.p_hat) == (2, 8)
    assert res.speak_stages == ((0,), (2,), (2,))


def test_phase2_sync_all_zero():
    res = phase2_sync(Instance.from_rows([[0, 0], [0, 0]]))
    assert (res.ell, res.p_hat) == (0, 2)


def test_phase2_sync_example2(ex2):
    res = phase2_sync(ex2)
    assert (res.ell, res.p_hat) == (1, 4)
    assert res.speak_stages == ((1,), (1,))


def test_phase2_async_max_and_messages(ex2):
    assert phase2_async(Instance.from_rows([[1, 4, 5], [0, 0, 0], [0, 0, 0]])).p == 5
    res = phase2_async(ex2)
    assert res.p == 2 and res.metrics.messages_total == 4
    zero = phase2_async(Instance.from_rows([[0, 0], [0, 0]]))
    assert zero.p == 0 and zero.p_hat == 2


@given(st.integers(1, 10 ** 6))
def test_pow2_sandwich(p):
    ell, p_prime = pow2_estimate(p)
    assert p_prime & (p_prime - 1) == 0 and p < p_prime <= 2 * p


def test_stage0_example2_hand_trace(ex2):
    for run in (phase3_stage_sync, phase3_stage_async):
        res = run(ex2, 0, p_hat=4)
        assert res.owner == {0: 0, 1: 0, 2: 0, 3: 0, 4: 1, 7: 1}


def test_silent_stage_costs_nothing_in_sync_and_2n_minus_1_in_async():
    inst = Instance.from_rows([[9, 0, 0], [0, 0, 0], [0, 0, 0]])
    sync = phase3_stage_sync(inst, 1, p_hat=16)
    assert sync.owner == {} and sync.metrics.units_total == 0 and sync.step2 == {1: False}
    asyn = phase3_stage_async(inst, 1, p_hat=16)
    assert asyn.owner == {} and asyn.metrics.messages_total == 2 * 3 - 1


def test_last_stage_hands_out_zero_weight_colors():
    inst = Instance.from_rows([[0, 0, 0]] * 7)
    res = phase3_stage_sync(inst, 1, p_hat=2)
    assert sorted(res.owner) == list(range(7))
    deg = Assignment.of(res.owner[j] for j in range(7)).degrees(3)
    assert sorted(deg) == [2, 2, 3]


def test_example2_end_to_end(ex2):
    for mode in ("sync", "async"):
        a, metrics = run_balance(ex2, LEAD_I.replace(mode=mode))
        assert cost(a, ex2) == 14
        assert approximation_ratio(cost(a, ex2), optimal_cost(ex2)) == Fraction(7, 6)
        assert metrics.units_total > 0 and metrics.completed


def test_example2_stage_records(ex2):
    run = simulate_balance(ex2, LEAD_I)
    assert [(s.lo, s.hi, s.k_r) for s in run.metrics.stages] == [(2, float("inf"), 6), (1, 2, 2)]


def test_singleton():
    inst = Instance.from_rows([[0]])
    a, metrics = run_balance(inst)
    assert a.pi == (0,) and cost(a, inst) == 0 and metrics.units_total == 0


def test_disjoint_holdings_cost_zero():
    rows = [[0] * 4 for _ in range(8)]
    for j in range(8):
        rows[j][j // 2] = 1 + j
    inst = Instance.from_rows(rows)
    for policy in SelectionPolicy:
        a, _ = run_balance(inst, ProtocolConfig(policy=policy))
        assert cost(a, inst) == 0


def test_label_quota_rule_counterexample():
    # the leader holds label 0 and so only the floor quota under the label rule
    inst = Instance.from_rows([[10, 1], [10, 0], [0, 0]])
    cfg = ProtocolConfig(leader=0)
    pooled = cost(run_balance(inst, cfg)[0], inst)
    label = cost(run_balance(inst, cfg.replace(quota_rule="label"))[0], inst)
    assert optimal_cost(inst) == 1
    assert pooled == 1 and label == 11


def test_invalid_config():
    with pytest.raises(InvalidConfig):
        ProtocolConfig(mode="fast")
    with pytest.raises(InvalidConfig):
        ring_ids(4, ProtocolConfig(leader=4))


def test_forced_leader_wins():
    inst = gen_random(6, 9, 20, 0.7, 1)
    for leader in range(6):
        assert simulate_balance(inst, ProtocolConfig(leader=leader)).leader_pos == leader


def _instances(count, seed, n_max=7, m_max=14):
    rng = random.Random(seed)
    for k in range(count):
        n = rng.randint(1, n_max)
        yield k, gen_random(n, rng.randint(n, m_max), rng.choice((0, 1, 5, 64)), rng.choice((0.3, 1.0)), k)


def test_balanced_and_three_approx():
    for k, inst in _instances(150, 1):
        for mode in ("sync", "async"):
            a, _ = run_balance(inst, ProtocolConfig(seed=k, mode=mode))
            assert is_balanced(a, inst)
            opt = optimal_cost(inst)
            if opt:
                assert cost(a, inst) <= 3 * opt


def test_stage_domination():
    """A color taken in a weighted stage sits in that stage's interval at its owner."""
    for k, inst in _instances(100, 2):
        run = simulate_balance(inst, ProtocolConfig(seed=k))
        last = run.intervals[-1].r
        for j, r in run.color_stage.items():
            if r != last:
                assert inst.q[j][run.assignment.pi[j]] in run.intervals[r]


def test_speak_once():
    for k, inst in _instances(100, 3):
        run = simulate_balance(inst, ProtocolConfig(seed=k))
        if inst.n > 1:
            assert all(len(s) == 1 for s in run.speak_stages)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from(list(SelectionPolicy)))
def test_sync_async_equivalence(seed, policy):
    rng = random.Random(seed)
    n = rng.randint(2, 7)
    inst = gen_random(n, rng.randint(n, 14), rng.choice((1, 9, 64)), rng.choice((0.4, 1.0)), seed)
    cfg = ProtocolConfig(seed=seed, policy=policy)
    want = run_balance(inst, cfg)[0]
    for delay in (UnitDelay(), UniformDelay(1, 5, seed), TableDelay.adversarial(n, seed)):
        assert run_balance(inst, cfg.replace(mode="async", delay=delay))[0] == want


def test_determinism():
    inst = gen_random(6, 11, 64, 0.8, 5)
    a = simulate_balance(inst, ProtocolConfig(seed=3))
    b = simulate_balance(inst, ProtocolConfig(seed=3))
    assert a.assignment == b.assignment and a.metrics == b.metrics


def test_trace_records_every_message(ex2):
    trace = []
    run = simulate_balance(ex2, LEAD_I, trace=trace)
    assert len(trace) == run.metrics.messages_total
    assert sum(t["units"] for t in trace) == run.metrics.units_total
    assert [t["t"] for t in trace] == sorted(t["t"] for t in trace)
