from fractions import Fraction

import pytest

from ringbalance.balance import ProtocolConfig, SelectionPolicy, simulate_balance
from ringbalance.instances import (
    BadParams,
    BadSpec,
    FamilyISpec,
    IntervalConditionUnsatisfiable,
    NonIntegralWeights,
    example1,
    example2,
    family_closed_form,
    figure1,
    figure1_assignments,
    find_tight_q,
    gen_family_I1,
    gen_family_I2,
    gen_random,
    gen_tight,
    tight_ratio_formula,
)
from ringbalance.model import approximation_ratio, cost, is_balanced, validate_instance
from ringbalance.oracle import optimal_assignment, optimal_cost, verify_pair_lemma

# color j (0-based) -> (Q[j][a_i], Q[j][a_i']) as tabulated for the two examples
EXAMPLE1 = [(2, 3), (2, 2), (2, 3), (2, 2), (2, 2), (2, 3), (2, 3), (2, 2)]
EXAMPLE2 = [(2, 1), (2, 2), (2, 1), (2, 2), (2, 2), (2, 1), (2, 1), (2, 2)]


def test_gen_random_zero_weights():
    inst = gen_random(2, 4, 0, 0.7, 3)
    assert all(v == 0 for row in inst.q for v in row)


def test_gen_random_deterministic_and_bounded():
    a = gen_random(4, 8, 64, 0.5, 7)
    assert a == gen_random(4, 8, 64, 0.5, 7)
    validate_instance(a)
    assert a.p <= 64


@pytest.mark.parametrize("args", [(3, 2, 5, 0.5, 0), (2, 4, -1, 0.5, 0), (2, 4, 5, 1.5, 0), (0, 4, 5, 0.5, 0)])
def test_gen_random_bad_params(args):
    with pytest.raises(BadParams):
        gen_random(*args)


def test_examples_reproduce_tables():
    assert [tuple(r) for r in example1().q] == EXAMPLE1
    assert [tuple(r) for r in example2().q] == EXAMPLE2


@pytest.mark.parametrize("spec", [
    FamilyISpec(n=3, t=4, u=2), FamilyISpec(n=2, t=3, u=2), FamilyISpec(n=2, t=4, u=1),
    FamilyISpec(n=2, t=4, u=2, splits=((0, 0),)),
])
def test_family_bad_spec(spec):
    with pytest.raises(BadSpec):
        gen_family_I1(spec)


def test_family_structure_and_closed_forms():
    for seed in range(20):
        spec = FamilyISpec(n=2 * (1 + seed % 3), t=2 * (1 + seed % 4), u=2 + seed % 5, seed=seed)
        for gen, side in ((gen_family_I1, "i"), (gen_family_I2, "i_prime")):
            inst = gen(spec)
            a, c = optimal_assignment(inst)
            assert verify_pair_lemma(inst, a)
            assert c == family_closed_form(inst)
            for pair in inst.meta_dict()["pairs"]:
                # both agents of each pair hold items of every pair color
                assert all(inst.q[j][pair["i"]] > 0 and inst.q[j][pair["i_prime"]] > 0 for j in pair["colors"])
                assert all(a.pi[j] == pair[side] for j in pair["c_prime"])
        i1 = gen_family_I1(spec)
        assert optimal_cost(i1) == (spec.n // 2) * spec.t * spec.u


def test_figure1_fixture():
    inst = figure1()
    b, c = figure1_assignments()
    assert is_balanced(b, inst) and is_balanced(c, inst)
    assert (cost(b, inst), cost(c, inst)) == (17, 16)
    assert optimal_cost(inst) == 16


def test_tight_oracle_value():
    inst = gen_tight(4, 40, Fraction(9, 10), Fraction(1, 10), check_interval=False)
    assert optimal_cost(inst) == 74


def test_tight_non_integral():
    with pytest.raises(NonIntegralWeights):
        gen_tight(4, 3, Fraction(1, 2), Fraction(1, 2))


def test_tight_interval_condition_checked():
    with pytest.raises(IntervalConditionUnsatisfiable):
        gen_tight(4, 40, Fraction(9, 10), Fraction(1, 10))


def test_tight_ratio_measured_against_formula():
    delta, eps = Fraction(9, 10), Fraction(1, 10)
    q = find_tight_q(4, delta, eps)
    assert q == 280
    inst = gen_tight(4, q, delta, eps)
    run = simulate_balance(inst, ProtocolConfig(leader=0, policy=SelectionPolicy.LOWEST_INDEX))
    ratio = approximation_ratio(cost(run.assignment, inst), optimal_cost(inst))
    assert tight_ratio_formula(delta, eps) == Fraction(107, 37)
    # frozen measurement; it sits above the proof's formula, see README
    assert ratio == 3
    assert optimal_cost(inst) == 2 * q * (delta + eps / 4)
