"""Built-in acceptance suite: thirteen checks, each with a measured value."""
from __future__ import annotations

import json
import math
import random
import statistics
import time
from dataclasses import asdict, dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable

from .balance import ProtocolConfig, SelectionPolicy, simulate_balance
from .bench import ExperimentPlan, rows_to_jsonl, run_plan
from .instances import (
    FamilyISpec,
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
from .model import Instance, approximation_ratio, cost, is_balanced, is_total
from .oracle import exhaustive_optimal, optimal_assignment, optimal_cost, verify_pair_lemma
from .sim import TableDelay, UniformDelay, UnitDelay
from .variants import run_protocol

OracleFn = Callable[[Instance], int]

SUITE_SIZE = 1000
SUITE_SEED = 20240601
SCALING_NS = (4, 8, 16, 32)
SCALING_SEEDS = range(5)
GROWTH_BAND = (3.0, 5.5)
TIME_C_MAX = 10
TIGHT = (Fraction(9, 10), Fraction(1, 10))


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    measured: str
    detail: str = ""

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        tail = f" ({self.detail})" if self.detail else ""
        return f"[{mark}] {self.number:2d}. {self.title}: {self.measured}{tail}"


@lru_cache(maxsize=1)
def feasibility_suite() -> tuple[Instance, ...]:
    """1000 small random instances covering every (p_max, density) combination."""
    rng = random.Random(SUITE_SEED)
    out = []
    combos = [(p, d) for p in (0, 1, 64) for d in (0.2, 1.0)]
    for k in range(SUITE_SIZE):
        n = rng.randint(1, 8)
        m = rng.randint(n, 16)
        p_max, density = combos[k % len(combos)]
        out.append(gen_random(n, m, p_max, density, rng.randrange(2 ** 31)))
    return tuple(out)


SUITE_PROTOCOLS = {
    "base": ProtocolConfig(),
    "base@async": ProtocolConfig(mode="async"),
    "two-approx": ProtocolConfig(variant="two-approx"),
    "eps:1/2": ProtocolConfig(variant="eps", epsilon=Fraction(1, 2)),
    "gather": ProtocolConfig(variant="gather"),
}


@lru_cache(maxsize=1)
def suite_runs() -> dict[str, tuple]:
    """Per protocol, the assignment on every suite instance (the run seed is the instance index)."""
    out = {}
    for name, config in SUITE_PROTOCOLS.items():
        out[name] = tuple(
            run_protocol(inst, config.replace(seed=k)).assignment
            for k, inst in enumerate(feasibility_suite())
        )
    return out


def _ratio_str(r) -> str:
    return "inf" if r == math.inf else f"{float(r):.4f}"


def c1_oracle_fixtures(oracle: OracleFn) -> CriterionResult:
    t0 = time.perf_counter()
    got = (oracle(example1()), oracle(example2()))
    elapsed = time.perf_counter() - t0
    ok = got == (16, 12) and elapsed < 1.0
    return CriterionResult(1, "oracle on the two-agent examples", ok,
                           f"costs {got[0]} and {got[1]} in {elapsed * 1000:.1f} ms", "want 16 and 12")


def c2_figure1() -> CriterionResult:
    inst = figure1()
    b, c = figure1_assignments()
    got = (cost(b, inst), cost(c, inst))
    return CriterionResult(2, "three-agent fixture arithmetic", got == (17, 16),
                           f"assignments cost {got[0]} and {got[1]}", "want 17 and 16")


def c3_feasibility() -> CriterionResult:
    suite = feasibility_suite()
    failures = []
    for name, assignments in suite_runs().items():
        for k, (inst, a) in enumerate(zip(suite, assignments)):
            if not (is_total(a, inst) and is_balanced(a, inst)):
                failures.append(f"{name}#{k}")
    runs = len(suite) * len(SUITE_PROTOCOLS)
    return CriterionResult(3, "balanced, exactly-one outputs", not failures,
                           f"{len(failures)} failures in {runs} runs", ", ".join(failures[:5]))


def _max_ratio(name: str, oracle: OracleFn) -> tuple[Fraction | float, int]:
    worst: Fraction | float = Fraction(0)
    considered = 0
    for inst, a in zip(feasibility_suite(), suite_runs()[name]):
        opt = oracle(inst)
        if opt <= 0:
            continue
        considered += 1
        worst = max(worst, approximation_ratio(cost(a, inst), opt))
    return worst, considered


def c4_three_approx(oracle: OracleFn) -> CriterionResult:
    worst, considered = _max_ratio("base", oracle)
    return CriterionResult(4, "base ratio at most 3", worst <= 3,
                           f"max ratio {_ratio_str(worst)} over {considered} instances")


def c5_variants(oracle: OracleFn) -> CriterionResult:
    two, _ = _max_ratio("two-approx", oracle)
    eps, _ = _max_ratio("eps:1/2", oracle)
    gather_exact = all(cost(a, inst) == oracle(inst)
                       for inst, a in zip(feasibility_suite(), suite_runs()["gather"]))
    ok = two <= 2 and eps <= Fraction(5, 2) and gather_exact
    return CriterionResult(5, "variant ratios", ok,
                           f"two-approx max {_ratio_str(two)}, eps=1/2 max {_ratio_str(eps)}, "
                           f"gather exact: {gather_exact}")


def c6_sync_async(pairs: int = 100) -> CriterionResult:
    rng = random.Random(6)
    mismatches = 0
    checked = 0
    for k in range(pairs):
        n = rng.randint(2, 8)
        inst = gen_random(n, rng.randint(n, 16), rng.choice((1, 8, 64)), rng.choice((0.4, 1.0)), k)
        base = ProtocolConfig(seed=k, policy=rng.choice(list(SelectionPolicy)))
        want = simulate_balance(inst, base).assignment
        for delay in (UnitDelay(), UniformDelay(1, 5, k), TableDelay.adversarial(n, k)):
            checked += 1
            got = simulate_balance(inst, base.replace(mode="async", delay=delay)).assignment
            mismatches += got != want
    return CriterionResult(6, "async assignment equals sync", mismatches == 0,
                           f"{mismatches} mismatches in {checked} runs")


def c7_sandwich() -> CriterionResult:
    bad = []
    checked = 0
    for k, inst in enumerate(feasibility_suite()):
        if inst.p < 1:
            continue
        checked += 1
        run = simulate_balance(inst, ProtocolConfig(seed=k))
        p_prime = run.p_hat
        power = p_prime & (p_prime - 1) == 0
        once = all(len(s) == 1 for s in run.speak_stages)
        if not (power and inst.p <= p_prime <= 2 * inst.p and once):
            bad.append(k)
    return CriterionResult(7, "p <= p' <= 2p and one speak-up per agent", not bad,
                           f"{len(bad)} violations in {checked} instances")


def c8_cross_validation(oracle: OracleFn, count: int = 500) -> CriterionResult:
    rng = random.Random(8)
    mismatches = 0
    for k in range(count):
        n = rng.randint(1, 4)
        inst = gen_random(n, rng.randint(n, 8), rng.choice((1, 5, 64)), rng.choice((0.3, 1.0)), k)
        mismatches += oracle(inst) != exhaustive_optimal(inst)[1]
    return CriterionResult(8, "flow oracle equals exhaustive search", mismatches == 0,
                           f"{mismatches} mismatches in {count} instances")


def c9_family(oracle: OracleFn, count: int = 24) -> CriterionResult:
    rng = random.Random(9)
    bad = 0
    for k in range(count):
        spec = FamilyISpec(n=rng.choice((2, 4, 6)), t=rng.choice((2, 4, 6)), u=rng.randint(2, 9), seed=k)
        for gen, side in ((gen_family_I1, "i"), (gen_family_I2, "i_prime")):
            inst = gen(spec)
            a, opt = optimal_assignment(inst)
            placed = all(a.pi[j] == p[side] for p in inst.meta_dict()["pairs"] for j in p["c_prime"])
            ok = verify_pair_lemma(inst, a) and placed and oracle(inst) == family_closed_form(inst)
            bad += not ok
    return CriterionResult(9, "family-I pair structure and closed forms", bad == 0,
                           f"{bad} failures in {2 * count} instances")


@lru_cache(maxsize=1)
def scaling_runs() -> dict[int, list]:
    out = {}
    for n in SCALING_NS:
        out[n] = []
        for s in SCALING_SEEDS:
            inst = gen_random(n, n, 64, 1.0, s)
            sync = simulate_balance(inst, ProtocolConfig(seed=s))
            asyn = simulate_balance(inst, ProtocolConfig(seed=s, mode="async"))
            out[n].append((inst, sync.metrics, asyn.metrics))
    return out


def c10_message_scaling() -> CriterionResult:
    t0 = time.perf_counter()
    runs = scaling_runs()
    medians = [statistics.median(sm.units_total for _, sm, _ in runs[n]) for n in SCALING_NS]
    factors = [b / a for a, b in zip(medians, medians[1:])]
    lo, hi = GROWTH_BAND
    growth_ok = all(lo <= f <= hi for f in factors)
    ph2_ok = True
    for n in SCALING_NS:
        for inst, sm, am in runs[n]:
            if sm.units_per_phase.get("phase2", 0) > 2 * n * n:
                ph2_ok = False
            bound = 2 * n * math.ceil(math.log2(inst.p + 1) / math.log2(n)) + 2 * n
            if am.units_per_phase.get("phase2", 0) > bound:
                ph2_ok = False
    elapsed = time.perf_counter() - t0
    ok = growth_ok and ph2_ok and elapsed < 60
    meds = ", ".join(f"{n}:{m:g}" for n, m in zip(SCALING_NS, medians))
    facs = ", ".join(f"{f:.2f}" for f in factors)
    return CriterionResult(10, "message scaling", ok, f"median units {meds}; growth {facs}",
                           f"band [{lo}, {hi}], phase-2 bounds held: {ph2_ok}")


def c11_time_scaling() -> CriterionResult:
    worst = 0.0
    for n, items in scaling_runs().items():
        for inst, sm, _ in items:
            worst = max(worst, sm.time_units / (n * (math.log2(max(inst.p, 1)) + 2)))
    return CriterionResult(11, "sync rounds within C n (log p + 2)", worst <= TIME_C_MAX,
                           f"fitted C = {worst:.3f}", f"limit {TIME_C_MAX}")


def c12_tightness(oracle: OracleFn) -> CriterionResult:
    delta, eps = TIGHT
    q = find_tight_q(4, delta, eps)
    inst = gen_tight(4, q, delta, eps)
    run = simulate_balance(inst, ProtocolConfig(leader=0, policy=SelectionPolicy.LOWEST_INDEX))
    measured = approximation_ratio(cost(run.assignment, inst), oracle(inst))
    formula = tight_ratio_formula(delta, eps)
    note = "matches formula" if measured == formula else "deviates from formula, see README"
    return CriterionResult(12, "tight family ratio", measured >= 2,
                           f"q={q}: measured {_ratio_str(measured)} vs formula {_ratio_str(formula)}", note)


DETERMINISM_PLAN = {
    "n": [3, 5], "m": ["n", "2n"], "p_max": [16], "density": [0.6],
    "protocols": ["sync", "async", "two-approx", "eps:1/2", "gather"],
    "reps": 3, "seed": 13, "delay": "uniform:1,4",
}


def c13_determinism() -> CriterionResult:
    plan = ExperimentPlan.from_dict(DETERMINISM_PLAN)
    outputs = [rows_to_jsonl(run_plan(plan, workers=w)) for w in (1, 1, 2)]
    same = outputs[0] == outputs[1] == outputs[2]
    return CriterionResult(13, "bench output is reproducible", same,
                           f"{len(outputs[0].splitlines())} rows, identical across 3 runs: {same}",
                           "workers 1, 1 and 2")


def run_all(oracle: OracleFn = optimal_cost) -> list[CriterionResult]:
    return [
        c1_oracle_fixtures(oracle),
        c2_figure1(),
        c3_feasibility(),
        c4_three_approx(oracle),
        c5_variants(oracle),
        c6_sync_async(),
        c7_sandwich(),
        c8_cross_validation(oracle),
        c9_family(oracle),
        c10_message_scaling(),
        c11_time_scaling(),
        c12_tightness(oracle),
        c13_determinism(),
    ]


def results_json(results: list[CriterionResult]) -> str:
    return json.dumps({"passed": all(r.passed for r in results),
                       "criteria": [asdict(r) for r in results]}, indent=2)
