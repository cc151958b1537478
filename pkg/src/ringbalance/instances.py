"""Instance generators: random suites, the paired family I (I1/I2), the tight
family for the 3-approximation, and small hand-checked fixtures."""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .balance import pow2_estimate
from .model import Assignment, Instance, stage_intervals


class BadParams(ValueError):
    pass


class BadSpec(ValueError):
    pass


class NonIntegralWeights(BadSpec):
    pass


class IntervalConditionUnsatisfiable(BadSpec):
    pass


def gen_random(n: int, m: int, p_max: int, density: float, seed: int) -> Instance:
    """Each entry is nonzero with probability ``density``, then uniform in [1, p_max]."""
    if n < 1 or m < n:
        raise BadParams(f"need 1 <= n <= m, got n={n}, m={m}")
    if p_max < 0:
        raise BadParams(f"p_max must be non-negative, got {p_max}")
    if not 0 <= density <= 1:
        raise BadParams(f"density must lie in [0, 1], got {density}")
    rng = random.Random(seed)
    rows = []
    for _ in range(m):
        row = []
        for _ in range(n):
            hit = rng.random() < density
            row.append(rng.randint(1, p_max) if hit and p_max > 0 else 0)
        rows.append(row)
    meta = {"family": "random", "p_max": p_max, "density": density, "seed": seed}
    return Instance.from_rows(rows, meta)


# -- family I ---------------------------------------------------------------


@dataclass(frozen=True)
class FamilyISpec:
    """Pairs (a_i, a_{i+n/2}) share t colors; C' lists positions 0..t-1 within each pair's block."""

    n: int
    t: int
    u: int
    splits: tuple[tuple[int, ...], ...] | None = None
    seed: int = 0

    def validate(self) -> None:
        if self.n < 2 or self.n % 2:
            raise BadSpec(f"n must be even and at least 2, got {self.n}")
        if self.t < 2 or self.t % 2:
            raise BadSpec(f"t must be even and at least 2, got {self.t}")
        if self.u <= 1:
            raise BadSpec(f"u must exceed 1, got {self.u}")
        if self.splits is not None:
            if len(self.splits) != self.n // 2:
                raise BadSpec(f"need one split per pair ({self.n // 2}), got {len(self.splits)}")
            for s in self.splits:
                if len(set(s)) != self.t // 2 or not all(0 <= x < self.t for x in s):
                    raise BadSpec(f"split {s} is not t/2 distinct positions in 0..{self.t - 1}")

    def c_prime_positions(self) -> list[tuple[int, ...]]:
        if self.splits is not None:
            return [tuple(sorted(s)) for s in self.splits]
        rng = random.Random(self.seed)
        return [tuple(sorted(rng.sample(range(self.t), self.t // 2))) for _ in range(self.n // 2)]


def _family(spec: FamilyISpec, bump: int, name: str) -> Instance:
    spec.validate()
    n, t, u = spec.n, spec.t, spec.u
    half = n // 2
    m = n * t // 2
    rows = [[0] * n for _ in range(m)]
    pairs = []
    for i, positions in enumerate(spec.c_prime_positions()):
        ip = i + half
        block = list(range(i * t, (i + 1) * t))
        c_prime = [block[x] for x in positions]
        for j in block:
            rows[j][i] = u
            rows[j][ip] = u if j in c_prime else u + bump
        pairs.append({"i": i, "i_prime": ip, "colors": block, "c_prime": c_prime})
    meta = {"family": name, "t": t, "u": u, "pairs": pairs}
    return Instance.from_rows(rows, meta)


def gen_family_I1(spec: FamilyISpec) -> Instance:
    """a_i holds u of every color of its block; a_i' holds u on C' and u+1 on C''."""
    return _family(spec, +1, "I1")


def gen_family_I2(spec: FamilyISpec) -> Instance:
    """a_i holds u of every color of its block; a_i' holds u on C' and u-1 on C''."""
    return _family(spec, -1, "I2")


def family_closed_form(inst: Instance) -> int:
    """Optimal cost predicted for a family-I instance: the C_i weights of a_i (I1) or a_i' (I2)."""
    meta = inst.meta_dict()
    side = "i" if meta["family"] == "I1" else "i_prime"
    return sum(inst.q[j][p[side]] for p in meta["pairs"] for j in p["colors"])


# -- tight family -----------------------------------------------------------


@dataclass(frozen=True)
class TightFamilySpec:
    n: int
    q: Fraction
    delta: Fraction
    eps: Fraction

    def weights(self) -> tuple[Fraction, Fraction, Fraction]:
        """(own weight of c_2i at a_2i, weight of c_2i+1 at a_2i, weight of c_2i at a_2i+1)."""
        q, d, e = self.q, self.delta, self.eps
        return q * (d + e / 4), q, q * (2 * d - e / 4)


def tight_ratio_formula(delta, eps) -> Fraction:
    delta, eps = Fraction(delta), Fraction(eps)
    return 3 - 4 * eps / (4 * delta + eps)


def tight_interval_ok(spec: TightFamilySpec) -> bool:
    """All three weights in one base-2 interval, ordered as the tightness argument needs."""
    w_own, w_q, w_far = spec.weights()
    if not (w_own < w_far and w_own <= w_q):
        return False
    p = int(max(w_own, w_q, w_far))
    _, p_prime = pow2_estimate(p)
    for iv in stage_intervals(p_prime, 2):
        if w_own in iv:
            return w_q in iv and w_far in iv
    return False


def gen_tight(n: int, q, delta, eps, check_interval: bool = True) -> Instance:
    spec = TightFamilySpec(n, Fraction(q), Fraction(delta), Fraction(eps))
    if n < 2 or n % 2:
        raise BadSpec(f"n must be even, got {n}")
    if not (0 < spec.delta < 1 and 0 < spec.eps < 1 and spec.q > 0):
        raise BadSpec("need q > 0 and delta, eps in (0, 1)")
    values = (*spec.weights(), spec.q * spec.eps / 4)
    if any(v.denominator != 1 for v in values):
        raise NonIntegralWeights(f"weights {[str(v) for v in values]} are not all integers")
    if check_interval and not tight_interval_ok(spec):
        raise IntervalConditionUnsatisfiable(
            f"q={spec.q}: weights {[str(w) for w in spec.weights()]} do not share one stage interval"
        )
    w_own, w_q, w_far = (int(w) for w in spec.weights())
    rows = [[0] * n for _ in range(n)]
    for i in range(n // 2):
        rows[2 * i][2 * i] = w_own
        rows[2 * i + 1][2 * i] = w_q
        rows[2 * i][2 * i + 1] = w_far
    meta = {"family": "tight", "q": str(spec.q), "delta": str(spec.delta), "eps": str(spec.eps)}
    return Instance.from_rows(rows, meta)


def find_tight_q(n: int, delta, eps, q_max: int = 100_000) -> int:
    """Smallest integer q giving integral weights that meet the interval condition."""
    for q in range(1, q_max + 1):
        spec = TightFamilySpec(n, Fraction(q), Fraction(delta), Fraction(eps))
        if all(v.denominator == 1 for v in (*spec.weights(), spec.q * spec.eps / 4)) and tight_interval_ok(spec):
            return q
    raise IntervalConditionUnsatisfiable(f"no q <= {q_max} works for delta={delta}, eps={eps}")


# -- fixtures ---------------------------------------------------------------

# colors 1..8 of the two-agent examples, C' = {2,4,5,8} in 1-indexed terms
EXAMPLE_SPLIT = (1, 3, 4, 7)
EXAMPLE_SPEC = FamilyISpec(n=2, t=8, u=2, splits=(EXAMPLE_SPLIT,))


def example1() -> Instance:
    return gen_family_I1(EXAMPLE_SPEC)


def example2() -> Instance:
    return gen_family_I2(EXAMPLE_SPEC)


# Three agents, six colors (nabla, diamond, heart, triangle, spade, club).
# Not the original figure's counts, which are not recoverable; these are
# chosen so that the two drawn assignments cost 17 and 16.
FIGURE1_SYMBOLS = ("nabla", "diamond", "heart", "triangle", "spade", "club")
FIGURE1_ROWS = (
    (4, 1, 3),
    (2, 4, 2),
    (1, 3, 1),
    (4, 4, 0),
    (3, 0, 0),
    (1, 0, 2),
)


def figure1() -> Instance:
    return Instance.from_rows(FIGURE1_ROWS, {"family": "figure1", "colors": list(FIGURE1_SYMBOLS)})


def figure1_assignments() -> tuple[Assignment, Assignment]:
    """(b): nabla,spade->a0; heart,triangle->a1; club,diamond->a2.
    (c): triangle,spade->a0; heart,diamond->a1; nabla,club->a2."""
    b = Assignment.of([0, 2, 1, 1, 0, 2])
    c = Assignment.of([2, 1, 1, 0, 0, 2])
    return b, c
