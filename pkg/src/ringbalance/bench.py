"""Experiment plans, per-run report rows and the parallel sweep runner."""
from __future__ import annotations

import csv
import io
import json
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from itertools import product
from pathlib import Path

from .balance import ProtocolConfig, SelectionPolicy
from .instances import gen_random
from .io import parse_delay, ratio_value
from .model import approximation_ratio, cost, is_balanced
from .oracle import optimal_cost
from .variants import check_epsilon, run_protocol

COLUMNS = (
    "n", "m", "p_max", "density", "rep", "seed", "protocol", "cost", "oracle_cost", "ratio",
    "units_total", "units_phase1", "units_phase2", "units_phase3", "units_other",
    "time_units", "stages", "balanced",
)


class BadPlan(ValueError):
    pass


@dataclass(frozen=True)
class ProtocolSpec:
    """Parsed protocol token: ``sync``, ``async``, ``two-approx``, ``eps:1/2`` or ``gather``,
    optionally suffixed with ``@sync`` or ``@async``."""

    token: str
    variant: str
    mode: str
    epsilon: Fraction | None = None

    @classmethod
    def parse(cls, token: str) -> "ProtocolSpec":
        name, _, mode = token.partition("@")
        if name in ("sync", "async"):
            if mode and mode != name:
                raise BadPlan(f"conflicting modes in {token!r}")
            return cls(token, "base", name)
        mode = mode or "sync"
        if mode not in ("sync", "async"):
            raise BadPlan(f"unknown mode in {token!r}")
        eps = None
        if name.startswith("eps:"):
            try:
                eps = check_epsilon(name[4:])
            except ValueError as exc:
                raise BadPlan(str(exc)) from exc
            name = "eps"
        elif name == "eps":
            raise BadPlan("the eps variant needs a value, e.g. eps:1/2")
        if name not in ("base", "two-approx", "eps", "gather"):
            raise BadPlan(f"unknown protocol {token!r}")
        return cls(token, name, mode, eps)


def _m_values(raw, n: int) -> list[int]:
    out = []
    for v in raw if isinstance(raw, list) else [raw]:
        if isinstance(v, int):
            out.append(v)
        elif v == "n":
            out.append(n)
        elif isinstance(v, str) and v.endswith("n") and v[:-1].isdigit():
            out.append(int(v[:-1]) * n)
        else:
            raise BadPlan(f"m must be an integer, 'n' or '<k>n', got {v!r}")
    return out


def _as_list(v) -> list:
    return list(v) if isinstance(v, (list, tuple)) else [v]


@dataclass(frozen=True)
class Job:
    n: int
    m: int
    p_max: int
    density: float
    rep: int
    seed: int
    protocol: str
    policy: str
    delay: str
    with_oracle: bool


@dataclass
class ExperimentPlan:
    n: list[int]
    m: list = field(default_factory=lambda: ["n"])
    p_max: list[int] = field(default_factory=lambda: [64])
    density: list[float] = field(default_factory=lambda: [1.0])
    protocols: list[str] = field(default_factory=lambda: ["sync"])
    reps: int = 1
    seed: int = 0
    workers: int = 1
    policy: str = "highest-weight"
    delay: str = "unit"
    with_oracle: bool = True

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentPlan":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise BadPlan(f"unknown plan keys: {sorted(unknown)}")
        if "n" not in data:
            raise BadPlan("plan needs an 'n' list")
        data = dict(data)
        for key in ("n", "p_max", "density", "protocols"):
            if key in data:
                data[key] = _as_list(data[key])
        if "m" in data:
            data["m"] = _as_list(data["m"])
        plan = cls(**data)
        plan.validate()
        return plan

    @classmethod
    def load(cls, path) -> "ExperimentPlan":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise BadPlan(f"plan file is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    def validate(self) -> None:
        if not isinstance(self.reps, int) or self.reps < 1:
            raise BadPlan(f"reps must be at least 1, got {self.reps}")
        if not isinstance(self.workers, int) or self.workers < 1:
            raise BadPlan(f"workers must be at least 1, got {self.workers}")
        if not self.n or not self.protocols:
            raise BadPlan("plan needs at least one n and one protocol")
        for n in self.n:
            if not isinstance(n, int) or n < 1:
                raise BadPlan(f"n must be a positive integer, got {n!r}")
            for m in _m_values(self.m, n):
                if m < n:
                    raise BadPlan(f"grid point n={n}, m={m} violates m >= n")
        for p in self.p_max:
            if not isinstance(p, int) or p < 0:
                raise BadPlan(f"p_max must be a non-negative integer, got {p!r}")
        for d in self.density:
            if not 0 <= d <= 1:
                raise BadPlan(f"density must lie in [0, 1], got {d}")
        for token in self.protocols:
            ProtocolSpec.parse(token)
        try:
            SelectionPolicy(self.policy)
            parse_delay(self.delay)
        except (ValueError, OSError) as exc:
            raise BadPlan(str(exc)) from exc

    def jobs(self) -> list[Job]:
        """Every run in plan order; the instance seed depends only on the grid point and rep."""
        out = []
        point = 0
        for n in self.n:
            for m, p_max, density in product(_m_values(self.m, n), self.p_max, self.density):
                for rep in range(self.reps):
                    seed = self.seed + 1000 * point + rep
                    for token in self.protocols:
                        out.append(Job(n, m, p_max, float(density), rep, seed, token,
                                       self.policy, self.delay, self.with_oracle))
                point += 1
        return out


@dataclass
class ReportRow:
    n: int
    m: int
    p_max: int
    density: float
    rep: int
    seed: int
    protocol: str
    cost: int
    oracle_cost: int | None
    ratio: float | str | None
    units_total: int
    units_phase1: int
    units_phase2: int
    units_phase3: int
    units_other: int
    time_units: int
    stages: int
    balanced: bool
    assignment: list[int] | None = None

    def csv_values(self) -> list:
        return [getattr(self, c) for c in COLUMNS]


def run_job(job: Job, emit_assignment: bool = False) -> ReportRow:
    spec = ProtocolSpec.parse(job.protocol)
    inst = gen_random(job.n, job.m, job.p_max, job.density, job.seed)
    config = ProtocolConfig(mode=spec.mode, variant=spec.variant, epsilon=spec.epsilon,
                            policy=job.policy, delay=parse_delay(job.delay, job.seed), seed=job.seed)
    run = run_protocol(inst, config)
    c = cost(run.assignment, inst)
    opt = optimal_cost(inst) if job.with_oracle else None
    phases = run.metrics.units_per_phase
    named = [phases.get(f"phase{k}", 0) for k in (1, 2, 3)]
    return ReportRow(
        n=job.n, m=job.m, p_max=job.p_max, density=job.density, rep=job.rep, seed=job.seed,
        protocol=job.protocol, cost=c, oracle_cost=opt,
        ratio=None if opt is None else ratio_value(approximation_ratio(c, opt)),
        units_total=run.metrics.units_total,
        units_phase1=named[0], units_phase2=named[1], units_phase3=named[2],
        units_other=run.metrics.units_total - sum(named),
        time_units=run.metrics.time_units,
        stages=len(run.metrics.stages),
        balanced=is_balanced(run.assignment, inst),
        assignment=list(run.assignment.pi) if emit_assignment else None,
    )


def _run_plain(job: Job) -> ReportRow:
    return run_job(job)


def _run_emit(job: Job) -> ReportRow:
    return run_job(job, emit_assignment=True)


def run_plan(plan: ExperimentPlan, workers: int | None = None, emit_assignments: bool = False) -> list[ReportRow]:
    """Rows in plan order whatever the worker count; a single run is never split."""
    jobs = plan.jobs()
    workers = workers or plan.workers
    fn = _run_emit if emit_assignments else _run_plain
    if workers <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def rows_to_jsonl(rows: list[ReportRow]) -> str:
    lines = []
    for row in rows:
        d = asdict(row)
        if d["assignment"] is None:
            del d["assignment"]
        lines.append(json.dumps(d, sort_keys=False))
    return "".join(line + "\n" for line in lines)


def rows_to_csv(rows: list[ReportRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for row in rows:
        w.writerow(["" if v is None else v for v in row.csv_values()])
    return buf.getvalue()


def summarize(rows: list[ReportRow]) -> list[dict]:
    """Median and max per (n, m, p_max, density, protocol); kept apart from the raw rows."""
    groups: dict[tuple, list[ReportRow]] = {}
    for row in rows:
        groups.setdefault((row.n, row.m, row.p_max, row.density, row.protocol), []).append(row)
    out = []
    for (n, m, p_max, density, protocol), rs in groups.items():
        ratios = [r.ratio for r in rs if isinstance(r.ratio, float)]
        out.append({
            "n": n, "m": m, "p_max": p_max, "density": density, "protocol": protocol, "runs": len(rs),
            "median_units_total": statistics.median(r.units_total for r in rs),
            "median_time_units": statistics.median(r.time_units for r in rs),
            "max_ratio": max(ratios) if ratios else None,
            "all_balanced": all(r.balanced for r in rs),
        })
    return out
