"""JSON formats for instances, assignments and run reports, plus delay specs."""
from __future__ import annotations

import json
import math
from fractions import Fraction
from pathlib import Path

from .model import Assignment, Instance, approximation_ratio, is_balanced
from .sim import DelayModel, RunMetrics, TableDelay, UniformDelay, UnitDelay


def instance_to_dict(inst: Instance) -> dict:
    return {"n": inst.n, "m": inst.m, "q": [list(row) for row in inst.q], "meta": inst.meta_dict()}


def instance_from_dict(data: dict) -> Instance:
    try:
        rows = data["q"]
    except (KeyError, TypeError) as exc:
        raise ValueError("instance JSON needs a 'q' matrix") from exc
    inst = Instance.from_rows(rows, data.get("meta") or {})
    if "n" in data and data["n"] != inst.n or "m" in data and data["m"] != inst.m:
        raise ValueError(f"declared n/m ({data.get('n')}, {data.get('m')}) disagree with q ({inst.n}, {inst.m})")
    return inst


def load_instance(path) -> Instance:
    return instance_from_dict(json.loads(Path(path).read_text()))


def dump_instance(inst: Instance) -> str:
    return json.dumps(instance_to_dict(inst), sort_keys=True)


def assignment_to_dict(a: Assignment) -> dict:
    return {"pi": list(a.pi)}


def assignment_from_dict(data: dict) -> Assignment:
    return Assignment.of(data["pi"])


def ratio_value(r) -> float | str:
    """JSON-safe ratio: a float, or the string 'inf'."""
    if r == math.inf:
        return "inf"
    return float(r)


def run_report(inst: Instance, a: Assignment, metrics: RunMetrics, *, variant: str, cost: int,
               oracle_cost: int | None = None, extra: dict | None = None) -> dict:
    report = {
        "variant": variant,
        "assignment": list(a.pi),
        "balanced": is_balanced(a, inst),
        "cost": cost,
        "units_total": metrics.units_total,
        "messages_total": metrics.messages_total,
        "units_per_phase": dict(metrics.units_per_phase),
        "time_units": metrics.time_units,
        "stages": [
            {"r": s.r, "lo": s.lo, "hi": None if s.hi == math.inf else s.hi, "K_r": s.k_r,
             "units": s.units, "step2": s.step2}
            for s in metrics.stages
        ],
    }
    if oracle_cost is not None:
        r = approximation_ratio(cost, oracle_cost)
        report["oracle_cost"] = oracle_cost
        report["ratio"] = ratio_value(r)
        if isinstance(r, Fraction):
            report["ratio_exact"] = f"{r.numerator}/{r.denominator}"
    if extra:
        report.update(extra)
    return report


def parse_delay(spec: str, seed: int = 0) -> DelayModel:
    """``unit``, ``uniform:lo,hi`` or ``table:FILE`` (JSON object {"src,dst": delay, "default": d})."""
    spec = spec.strip()
    if spec == "unit":
        return UnitDelay()
    if spec.startswith("uniform:"):
        lo, hi = (int(x) for x in spec[len("uniform:"):].split(","))
        return UniformDelay(lo, hi, seed)
    if spec.startswith("table:"):
        data = json.loads(Path(spec[len("table:"):]).read_text())
        default = int(data.pop("default", 1)) if isinstance(data, dict) else 1
        return TableDelay.from_mapping(data, default)
    raise ValueError(f"unknown delay model {spec!r}; use unit, uniform:lo,hi or table:FILE")
