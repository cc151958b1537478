"""Distributed balanced color assignment on rings, with an exact oracle and a benchmark harness."""
from .balance import (
    DesyncDetected,
    InvalidConfig,
    ProtocolConfig,
    ProtocolError,
    SelectionPolicy,
    Stall,
    run_balance,
    simulate_balance,
)
from .election import leader_elect
from .instances import example1, example2, figure1, gen_family_I1, gen_family_I2, gen_random, gen_tight
from .model import Assignment, Instance, approximation_ratio, cost, is_balanced, quotas, stage_intervals
from .oracle import exhaustive_optimal, optimal_assignment, optimal_cost
from .sim import RunMetrics, TableDelay, UniformDelay, UnitDelay, run_async, run_sync
from .variants import run_eps_approx, run_gather_baseline, run_protocol, run_two_approx

__all__ = [
    "Assignment", "DesyncDetected", "Instance", "InvalidConfig", "ProtocolConfig", "ProtocolError",
    "RunMetrics", "SelectionPolicy", "Stall", "TableDelay", "UniformDelay", "UnitDelay",
    "approximation_ratio", "cost", "example1", "example2", "exhaustive_optimal", "figure1",
    "gen_family_I1", "gen_family_I2", "gen_random", "gen_tight", "is_balanced", "leader_elect",
    "optimal_assignment", "optimal_cost", "quotas", "run_async", "run_balance", "run_eps_approx",
    "run_gather_baseline", "run_protocol", "run_sync", "run_two_approx", "simulate_balance",
    "stage_intervals",
]
