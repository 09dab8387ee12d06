"""Desk-scale runs used by the acceptance suite and ``overhead-report --measure``."""

from __future__ import annotations

from dataclasses import dataclass

from .core_types import BillingPeriodConfig
from .datasets import generate_synthetic, generate_tariffs
from .network import SimConfig, Simulation
from .overhead import CostModel, Role, memory_estimate

VALUE_BYTES = 8


@dataclass
class YearRun:
    intervals: int
    final_bill: float
    true_bill: float
    footprint_bytes: int
    analytic_bytes: float


def run_single_meter_year(days: int = 365, seed: int = 7) -> YearRun:
    """One meter, 15-minute intervals, one billing period of ``days`` days."""
    period = BillingPeriodConfig(15, days)
    data = generate_synthetic(1, period, profile_seed=seed)
    tariffs = generate_tariffs([1], period, seed=seed)
    (meter,) = data.series
    config = SimConfig(areas={meter: 1}, period=period, secrets={meter: bytes(range(32))})
    sim = Simulation(config, data.series, tariffs, record_trace=False)
    sim.run_period()
    footprint = (sim.meters[meter].footprint_values() + sim.ledger.footprint_values()) * VALUE_BYTES
    truth = sum(c * p for c, p in zip(data.series[meter].readings, tariffs[1].prices))
    L = period.interval_count
    return YearRun(L, sim.bills[meter], truth, footprint, memory_estimate(Role.TOTAL, L, CostModel()))
