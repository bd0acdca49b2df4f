"""Re-pricing every melt as if it had run at best-practice performance."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Mapping, Sequence

from meltline.errors import NoBestCluster, ZeroBaseline
from meltline.ingest import format_timestamp
from meltline.metrics import (
    DEFAULT_TAX_DKK_PER_KG,
    DecisionMatrix,
    HourlySeries,
    window_cost_and_emissions,
)
from meltline.segment import MeltSegment

TOTAL_FIELDS = ("electricity_cost", "carbon_cost", "co2_kg", "total_cost")
TABLE_HEADER = ["operating_mode", "electricity_cost_DKK", "carbon_cost_DKK", "co2_kg", "total_cost_DKK"]


@dataclass(frozen=True)
class BestPracticeProfile:
    cluster_id: int
    avg_duration_s: float
    avg_energy_kWh: float
    avg_kwh_per_tonne: float

    def __post_init__(self):
        if min(self.avg_duration_s, self.avg_energy_kWh, self.avg_kwh_per_tonne) <= 0:
            raise ValueError("best-practice averages must be positive")

    @classmethod
    def from_matrix(cls, matrix: DecisionMatrix, cluster_id) -> "BestPracticeProfile":
        if cluster_id is None:
            raise NoBestCluster("ranking produced no best cluster")
        row = matrix.row(cluster_id)
        return cls(int(cluster_id), float(row[0]), float(row[1]), float(row[2]))


@dataclass(frozen=True)
class ModeTotals:
    electricity_cost: float
    carbon_cost: float
    co2_kg: float
    total_cost: float | None = None

    def __post_init__(self):
        if self.total_cost is None:
            object.__setattr__(self, "total_cost", self.electricity_cost + self.carbon_cost)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return tuple(getattr(self, f) for f in TOTAL_FIELDS)


@dataclass(frozen=True)
class MeltRow:
    melt_id: int
    cluster: int | None
    start_time: float
    actual_energy_kWh: float
    actual_cost_DKK: float
    actual_co2_kg: float
    bp_energy_kWh: float
    bp_cost_DKK: float
    bp_co2_kg: float


@dataclass
class CounterfactualReport:
    rows: list
    current: ModeTotals
    best: ModeTotals
    tax_DKK_per_kg: float = DEFAULT_TAX_DKK_PER_KG
    best_cluster: int | None = None
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_totals(cls, current: ModeTotals, best: ModeTotals, tax=DEFAULT_TAX_DKK_PER_KG) -> "CounterfactualReport":
        return cls([], current, best, tax)

    def percent_changes(self) -> dict[str, float]:
        return percent_changes(self)

    def table_rows(self) -> list[list[str]]:
        pct = percent_changes(self)
        rows = [TABLE_HEADER]
        for label, t in (("current_practice", self.current), ("best_practice", self.best)):
            rows.append([label] + [f"{x:.2f}" for x in t.as_tuple()])
        rows.append(["percentage_change"] + [display_percent(pct[f]) for f in TOTAL_FIELDS])
        return rows

    def to_csv(self, path, format_line: str | None = None) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            if format_line:
                fh.write(format_line + "\n")
            csv.writer(fh, lineterminator="\n").writerows(self.table_rows())

    def per_melt_csv(self, path, format_line: str | None = None) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            if format_line:
                fh.write(format_line + "\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(
                [
                    "melt_id",
                    "cluster",
                    "start_time",
                    "actual_energy_kWh",
                    "actual_cost_DKK",
                    "actual_co2_kg",
                    "bp_energy_kWh",
                    "bp_cost_DKK",
                    "bp_co2_kg",
                ]
            )
            for r in self.rows:
                w.writerow(
                    [
                        r.melt_id,
                        "" if r.cluster is None else r.cluster,
                        format_timestamp(r.start_time),
                        f"{r.actual_energy_kWh:.6f}",
                        f"{r.actual_cost_DKK:.6f}",
                        f"{r.actual_co2_kg:.6f}",
                        f"{r.bp_energy_kWh:.6f}",
                        f"{r.bp_cost_DKK:.6f}",
                        f"{r.bp_co2_kg:.6f}",
                    ]
                )


def percent_change(current: float, best: float) -> float:
    """``(current - best) / current * 100`` at full precision."""
    if not current > 0:
        raise ZeroBaseline(f"baseline must be positive, got {current}")
    return (current - best) / current * 100.0


def display_percent(value: float) -> str:
    """Half-up rounding to two decimals (8.595 -> 8.60)."""
    return str(Decimal(repr(value)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def percent_changes(report: CounterfactualReport) -> dict[str, float]:
    return {
        f: percent_change(getattr(report.current, f), getattr(report.best, f)) for f in TOTAL_FIELDS
    }


def _totals(costs: list[float], co2: list[float], tax: float) -> ModeTotals:
    elec = 0.0
    carbon = 0.0
    kg = 0.0
    # fixed melt-id order so totals reproduce the per-melt rows exactly
    for c, e in zip(costs, co2):
        elec += c
        kg += e
        carbon += e * tax
    return ModeTotals(elec, carbon, kg)


def project_best_practice(
    segments: Sequence[MeltSegment],
    assignments: Mapping[int, int] | None,
    best: BestPracticeProfile | None,
    prices: HourlySeries,
    emissions: HourlySeries,
    tax_DKK_per_kg: float = DEFAULT_TAX_DKK_PER_KG,
) -> CounterfactualReport:
    """Price every melt as recorded and again with the best-practice duration
    and energy starting at the recorded start time.

    Best-practice replacement applies to every melt, best-cluster members
    included; overlapping replacement windows are priced independently.
    """
    if best is None:
        raise NoBestCluster("no best-practice cluster selected")
    assignments = assignments or {}
    rows = []
    for s in sorted(segments, key=lambda s: s.id):
        cost, co2 = window_cost_and_emissions(s.start_time, s.duration_s, s.energy_kWh, prices, emissions)
        bp_cost, bp_co2 = window_cost_and_emissions(
            s.start_time, best.avg_duration_s, best.avg_energy_kWh, prices, emissions
        )
        rows.append(
            MeltRow(
                s.id,
                assignments.get(s.id),
                s.start_time,
                s.energy_kWh,
                cost,
                co2,
                best.avg_energy_kWh,
                bp_cost,
                bp_co2,
            )
        )
    current = _totals([r.actual_cost_DKK for r in rows], [r.actual_co2_kg for r in rows], tax_DKK_per_kg)
    bp = _totals([r.bp_cost_DKK for r in rows], [r.bp_co2_kg for r in rows], tax_DKK_per_kg)
    return CounterfactualReport(rows, current, bp, tax_DKK_per_kg, best.cluster_id)
