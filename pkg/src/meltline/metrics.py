"""Per-melt electricity cost and CO2, and the cluster decision matrix."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from meltline.errors import EmptyCluster, SeriesGap, ZeroWeightSum
from meltline.ingest import format_timestamp, parse_timestamps
from meltline.segment import MeltSegment

HOUR = 3600.0
DEFAULT_TAX_DKK_PER_KG = 0.75


@dataclass(frozen=True)
class HourlySeries:
    """Gap-free hourly values starting at ``hour_start[0]`` (UTC epoch s).

    A series built with :meth:`flat` has no time axis and covers any window.
    """

    hour_start: np.ndarray
    values: np.ndarray
    unit: str = ""

    def __post_init__(self):
        h = np.asarray(self.hour_start, dtype=np.float64)
        v = np.asarray(self.values, dtype=np.float64)
        if h.shape != v.shape or h.ndim != 1:
            raise ValueError("hour_start and values must be equal-length 1-D arrays")
        if h.size and not np.all(np.isfinite(v)):
            raise ValueError("series values must be finite")
        if h.size > 1 and not np.all(np.diff(h) == HOUR):
            raise SeriesGap("hourly series must be contiguous and non-overlapping")
        flat = h.size == 1 and np.isnan(h[0])
        if not flat and not np.all(np.isfinite(h)):
            raise ValueError("hour_start must be finite")
        if h.size and not flat and h[0] % HOUR != 0:
            raise ValueError("hour_start must fall on whole hours")
        object.__setattr__(self, "hour_start", h)
        object.__setattr__(self, "values", v)

    @classmethod
    def flat(cls, value: float, unit: str = "") -> "HourlySeries":
        return cls(np.array([np.nan]), np.array([float(value)]), unit)

    @property
    def is_flat(self) -> bool:
        return self.hour_start.size == 1 and np.isnan(self.hour_start[0])

    def overlaps(self, start: float, end: float) -> list[tuple[float, float]]:
        """``(overlap_seconds, value)`` for every hour touched by [start, end)."""
        if self.is_flat:
            return [(end - start, float(self.values[0]))]
        out = []
        h = math.floor(start / HOUR) * HOUR
        while h < end:
            lo, hi = max(start, h), min(end, h + HOUR)
            idx = int(round((h - self.hour_start[0]) / HOUR)) if self.hour_start.size else -1
            if idx < 0 or idx >= self.values.size:
                raise SeriesGap(f"no {self.unit or 'series'} value for hour {format_timestamp(h)}")
            out.append((hi - lo, float(self.values[idx])))
            h += HOUR
        return out


class PriceSeries(HourlySeries):
    """Spot price in DKK/kWh."""


class EmissionSeries(HourlySeries):
    """Grid CO2 intensity in kg/kWh."""

    def __post_init__(self):
        super().__post_init__()
        if np.any(self.values < 0):
            raise ValueError("CO2 intensity must be non-negative")


def read_hourly_csv(path, cls=HourlySeries):
    """Two-column CSV ``hour_start,value`` with ISO-8601 hours."""
    with open(path, encoding="utf-8") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#")) if r]
    if rows and not _is_number(rows[0][1]):
        rows = rows[1:]
    hours = parse_timestamps([r[0] for r in rows])
    order = np.argsort(hours, kind="stable")
    return cls(hours[order], np.array([float(r[1]) for r in rows])[order])


def write_hourly_csv(series: HourlySeries, path, value_name: str = "value") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["hour_start", value_name])
        for h, v in zip(series.hour_start.tolist(), series.values.tolist()):
            w.writerow([format_timestamp(h), repr(v)])


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def spread_over_hours(start: float, duration_s: float, energy_kWh: float, series: HourlySeries) -> float:
    """Σ_h energy·(overlap_h / duration)·value_h with energy spread uniformly."""
    if not duration_s > 0:
        raise ValueError("duration must be positive")
    total = 0.0
    for overlap, value in series.overlaps(start, start + duration_s):
        total += energy_kWh * (overlap / duration_s) * value
    return total


def window_cost_and_emissions(
    start: float, duration_s: float, energy_kWh: float, prices: HourlySeries, emissions: HourlySeries
) -> tuple[float, float]:
    return (
        spread_over_hours(start, duration_s, energy_kWh, prices),
        spread_over_hours(start, duration_s, energy_kWh, emissions),
    )


def melt_cost_and_emissions(segment: MeltSegment, prices: HourlySeries, emissions: HourlySeries) -> tuple[float, float]:
    """Electricity cost [DKK] and CO2 [kg] of one melt at hourly resolution."""
    return window_cost_and_emissions(
        segment.start_time, segment.duration_s, segment.energy_kWh, prices, emissions
    )


# ---------------------------------------------------------------------------
# decision matrix


@dataclass(frozen=True)
class CriterionSpec:
    name: str
    direction: str = "cost"
    weight: float = 0.25

    def __post_init__(self):
        if self.direction not in ("cost", "benefit"):
            raise ValueError(f"direction must be 'cost' or 'benefit', got {self.direction!r}")
        if not 0.0 <= self.weight <= 1.0:
            raise ValueError("criterion weight must lie in [0, 1]")


CRITERIA_NAMES = (
    "avg_production_time_s",
    "avg_electricity_kWh",
    "avg_energy_specific_kWh_per_tonne",
    "carbon_tax_DKK",
)


def normalize_weights(weights: Sequence[float]) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64)
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")
    total = w.sum()
    if not total > 0:
        raise ZeroWeightSum("weights sum to zero")
    return w / total


@dataclass(frozen=True)
class DecisionMatrix:
    alternatives: list
    criteria: list
    values: np.ndarray
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.shape != (len(self.alternatives), len(self.criteria)):
            raise ValueError(f"values shape {v.shape} does not match alternatives × criteria")
        if not np.all(np.isfinite(v)):
            raise ValueError("decision matrix values must be finite")
        w = sum(c.weight for c in self.criteria)
        if abs(w - 1.0) > 1e-9:
            raise ValueError(f"criterion weights sum to {w}, expected 1")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "alternatives", list(self.alternatives))
        object.__setattr__(self, "criteria", list(self.criteria))

    @classmethod
    def from_array(
        cls,
        values,
        alternatives=None,
        names=None,
        directions="cost",
        weights=None,
    ) -> "DecisionMatrix":
        values = np.atleast_2d(np.asarray(values, dtype=np.float64))
        m, n = values.shape
        alternatives = list(range(m)) if alternatives is None else list(alternatives)
        names = [f"c{j}" for j in range(n)] if names is None else list(names)
        if isinstance(directions, str):
            directions = [directions] * n
        w = normalize_weights(np.full(n, 1.0 / n) if weights is None else weights)
        crit = [CriterionSpec(nm, d, float(x)) for nm, d, x in zip(names, directions, w)]
        return cls(alternatives, crit, values)

    @property
    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.criteria])

    @property
    def directions(self) -> list[str]:
        return [c.direction for c in self.criteria]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def with_weights(self, weights) -> "DecisionMatrix":
        w = normalize_weights(weights)
        crit = [CriterionSpec(c.name, c.direction, float(x)) for c, x in zip(self.criteria, w)]
        return DecisionMatrix(self.alternatives, crit, self.values, self.notes)

    def with_directions(self, directions) -> "DecisionMatrix":
        crit = [CriterionSpec(c.name, d, c.weight) for c, d in zip(self.criteria, directions)]
        return DecisionMatrix(self.alternatives, crit, self.values, self.notes)

    def zero_columns(self) -> list[str]:
        """Names of all-zero columns, which vector normalization cannot handle."""
        return [c.name for j, c in enumerate(self.criteria) if np.all(self.values[:, j] == 0)]

    def row(self, alternative) -> np.ndarray:
        return self.values[self.alternatives.index(alternative)]

    def to_csv(self, path, format_line: str | None = None, decimals: int | None = None) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            if format_line:
                fh.write(format_line + "\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["cluster"] + [c.name for c in self.criteria])
            for a, row in zip(self.alternatives, self.values.tolist()):
                cells = [repr(x) if decimals is None else f"{x:.{decimals}f}" for x in row]
                w.writerow([a] + cells)

    @classmethod
    def read_csv(cls, path, directions="cost", weights=None) -> "DecisionMatrix":
        with open(path, encoding="utf-8") as fh:
            rows = [r for r in csv.reader(line for line in fh if not line.startswith("#")) if r]
        header, body = rows[0], rows[1:]
        alts = [int(r[0]) if r[0].lstrip("-").isdigit() else r[0] for r in body]
        values = [[float(x) for x in r[1:]] for r in body]
        return cls.from_array(values, alts, header[1:], directions, weights)


def build_decision_matrix(
    assignments: Mapping[int, int],
    segments: Sequence[MeltSegment],
    emissions: HourlySeries,
    tax_DKK_per_kg: float = DEFAULT_TAX_DKK_PER_KG,
    weights: Sequence[float] = (0.25, 0.25, 0.25, 0.25),
) -> DecisionMatrix:
    """One row per populated cluster (ascending id) with four cost criteria:
    mean duration, mean energy, mean per-melt kWh/tonne and mean per-melt
    carbon cost (CO2 × tax).

    ``assignments`` maps melt id to cluster id (``ClusterModel.assignments``).
    """
    if len(weights) != 4:
        raise ValueError("expected 4 weights")
    w = normalize_weights(weights)
    by_id = {s.id: s for s in segments}
    missing = sorted(set(by_id) - set(assignments))
    if missing:
        raise KeyError(f"segments without a cluster assignment: {missing[:5]}")
    members: dict[int, list[MeltSegment]] = {}
    for melt_id in sorted(by_id):
        members.setdefault(int(assignments[melt_id]), []).append(by_id[melt_id])
    rows, alts = [], []
    for cid in sorted(members):
        ms = members[cid]
        if not ms:
            raise EmptyCluster(f"cluster {cid} has no members")
        co2 = [spread_over_hours(s.start_time, s.duration_s, s.energy_kWh, emissions) for s in ms]
        rows.append(
            [
                math.fsum(s.duration_s for s in ms) / len(ms),
                math.fsum(s.energy_kWh for s in ms) / len(ms),
                math.fsum(s.kwh_per_tonne for s in ms) / len(ms),
                math.fsum(c * tax_DKK_per_kg for c in co2) / len(ms),
            ]
        )
        alts.append(cid)
    crit = [CriterionSpec(n, "cost", float(x)) for n, x in zip(CRITERIA_NAMES, w)]
    dm = DecisionMatrix(alts, crit, np.array(rows))
    zero = dm.zero_columns()
    if zero:
        dm.notes["degenerate_columns"] = zero
    return dm


def cluster_sizes(assignments: Mapping[int, int]) -> dict[int, int]:
    sizes: dict[int, int] = {}
    for c in assignments.values():
        sizes[int(c)] = sizes.get(int(c), 0) + 1
    return dict(sorted(sizes.items()))
