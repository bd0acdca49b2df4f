"""Splitting a cleaned temperature series into individual melts.

A melt ends when the furnace is poured: the temperature is at or above a
minimum endpoint temperature and falls by at least ``min_drop_C`` between two
consecutive samples. The next melt starts on the row after the drop.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from meltline.errors import MissingEnergySource, MissingWeight, TooFewRows
from meltline.ingest import (
    ENERGY_COUNTER,
    POWER,
    TEMPERATURE,
    WEIGHT,
    TelemetryFrame,
    format_timestamp,
    parse_timestamps,
)


@dataclass(frozen=True)
class SegmentationParams:
    min_endpoint_temp_C: float = 1400.0
    min_drop_C: float = 200.0
    min_segment_samples: int = 10
    min_segment_duration_s: float = 600.0

    def __post_init__(self):
        if not self.min_drop_C > 0:
            raise ValueError("min_drop_C must be positive")
        if self.min_segment_samples < 2:
            raise ValueError("min_segment_samples must be at least 2")
        if self.min_segment_duration_s < 0:
            raise ValueError("min_segment_duration_s must be non-negative")


@dataclass(frozen=True)
class MeltSegment:
    id: int
    start_time: float
    end_time: float
    times: np.ndarray
    temperatures: np.ndarray
    energy_kWh: float
    weight_tonne: float
    start_index: int
    end_index: int

    @property
    def duration_s(self) -> float:
        return self.end_time - self.start_time

    @property
    def n_samples(self) -> int:
        return int(self.times.size)

    @property
    def kwh_per_tonne(self) -> float:
        return self.energy_kWh / self.weight_tonne


def detect_melt_endpoints(frame: TelemetryFrame, params: SegmentationParams = SegmentationParams()) -> list[int]:
    """Row indices of melt endpoints (the last sample before a pour drop).

    Endpoints closer than ``min_segment_samples`` rows to the previously kept
    endpoint are merged into it. The decision for row ``i`` only looks at rows
    ``<= i + 1``, so appending data never moves earlier endpoints.
    """
    if len(frame) < 2:
        raise TooFewRows(f"need at least 2 rows, got {len(frame)}")
    temp = frame[TEMPERATURE]
    step = temp[1:] - temp[:-1]
    hits = np.flatnonzero((temp[:-1] >= params.min_endpoint_temp_C) & (step <= -params.min_drop_C))
    endpoints: list[int] = []
    for i in hits.tolist():
        if endpoints and i - endpoints[-1] < params.min_segment_samples:
            continue
        endpoints.append(i)
    return endpoints


def _segment_energy(frame: TelemetryFrame, lo: int, hi: int) -> float:
    t = frame.time[lo : hi + 1]
    if frame.has(ENERGY_COUNTER):
        counter = frame[ENERGY_COUNTER][lo : hi + 1]
        ok = ~np.isnan(counter)
        if ok.sum() >= 2:
            delta = float(counter[ok][-1] - counter[ok][0])
            if delta >= 0:
                return delta
            # counter reset inside the melt: fall through to power
    if frame.has(POWER):
        power = frame[POWER][lo : hi + 1]
        ok = ~np.isnan(power)
        if ok.sum() >= 2:
            return float(np.trapezoid(power[ok], t[ok]) / 3600.0)
    raise MissingEnergySource(
        f"rows {lo}..{hi}: no usable {ENERGY_COUNTER!r} delta or {POWER!r} samples"
    )


def _segment_weight(frame: TelemetryFrame, lo: int, hi: int) -> float:
    if frame.has(WEIGHT):
        w = frame[WEIGHT][lo : hi + 1]
        ok = np.flatnonzero(~np.isnan(w) & (w > 0))
        if ok.size:
            return float(w[ok[-1]])
    raise MissingWeight(f"rows {lo}..{hi}: no positive {WEIGHT!r} sample")


def extract_melts(
    frame: TelemetryFrame,
    endpoints: list[int],
    params: SegmentationParams = SegmentationParams(),
) -> list[MeltSegment]:
    """Cut the frame at ``endpoints``; the trailing partial melt is discarded.

    Segments shorter than ``min_segment_samples`` rows or
    ``min_segment_duration_s`` seconds are dropped. Ids are assigned
    consecutively over the kept segments.
    """
    segments: list[MeltSegment] = []
    start = 0
    temp = frame[TEMPERATURE]
    for end in endpoints:
        lo, hi = start, end
        start = end + 1
        n = hi - lo + 1
        duration = frame.time[hi] - frame.time[lo]
        if n < params.min_segment_samples or duration < params.min_segment_duration_s or duration <= 0:
            continue
        segments.append(
            MeltSegment(
                id=len(segments),
                start_time=float(frame.time[lo]),
                end_time=float(frame.time[hi]),
                times=frame.time[lo : hi + 1],
                temperatures=temp[lo : hi + 1],
                energy_kWh=_segment_energy(frame, lo, hi),
                weight_tonne=_segment_weight(frame, lo, hi),
                start_index=lo,
                end_index=hi,
            )
        )
    return segments


def segment_frame(frame: TelemetryFrame, params: SegmentationParams = SegmentationParams()) -> list[MeltSegment]:
    return extract_melts(frame, detect_melt_endpoints(frame, params), params)


# ---------------------------------------------------------------------------
# artifacts

MANIFEST_FIELDS = [
    "id",
    "start_time",
    "end_time",
    "duration_s",
    "energy_kWh",
    "weight_tonne",
    "start_index",
    "end_index",
]


def write_segments(segments: list[MeltSegment], out_dir, format_line: str | None = None) -> Path:
    """Write ``segments.csv`` plus ``traces/melt_<id>.csv`` under ``out_dir``."""
    out_dir = Path(out_dir)
    traces = out_dir / "traces"
    traces.mkdir(parents=True, exist_ok=True)
    for old in traces.glob("melt_*.csv"):
        old.unlink()
    manifest = out_dir / "segments.csv"
    with open(manifest, "w", newline="", encoding="utf-8") as fh:
        if format_line:
            fh.write(format_line + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MANIFEST_FIELDS)
        for s in segments:
            w.writerow(
                [
                    s.id,
                    format_timestamp(s.start_time),
                    format_timestamp(s.end_time),
                    repr(s.duration_s),
                    repr(s.energy_kWh),
                    repr(s.weight_tonne),
                    s.start_index,
                    s.end_index,
                ]
            )
    for s in segments:
        with open(traces / f"melt_{s.id:04d}.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["time", "elapsed_s", TEMPERATURE])
            for t, v in zip(s.times.tolist(), s.temperatures.tolist()):
                w.writerow([format_timestamp(t), repr(t - s.start_time), repr(v)])
    return manifest


def read_segments(out_dir) -> list[MeltSegment]:
    """Inverse of :func:`write_segments` (a leading ``#`` line is skipped)."""
    out_dir = Path(out_dir)
    segments = []
    with open(out_dir / "segments.csv", encoding="utf-8") as fh:
        rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
    for row in rows:
        sid = int(row["id"])
        with open(out_dir / "traces" / f"melt_{sid:04d}.csv", encoding="utf-8") as fh:
            trace = list(csv.DictReader(fh))
        elapsed = np.array([float(r["elapsed_s"]) for r in trace])
        temps = np.array([float(r[TEMPERATURE]) for r in trace])
        start = float(parse_timestamps([row["start_time"]])[0])
        end = float(parse_timestamps([row["end_time"]])[0])
        segments.append(
            MeltSegment(
                id=sid,
                start_time=start,
                end_time=end,
                times=start + elapsed,
                temperatures=temps,
                energy_kWh=float(row["energy_kWh"]),
                weight_tonne=float(row["weight_tonne"]),
                start_index=int(row["start_index"]),
                end_index=int(row["end_index"]),
            )
        )
    return segments
