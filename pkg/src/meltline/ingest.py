"""Loading, validating and cleaning furnace telemetry CSV exports."""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np
import pandas as pd

from meltline.errors import EmptyFile, EmptyFrame, MissingColumn, NonMonotonicTime, SchemaError

log = logging.getLogger(__name__)

TIMESTAMP = "timestamp"
TEMPERATURE = "melt_temperature_C"
WEIGHT = "melt_weight_tonne"
POWER = "power_kW"
ENERGY_COUNTER = "energy_counter_kWh"
FURNACE_STATE = "furnace_state"

SCALAR_FIELDS = (
    TIMESTAMP,
    TEMPERATURE,
    WEIGHT,
    POWER,
    ENERGY_COUNTER,
    "voltage_V",
    "current_A",
    "frequency_Hz",
    FURNACE_STATE,
)
# Cooling-water channels are indexed: cooling_water_temp_C[1], cooling_water_flow[3], ...
_INDEXED_FIELD = re.compile(r"^(cooling_water_temp_C|cooling_water_flow)\[\d+\]$")

MISSING_TOKENS = frozenset({"", "nan", "null"})


def is_canonical(name: str) -> bool:
    return name in SCALAR_FIELDS or bool(_INDEXED_FIELD.match(name))


@dataclass(frozen=True)
class TelemetrySchema:
    """Maps canonical field names to the column names of a source file."""

    column_map: Mapping[str, str]
    required: frozenset = frozenset()

    def __post_init__(self):
        cmap = dict(self.column_map)
        unknown = [k for k in cmap if not is_canonical(k)]
        if unknown:
            raise SchemaError(f"unknown canonical field(s): {', '.join(sorted(unknown))}")
        sources = list(cmap.values())
        dupes = sorted({s for s in sources if sources.count(s) > 1})
        if dupes:
            raise SchemaError(f"source column(s) mapped more than once: {', '.join(dupes)}")
        required = frozenset(self.required) | {TIMESTAMP, TEMPERATURE}
        missing = sorted(required - cmap.keys())
        if missing:
            raise SchemaError(f"required field(s) without a source column: {', '.join(missing)}")
        object.__setattr__(self, "column_map", MappingProxyType(cmap))
        object.__setattr__(self, "required", required)

    @classmethod
    def identity(cls, fields: Iterable[str], required: Iterable[str] = ()) -> "TelemetrySchema":
        """Schema for files whose headers already use canonical names."""
        fields = list(fields)
        if TIMESTAMP not in fields:
            fields.insert(0, TIMESTAMP)
        return cls({f: f for f in fields}, frozenset(required))


@dataclass(frozen=True)
class TelemetryFrame:
    """Immutable, time-ordered telemetry table.

    ``time`` holds UTC epoch seconds; each entry of ``columns`` is a float
    array aligned with ``time`` where NaN marks a missing value.
    """

    time: np.ndarray
    columns: Mapping[str, np.ndarray]
    source: str = ""
    unparseable_cells: int = 0
    duplicates_dropped: int = 0

    def __post_init__(self):
        t = np.asarray(self.time, dtype=np.float64)
        if t.ndim != 1:
            raise ValueError("time must be one-dimensional")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise NonMonotonicTime("timestamps must be strictly increasing")
        t = t.copy()
        t.flags.writeable = False
        cols = {}
        for name, values in self.columns.items():
            v = np.array(values, dtype=np.float64)
            if v.shape != t.shape:
                raise ValueError(f"column {name!r} has {v.size} rows, expected {t.size}")
            v.flags.writeable = False
            cols[name] = v
        object.__setattr__(self, "time", t)
        object.__setattr__(self, "columns", MappingProxyType(cols))

    def __len__(self) -> int:
        return self.time.size

    @property
    def fields(self) -> list[str]:
        return list(self.columns)

    @property
    def time_span_s(self) -> float:
        return float(self.time[-1] - self.time[0]) if len(self) else 0.0

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    def has(self, name: str) -> bool:
        return name in self.columns

    def take(self, rows) -> "TelemetryFrame":
        rows = np.asarray(rows)
        return TelemetryFrame(
            self.time[rows],
            {k: v[rows] for k, v in self.columns.items()},
            source=self.source,
            unparseable_cells=self.unparseable_cells,
            duplicates_dropped=self.duplicates_dropped,
        )

    def equals(self, other: "TelemetryFrame") -> bool:
        """Row-set equality (NaN == NaN), ignoring metadata."""
        if self.fields != other.fields or not np.array_equal(self.time, other.time):
            return False
        return all(np.array_equal(self[f], other[f], equal_nan=True) for f in self.fields)


def _parse_numeric(raw: pd.Series) -> tuple[np.ndarray, int]:
    text = raw.fillna("").astype(str).str.strip()
    missing = text.str.lower().isin(MISSING_TOKENS)
    coerced = pd.to_numeric(text.where(~missing), errors="coerce")
    ok = coerced.notna().to_numpy()
    bad = int((~ok & ~missing.to_numpy()).sum())
    # to_numeric is not correctly rounded; re-parse the valid cells exactly
    values = np.full(len(text), np.nan)
    values[ok] = text[ok].to_numpy().astype(np.float64)
    return values, bad


def parse_timestamps(values) -> np.ndarray:
    """ISO-8601 strings to UTC epoch seconds; naive stamps are taken as UTC."""
    ts = pd.to_datetime(pd.Series(values, dtype=str).str.strip(), utc=True, format="ISO8601")
    if ts.isna().any():
        raise ValueError("unparseable timestamp")
    ns = ts.astype("int64").to_numpy()
    return ns // 1_000_000_000 + (ns % 1_000_000_000) / 1e9


def format_timestamp(epoch_s: float) -> str:
    ts = pd.Timestamp(round(epoch_s * 1e6), unit="us", tz="UTC")
    if ts.microsecond:
        return ts.strftime("%Y-%m-%dT%H:%M:%S.%f+00:00")
    return ts.strftime("%Y-%m-%dT%H:%M:%S+00:00")


def load_telemetry(path, schema: TelemetrySchema, delimiter: str = ",", skiprows: int = 0) -> TelemetryFrame:
    """Read a telemetry CSV into a :class:`TelemetryFrame`.

    Optional schema fields whose source column is absent are skipped. Cells
    that are neither a number nor a missing-value token become missing and are
    counted in ``unparseable_cells``. Rows are sorted by time; exact duplicate
    rows are collapsed, conflicting duplicates raise ``NonMonotonicTime``.
    """
    path = Path(path)
    try:
        raw = pd.read_csv(
            path, sep=delimiter, dtype=str, keep_default_na=False, encoding="utf-8", skiprows=skiprows
        )
    except pd.errors.EmptyDataError:
        raise EmptyFile(f"{path}: file is empty") from None
    raw.columns = [c.strip() for c in raw.columns]
    for canon, src in schema.column_map.items():
        if canon in schema.required and src not in raw.columns:
            raise MissingColumn(src)
    if raw.empty:
        raise EmptyFile(f"{path}: no data rows")

    time = parse_timestamps(raw[schema.column_map[TIMESTAMP]])
    columns: dict[str, np.ndarray] = {}
    n_bad = 0
    for canon, src in schema.column_map.items():
        if canon == TIMESTAMP or src not in raw.columns:
            continue
        columns[canon], bad = _parse_numeric(raw[src])
        n_bad += bad

    order = np.argsort(time, kind="stable")
    time = time[order]
    columns = {k: v[order] for k, v in columns.items()}

    keep = np.ones(time.size, dtype=bool)
    dup = np.flatnonzero(np.diff(time) == 0) + 1
    for i in dup:
        # compare against the first row of the run of equal stamps
        j = i - 1
        while j > 0 and time[j - 1] == time[i]:
            j -= 1
        for name, v in columns.items():
            if not (v[i] == v[j] or (np.isnan(v[i]) and np.isnan(v[j]))):
                raise NonMonotonicTime(
                    f"duplicate timestamp {format_timestamp(time[i])} with conflicting {name!r}"
                )
        keep[i] = False
    n_dupes = int((~keep).sum())
    if n_dupes:
        log.info("%s: dropped %d duplicate rows", path, n_dupes)
    if n_bad:
        log.warning("%s: %d unparseable numeric cells treated as missing", path, n_bad)

    return TelemetryFrame(
        time[keep],
        {k: v[keep] for k, v in columns.items()},
        source=str(path),
        unparseable_cells=n_bad,
        duplicates_dropped=n_dupes,
    )


def write_telemetry(frame: TelemetryFrame, path, delimiter: str = ",", format_line: str | None = None) -> None:
    """Write a frame with canonical headers; floats are written round-trip exact."""
    out = pd.DataFrame({TIMESTAMP: [format_timestamp(t) for t in frame.time]})
    for name in frame.fields:
        out[name] = [("" if np.isnan(x) else repr(float(x))) for x in frame[name]]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if format_line:
            fh.write(format_line + "\n")
        out.to_csv(fh, sep=delimiter, index=False, lineterminator="\n")


def load_canonical(path, delimiter: str = ",") -> TelemetryFrame:
    """Load a file written by :func:`write_telemetry` (a leading ``#`` line is skipped)."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        skip = 1 if first.startswith("#") else 0
        header = (fh.readline() if skip else first).strip().split(delimiter)
    return load_telemetry(path, TelemetrySchema.identity(header), delimiter=delimiter, skiprows=skip)


@dataclass(frozen=True)
class CompletenessReport:
    per_field: dict = field(default_factory=dict)
    total_rows: int = 0

    def to_json(self) -> str:
        body = {
            "total_rows": self.total_rows,
            "per_field": {k: round(v, 6) for k, v in self.per_field.items()},
        }
        return json.dumps(body, indent=2, sort_keys=True) + "\n"

    def to_table(self) -> str:
        width = max([len(k) for k in self.per_field] + [5])
        lines = [f"{'field':<{width}}  complete", f"{'-' * width}  --------"]
        for k, v in self.per_field.items():
            lines.append(f"{k:<{width}}  {v * 100:7.2f}%")
        lines.append(f"rows: {self.total_rows}")
        return "\n".join(lines)


def completeness_report(frame: TelemetryFrame) -> CompletenessReport:
    n = len(frame)
    if n == 0:
        raise EmptyFrame("cannot report completeness of an empty frame")
    per_field = {TIMESTAMP: 1.0}
    for name in frame.fields:
        per_field[name] = int(np.count_nonzero(~np.isnan(frame[name]))) / n
    return CompletenessReport(per_field, n)


def clean_telemetry(
    frame: TelemetryFrame,
    drop_fields: Iterable[str] = (FURNACE_STATE,),
    require_present: Iterable[str] = (TEMPERATURE,),
) -> TelemetryFrame:
    """Drop whole columns, then rows missing any of ``require_present``."""
    drop = set(drop_fields)
    cols = {k: v for k, v in frame.columns.items() if k not in drop}
    keep = np.ones(len(frame), dtype=bool)
    for name in require_present:
        if name in cols:
            keep &= ~np.isnan(cols[name])
        else:
            keep[:] = False
    return TelemetryFrame(
        frame.time[keep],
        {k: v[keep] for k, v in cols.items()},
        source=frame.source,
        unparseable_cells=frame.unparseable_cells,
        duplicates_dropped=frame.duplicates_dropped,
    )
