"""Pipeline configuration stored as an INI file.

Sections and keys (all optional unless noted)::

    [telemetry]   path, delimiter, required
    [schema]      <canonical field> = <source column>   (timestamp and
                  melt_temperature_C mandatory)
    [clean]       drop_fields, require_present
    [segment]     min_endpoint_temp_C, min_drop_C, min_segment_samples,
                  min_segment_duration_s
    [cluster]     profile_length, metric, band, znorm, k, k_min, k_max, seed,
                  n_init, max_iter, tol
    [mcdm]        weights, vikor_v, matrix
    [costs]       tax_DKK_per_kg, prices, emissions, flat_price,
                  flat_emission_intensity
    [output]      dir, plots

Lists are comma separated. Relative paths resolve against the directory of
the config file. ``#`` starts a comment, also after a value when preceded by
whitespace.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, fields
from pathlib import Path

from meltline.cluster import DEFAULT_PROFILE_LENGTH, Metric
from meltline.errors import ConfigError, SchemaError
from meltline.ingest import FURNACE_STATE, TEMPERATURE, TelemetrySchema, is_canonical
from meltline.segment import SegmentationParams

SECTIONS = ("telemetry", "schema", "clean", "segment", "cluster", "mcdm", "costs", "output")


def _list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _opt_path(text: str | None, base: Path) -> str | None:
    if not text:
        return None
    p = Path(text).expanduser()
    return str(p if p.is_absolute() else (base / p))


@dataclass
class PipelineConfig:
    telemetry_path: str | None = None
    delimiter: str = ","
    column_map: dict = field(default_factory=lambda: {"timestamp": "timestamp", TEMPERATURE: TEMPERATURE})
    required: list = field(default_factory=list)
    drop_fields: list = field(default_factory=lambda: [FURNACE_STATE])
    require_present: list = field(default_factory=lambda: [TEMPERATURE])
    segmentation: SegmentationParams = field(default_factory=SegmentationParams)
    profile_length: int = DEFAULT_PROFILE_LENGTH
    metric: str = "euclidean"
    znorm: bool = False
    k: int | None = None
    k_min: int = 2
    k_max: int = 15
    seed: int = 0
    n_init: int = 10
    max_iter: int = 100
    tol: float = 1e-4
    weights: list = field(default_factory=lambda: [0.25, 0.25, 0.25, 0.25])
    vikor_v: float = 0.5
    matrix_path: str | None = None
    tax_DKK_per_kg: float = 0.75
    prices_path: str | None = None
    emissions_path: str | None = None
    flat_price: float | None = None
    flat_emission_intensity: float | None = None
    output_dir: str | None = None
    plots: bool = False

    def __post_init__(self):
        self.validate()

    # -- validation -------------------------------------------------------

    def validate(self) -> None:
        try:
            self.schema()
        except SchemaError as exc:
            raise ConfigError(str(exc)) from None
        try:
            Metric.parse(self.metric)
        except ValueError as exc:
            raise ConfigError(f"cluster.metric: {exc}") from None
        if len(self.weights) != 4 or any(w < 0 for w in self.weights):
            raise ConfigError("mcdm.weights must be 4 non-negative numbers")
        if abs(sum(self.weights) - 1.0) > 1e-9:
            raise ConfigError(f"mcdm.weights must sum to 1, got {sum(self.weights)}")
        if not 0.0 <= self.vikor_v <= 1.0:
            raise ConfigError("mcdm.vikor_v must lie in [0, 1]")
        if not 2 <= self.k_min <= self.k_max:
            raise ConfigError("cluster.k_min/k_max must satisfy 2 <= k_min <= k_max")
        if self.k is not None and self.k < 1:
            raise ConfigError("cluster.k must be positive")
        if self.profile_length < 2:
            raise ConfigError("cluster.profile_length must be at least 2")
        if self.n_init < 1 or self.max_iter < 1 or not self.tol > 0:
            raise ConfigError("cluster.n_init, max_iter and tol must be positive")
        if self.tax_DKK_per_kg < 0:
            raise ConfigError("costs.tax_DKK_per_kg must be non-negative")
        for name in self.drop_fields + self.require_present:
            if not is_canonical(name):
                raise ConfigError(f"clean: unknown field {name!r}")

    def schema(self) -> TelemetrySchema:
        return TelemetrySchema(dict(self.column_map), frozenset(self.required))

    @property
    def metric_obj(self) -> Metric:
        return Metric.parse(self.metric)

    # -- (de)serialization -------------------------------------------------

    @classmethod
    def from_parser(cls, cp: configparser.ConfigParser, base: Path) -> "PipelineConfig":
        unknown = [s for s in cp.sections() if s not in SECTIONS]
        if unknown:
            raise ConfigError(f"unknown config section(s): {', '.join(unknown)}")

        def get(section, key, conv=str, default=None):
            if not cp.has_option(section, key):
                return default
            raw = cp.get(section, key).strip()
            if raw == "":
                return default
            try:
                return conv(raw)
            except ValueError as exc:
                raise ConfigError(f"{section}.{key}: {exc}") from None

        def boolean(text):
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {text!r}")

        d = cls.__dataclass_fields__
        kw: dict = {}
        kw["telemetry_path"] = _opt_path(get("telemetry", "path"), base)
        kw["delimiter"] = get("telemetry", "delimiter", default=",")
        kw["required"] = get("telemetry", "required", _list, [])
        if cp.has_section("schema"):
            kw["column_map"] = {k: v.strip() for k, v in cp.items("schema")}
        kw["drop_fields"] = get("clean", "drop_fields", _list, [FURNACE_STATE])
        kw["require_present"] = get("clean", "require_present", _list, [TEMPERATURE])
        seg_defaults = SegmentationParams()
        try:
            kw["segmentation"] = SegmentationParams(
                get("segment", "min_endpoint_temp_C", float, seg_defaults.min_endpoint_temp_C),
                get("segment", "min_drop_C", float, seg_defaults.min_drop_C),
                get("segment", "min_segment_samples", int, seg_defaults.min_segment_samples),
                get("segment", "min_segment_duration_s", float, seg_defaults.min_segment_duration_s),
            )
        except ValueError as exc:
            raise ConfigError(f"segment: {exc}") from None
        metric = get("cluster", "metric", default="euclidean")
        band = get("cluster", "band", int)
        if band is not None:
            if metric != "dtw":
                raise ConfigError("cluster.band requires metric = dtw")
            metric = f"dtw:{band}"
        kw["metric"] = metric
        for key, conv in (
            ("profile_length", int),
            ("k", int),
            ("k_min", int),
            ("k_max", int),
            ("seed", int),
            ("n_init", int),
            ("max_iter", int),
            ("tol", float),
        ):
            kw[key] = get("cluster", key, conv, d[key].default)
        kw["znorm"] = get("cluster", "znorm", boolean, False)
        kw["weights"] = get("mcdm", "weights", lambda t: [float(x) for x in _list(t)], [0.25] * 4)
        kw["vikor_v"] = get("mcdm", "vikor_v", float, 0.5)
        kw["matrix_path"] = _opt_path(get("mcdm", "matrix"), base)
        kw["tax_DKK_per_kg"] = get("costs", "tax_DKK_per_kg", float, 0.75)
        kw["prices_path"] = _opt_path(get("costs", "prices"), base)
        kw["emissions_path"] = _opt_path(get("costs", "emissions"), base)
        kw["flat_price"] = get("costs", "flat_price", float)
        kw["flat_emission_intensity"] = get("costs", "flat_emission_intensity", float)
        kw["output_dir"] = _opt_path(get("output", "dir"), base)
        kw["plots"] = get("output", "plots", boolean, False)
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        return cls.loads(path.read_text(encoding="utf-8"), base=path.resolve().parent)

    @classmethod
    def loads(cls, text: str, base=".") -> "PipelineConfig":
        cp = _parser()
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse config: {exc}") from None
        return cls.from_parser(cp, Path(base))

    def dumps(self) -> str:
        """INI text that :meth:`loads` maps back to an equal config."""
        cp = _parser()
        metric = self.metric_obj
        s = self.segmentation
        cp["telemetry"] = {
            "path": self.telemetry_path or "",
            "delimiter": self.delimiter,
            "required": ", ".join(self.required),
        }
        cp["schema"] = dict(self.column_map)
        cp["clean"] = {
            "drop_fields": ", ".join(self.drop_fields),
            "require_present": ", ".join(self.require_present),
        }
        cp["segment"] = {
            "min_endpoint_temp_C": repr(s.min_endpoint_temp_C),
            "min_drop_C": repr(s.min_drop_C),
            "min_segment_samples": str(s.min_segment_samples),
            "min_segment_duration_s": repr(s.min_segment_duration_s),
        }
        cp["cluster"] = {
            "profile_length": str(self.profile_length),
            "metric": metric.kind,
            "band": "" if metric.band is None else str(metric.band),
            "znorm": str(self.znorm).lower(),
            "k": "" if self.k is None else str(self.k),
            "k_min": str(self.k_min),
            "k_max": str(self.k_max),
            "seed": str(self.seed),
            "n_init": str(self.n_init),
            "max_iter": str(self.max_iter),
            "tol": repr(self.tol),
        }
        cp["mcdm"] = {
            "weights": ", ".join(repr(float(w)) for w in self.weights),
            "vikor_v": repr(self.vikor_v),
            "matrix": self.matrix_path or "",
        }
        cp["costs"] = {
            "tax_DKK_per_kg": repr(self.tax_DKK_per_kg),
            "prices": self.prices_path or "",
            "emissions": self.emissions_path or "",
            "flat_price": "" if self.flat_price is None else repr(self.flat_price),
            "flat_emission_intensity": ""
            if self.flat_emission_intensity is None
            else repr(self.flat_emission_intensity),
        }
        cp["output"] = {"dir": self.output_dir or "", "plots": str(self.plots).lower()}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def replace(self, **changes) -> "PipelineConfig":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return PipelineConfig(**values)


def _parser() -> configparser.ConfigParser:
    # '#' only: ';' must stay usable as a delimiter value
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    cp.optionxform = str  # keys such as melt_temperature_C are case-sensitive
    return cp
