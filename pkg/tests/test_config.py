import pytest

from meltline.config import PipelineConfig
from meltline.errors import ConfigError
from meltline.segment import SegmentationParams

FULL = """
[telemetry]
path = data/t.csv
delimiter = ;
required = power_kW

[schema]
timestamp = Time
melt_temperature_C = Temp
power_kW = P

[segment]
min_endpoint_temp_C = 1350
min_drop_C = 250

[cluster]
metric = dtw
band = 6
k = 4
seed = 11
znorm = yes

[mcdm]
weights = 0.4, 0.2, 0.2, 0.2

[costs]
flat_price = 1.1
flat_emission_intensity = 0.2

[output]
dir = out
plots = true
"""


def test_defaults():
    cfg = PipelineConfig()
    assert cfg.weights == [0.25] * 4 and cfg.vikor_v == 0.5 and cfg.tax_DKK_per_kg == 0.75
    assert cfg.segmentation == SegmentationParams(1400, 200, 10, 600)
    assert (cfg.k_min, cfg.k_max, cfg.profile_length, cfg.metric) == (2, 15, 128, "euclidean")


def test_parse_full(tmp_path):
    cfg = PipelineConfig.loads(FULL, base=tmp_path)
    assert cfg.telemetry_path == str(tmp_path / "data/t.csv")
    assert cfg.delimiter == ";"
    assert cfg.column_map["melt_temperature_C"] == "Temp"
    assert cfg.metric == "dtw:6" and cfg.metric_obj.band == 6
    assert cfg.k == 4 and cfg.seed == 11 and cfg.znorm and cfg.plots
    assert cfg.segmentation.min_endpoint_temp_C == 1350
    assert cfg.segmentation.min_segment_samples == 10
    assert "power_kW" in cfg.schema().required


def test_round_trip(tmp_path):
    cfg = PipelineConfig.loads(FULL, base=tmp_path)
    assert PipelineConfig.loads(cfg.dumps(), base=tmp_path) == cfg
    assert PipelineConfig.loads(PipelineConfig().dumps()) == PipelineConfig()


def test_load_resolves_relative_to_file(tmp_path):
    (tmp_path / "sub").mkdir()
    ini = tmp_path / "sub" / "run.ini"
    ini.write_text("[telemetry]\npath = t.csv\n")
    assert PipelineConfig.load(ini).telemetry_path == str(tmp_path / "sub" / "t.csv")


@pytest.mark.parametrize(
    "text",
    [
        "[mcdm]\nweights = 0.5, 0.5\n",
        "[mcdm]\nweights = 0.5, 0.5, 0.5, 0.5\n",
        "[mcdm]\nvikor_v = 2\n",
        "[cluster]\nk_min = 1\n",
        "[cluster]\nmetric = cosine\n",
        "[cluster]\nband = 3\n",
        "[cluster]\nseed = x\n",
        "[segment]\nmin_drop_C = -5\n",
        "[schema]\ntimestamp = a\nmelt_temperature_C = a\n",
        "[clean]\ndrop_fields = colour\n",
        "[nonsense]\na = 1\n",
        "no section header",
    ],
)
def test_invalid_configs(text):
    with pytest.raises(ConfigError):
        PipelineConfig.loads(text)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        PipelineConfig.load(tmp_path / "nope.ini")


def test_replace_validates():
    with pytest.raises(ConfigError):
        PipelineConfig().replace(vikor_v=-1)
    assert PipelineConfig().replace(seed=3).seed == 3


def test_readme_example_parses(tmp_path):
    from pathlib import Path

    text = (Path(__file__).resolve().parents[1] / "README.md").read_text()
    block = text.split("```ini\n", 1)[1].split("```", 1)[0]
    cfg = PipelineConfig.loads(block, base=tmp_path)
    assert cfg.required == ["power_kW"]
    assert cfg.column_map["melt_temperature_C"] == "T_melt"
    assert cfg.metric == "euclidean" and cfg.k is None
    assert cfg.flat_price is None and cfg.matrix_path is None
    assert cfg.prices_path == str(tmp_path / "prices.csv")


def test_semicolon_delimiter_survives_comments():
    assert PipelineConfig.loads("[telemetry]\ndelimiter = ;   # semicolon files\n").delimiter == ";"
