import io
from pathlib import Path

import pytest

from ncpt import csvio
from ncpt.config import ConfigError, parse_config
from ncpt.scan import SweepRow

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def test_minimal_config_gets_defaults():
    cfg = parse_config("preset: gd154\n")
    assert cfg.geometry == "copro"
    assert cfg.laser["profile"] == "sxfel"
    assert cfg.integrator == {"rtol": 1e-9, "atol": 1e-12}
    assert cfg.sweep["n_coarse"] == 61 and cfg.sweep["window_widths"] == 6.0
    assert cfg.default_ratio() == 0.90
    assert cfg.workers == 1


def test_negative_intensity_names_key_and_line():
    text = "preset: gd154\nlaser:\n  profile: xfelo\n  intensity_Wcm2: -1.0e18\n"
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.key == "laser.intensity_Wcm2"
    assert info.value.line == 4
    assert "laser.intensity_Wcm2" in str(info.value) and "line 4" in str(info.value)


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match="colour"):
        parse_config("preset: gd154\ncolour: red\n")
    with pytest.raises(ConfigError, match="sweep.points"):
        parse_config("preset: gd154\nsweep:\n  points: 3\n")


def test_bad_values_rejected():
    for text in (
        "preset: xx1\n",
        "preset: gd154\ngeometry: sideways\n",
        "preset: gd154\nratio: 0\n",
        "preset: gd154\nsweep: {I_min_Wcm2: 1e19, I_max_Wcm2: 1e17}\n",
        "preset: gd154\nintegrator: {rtol: fast}\n",
        "geometry: copro\n",
        "- a\n- b\n",
        "preset: [unclosed\n",
    ):
        with pytest.raises(ConfigError):
            parse_config(text)


def test_nucleus_errors_surface_as_config_errors():
    text = (CONFIGS / "custom_nucleus.yaml").read_text().replace("E2_keV: 100.0", "E2_keV: 2000.0")
    with pytest.raises(ConfigError, match="ordering"):
        parse_config(text)


def test_shipped_configs_parse():
    re = parse_config((CONFIGS / "re185_sxfel_crossed.yaml").read_text())
    assert (re.preset, re.geometry, re.ratio, re.laser["profile"]) == ("re185", "crossed", 0.02, "sxfel")
    gd = parse_config((CONFIGS / "gd154_xfelo_copro.yaml").read_text())
    assert gd.sweep["I_min_Wcm2"] == 1e17 and gd.sweep["n_points"] == 9
    toy = parse_config((CONFIGS / "custom_nucleus.yaml").read_text())
    assert toy.system().name == "toy" and toy.system().loss_width == pytest.approx(0.01)
    assert toy.laser_profile().T == pytest.approx(1e-13)


def test_overrides_win_over_file():
    cfg = parse_config("preset: gd154\nlaser: xfelo\n", {"geometry": "crossed", "laser": {"intensity_Wcm2": 1e18}})
    assert cfg.geometry == "crossed"
    assert cfg.laser["profile"] == "xfelo" and cfg.laser["intensity_Wcm2"] == 1e18


def _row(I):
    return SweepRow(I, 1.5e-14, 0.97, "stirap", 1e15, 2e15, 30.0, 0.01)


def test_csv_empty_is_header_only():
    text = csvio.emit_csv([], None, columns=SweepRow.CSV_COLUMNS)
    assert text == ",".join(SweepRow.CSV_COLUMNS) + "\r\n"


def test_csv_single_row_is_two_lines():
    text = csvio.emit_csv([_row(1e18)], None, columns=SweepRow.CSV_COLUMNS)
    assert text.count("\r\n") == 2


def test_csv_round_trip(tmp_path):
    rows = [_row(1e17), _row(3.3e18)]
    path = tmp_path / "out.csv"
    csvio.emit_csv(rows, path, SweepRow.CSV_COLUMNS, csvio.provenance_lines("sweep", {"a": 1}, ["gd154"]))
    comments, columns, back = csvio.read_csv(path)
    assert columns == list(SweepRow.CSV_COLUMNS)
    assert comments[0].startswith("ncpt ") and comments[-1] == "presets: gd154"
    for row, rec in zip(rows, back):
        assert rec == row.csv_row()


def test_csv_float_format_keeps_precision():
    assert csvio.format_value(1 / 3) == "3.33333333333e-01"
    assert csvio.parse_value(csvio.format_value(2.5e17)) == 2.5e17
    assert csvio.format_value(float("nan")) == "nan"


def test_csv_rejects_mixed_rows():
    with pytest.raises(ValueError):
        csvio.write_csv(io.StringIO(), [{"a": 1}, {"b": 2}])


def test_csv_unwritable_path_names_path(tmp_path):
    bad = tmp_path / "missing" / "out.csv"
    with pytest.raises(OSError, match="missing"):
        csvio.emit_csv([], bad, columns=["a"])


def test_config_hash_is_stable():
    assert csvio.config_hash({"b": 1, "a": 2}) == csvio.config_hash({"a": 2, "b": 1})
    assert len(csvio.config_hash({})) == 16
