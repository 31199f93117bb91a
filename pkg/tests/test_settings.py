import json

import pytest
from pydantic import BaseModel, Field

from okamoto.errors import ValidationError
from okamoto.experiments import (
    BoxDimExperiment,
    Experiment,
    get_experiment_by_name,
    register_experiment,
)


class SquareExperiment(Experiment):
    class Settings(BaseModel):
        side: int = Field(10, ge=0, json_schema_extra={"group": "TestGroup", "min": 0, "max": 100})
        label: str = Field("box", json_schema_extra={"group": "TestGroup"})

    def __init__(self, **kwargs):
        super().__init__(name="test_square", **kwargs)

    def run(self):
        return self.settings.side ** 2


register_experiment("test_square", SquareExperiment)


def test_settings_persistence(tmp_path):
    settings_file = tmp_path / "test_square.json"

    # 1. Defaults are written on first load
    e1 = get_experiment_by_name("test_square", settings_dir=tmp_path)
    assert e1.settings.side == 10
    assert settings_file.exists()

    # 2. Updates persist and a new instance picks them up
    e1.update_settings({"side": 7})
    assert json.loads(settings_file.read_text())["side"] == 7
    e2 = get_experiment_by_name("test_square", settings_dir=tmp_path)
    assert e2.settings.side == 7
    assert e2.run() == 49


def test_overrides_do_not_persist(tmp_path):
    e = get_experiment_by_name("test_square", settings_dir=tmp_path, overrides={"side": 3, "label": None})
    assert e.settings.side == 3
    assert e.settings.label == "box"
    assert json.loads((tmp_path / "test_square.json").read_text())["side"] == 10


def test_without_settings_dir_nothing_is_written(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    e = get_experiment_by_name("test_square")
    e.update_settings({"side": 4})
    assert e.settings_file is None
    assert list(tmp_path.iterdir()) == []


def test_schema_metadata():
    schema = SquareExperiment.Settings.model_json_schema()
    props = schema["properties"]
    assert props["side"]["group"] == "TestGroup"
    assert props["side"]["max"] == 100
    box = BoxDimExperiment.Settings.model_json_schema()["properties"]
    assert box["a"]["group"] == "Function"


def test_invalid_update_is_rejected(tmp_path):
    e = get_experiment_by_name("test_square", settings_dir=tmp_path)
    with pytest.raises(ValidationError) as err:
        e.update_settings({"side": "not_an_int"})
    assert err.value.code == "invalid_setting"
    assert "side" in err.value.message
    assert e.settings.side == 10


def test_corrupt_settings_fall_back_to_defaults(tmp_path):
    (tmp_path / "test_square.json").write_text("{not json")
    e = get_experiment_by_name("test_square", settings_dir=tmp_path)
    assert e.settings.side == 10
    assert json.loads((tmp_path / "test_square.json").read_text())["side"] == 10


def test_unknown_experiment():
    assert get_experiment_by_name("nope") is None


def test_box_dimension_experiment_runs(tmp_path):
    e = get_experiment_by_name("boxdim", settings_dir=tmp_path,
                               overrides={"a": 0.75, "n_min": 2, "n_max": 4, "m": 1})
    report = e.run()
    assert report.scales == [2, 3, 4]
    assert report.formula == pytest.approx(1.6309, abs=1e-4)


def test_box_dimension_experiment_deep_scales():
    e = get_experiment_by_name("boxdim", overrides={"a": 0.75, "n_min": 2, "n_max": 4, "m": 1,
                                                    "deep_min": 10, "deep_max": 20})
    report = e.run()
    assert report.deep_scales == list(range(10, 21))
    assert len(report.deep_counts) == 11
