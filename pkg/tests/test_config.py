from pathlib import Path

import pytest
import yaml

from liftlearn.config import ConfigError, PipelineConfig, load_config

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def test_defaults_round_trip(tmp_path):
    cfg = PipelineConfig()
    path = tmp_path / "c.yaml"
    path.write_text(cfg.dump())
    assert load_config(path) == cfg


@pytest.mark.parametrize("name", ["burgers.yaml", "cubic_rd.yaml"])
def test_shipped_configs_load(name):
    cfg = load_config(CONFIGS / name)
    assert cfg.fom.n_x > 0


def test_dotted_overrides():
    cfg = load_config(None, {"fom.n_x": 64, "pod.r": 4, "seed": 3, "fom.bc": [1, 2]})
    assert (cfg.fom.n_x, cfg.pod.r, cfg.seed, cfg.fom.bc) == (64, 4, 3, (1.0, 2.0))


@pytest.mark.parametrize("text,match", [
    ("fom: {colour: red}", "unknown key"),
    ("fom: {n_x: 3.5}", "integer"),
    ("fom: {bc: [1]}", "list of 2"),
    ("pod: {center_scale: 1}", "true or false"),
    ("opinf: {train_fraction: 0}", "train_fraction"),
    ("io: {format: hdf5}", "io.format"),
    ("opinf: {input: true}", "forcing"),
    ("fom: [1, 2]", "mapping"),
])
def test_invalid_configs(tmp_path, text, match):
    path = tmp_path / "c.yaml"
    path.write_text(text)
    with pytest.raises(ConfigError, match=match):
        load_config(path)


def test_missing_and_malformed(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_config(tmp_path / "nope.yaml")
    path = tmp_path / "c.yaml"
    path.write_text("fom: {n_x: [")
    with pytest.raises(ConfigError):
        load_config(path)


def test_dump_is_plain_yaml():
    data = yaml.safe_load(PipelineConfig().dump())
    assert data["fom"]["bc"] == [0.0, 0.0]
