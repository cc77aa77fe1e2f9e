from __future__ import annotations

import pytest

from twophoton.config import (
    DEFAULT_CONFIG_PATH,
    RunConfig,
    apply_override,
    load_config,
    parse_override_value,
    resolve_config_path,
)
from twophoton.errors import ConfigError
from twophoton.optics import Geometry, SpdcSource, ThermalSource


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    for name in ("TWOPHOTON_CONFIG", "TWOPHOTON_SEED", "TWOPHOTON_OUT"):
        monkeypatch.delenv(name, raising=False)


def _write(tmp_path, text: str):
    path = tmp_path / "run.yaml"
    path.write_text(text)
    return str(path)


def test_packaged_defaults_match_model_defaults():
    cfg = load_config()
    assert cfg == RunConfig()
    assert cfg.to_geometry() == Geometry()
    assert isinstance(cfg.to_source(), ThermalSource)
    scan = cfg.to_scan()
    assert len(scan.positions) == 601
    assert scan.positions[0] == pytest.approx(-15e-3) and scan.positions[-1] == pytest.approx(15e-3)
    assert [d.mean_rate for d in scan.detectors] == [45_000.0, 25_000.0]
    assert len(cfg.speckle_positions()) == 11


def test_geometry_accepts_short_aliases(tmp_path):
    cfg = load_config(_write(tmp_path, "geometry: {a: 0.05e-3, d: 0.2e-3, z: 2.0}\n"))
    geometry = cfg.to_geometry()
    assert (geometry.a, geometry.d, geometry.z) == (0.05e-3, 0.2e-3, 2.0)
    cfg = load_config(_write(tmp_path, "geometry: {slit_width: 0.05e-3}\n"))
    assert cfg.to_geometry().a == 0.05e-3


def test_seed_precedence(tmp_path, monkeypatch):
    path = _write(tmp_path, "seed: 3\n")
    assert load_config(path).seed == 3
    monkeypatch.setenv("TWOPHOTON_SEED", "0x10")
    assert load_config(path).seed == 16
    assert load_config(path, seed=99).seed == 99
    assert load_config(path, seed=99, overrides={"seed": 5}).seed == 5


def test_output_dir_from_environment(monkeypatch):
    monkeypatch.setenv("TWOPHOTON_OUT", "/tmp/elsewhere")
    assert load_config().output_dir == "/tmp/elsewhere"
    assert load_config(output_dir="here").output_dir == "here"


def test_bad_environment_seed(monkeypatch):
    monkeypatch.setenv("TWOPHOTON_SEED", "lots")
    with pytest.raises(ConfigError):
        load_config()


def test_dotted_overrides():
    cfg = load_config(overrides={"geometry.d": 0.2e-3, "source.kind": "spdc", "scan.positions": [0.0, 1e-3, 2e-3, 3e-3, 4e-3]})
    assert cfg.to_geometry().d == 0.2e-3
    assert isinstance(cfg.to_source(), SpdcSource)
    assert cfg.to_scan().positions == (0.0, 1e-3, 2e-3, 3e-3, 4e-3)


def test_apply_override_rejects_scalar_parent():
    doc = {"seed": 1}
    with pytest.raises(ConfigError):
        apply_override(doc, "seed.low", 2)
    apply_override(doc, "hbt.duration_s", 1.0)
    assert doc["hbt"] == {"duration_s": 1.0}


@pytest.mark.parametrize(
    "text, expected",
    [("1e-3", 1e-3), ("0.135e-3", 0.135e-3), ("12", 12), ("true", True), ("spdc", "spdc"), ("[1, 2]", [1, 2])],
)
def test_parse_override_value(text, expected):
    assert parse_override_value(text) == expected


def test_unknown_keys_are_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, "geometry: {slit_widht: 1.0}\n"))
    with pytest.raises(ConfigError):
        load_config(overrides={"scan.engine": "exact"})
    with pytest.raises(ConfigError):
        load_config(overrides={"hbt.dt_fraction": 5})


def test_domain_validation_surfaces_as_config_error():
    cfg = load_config(overrides={"geometry.a": 0.2e-3})
    with pytest.raises(ConfigError):
        cfg.to_geometry()


def test_malformed_documents(tmp_path):
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, "geometry: [unclosed\n"))
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, "- just\n- a list\n"))
    assert load_config(_write(tmp_path, "")) == RunConfig()


def test_config_path_resolution(tmp_path, monkeypatch):
    assert resolve_config_path() == DEFAULT_CONFIG_PATH
    with pytest.raises(ConfigError):
        resolve_config_path(str(tmp_path / "missing.yaml"))
    path = _write(tmp_path, "seed: 8\n")
    monkeypatch.setenv("TWOPHOTON_CONFIG", path)
    assert load_config().seed == 8
    monkeypatch.setenv("TWOPHOTON_CONFIG", str(tmp_path / "gone.yaml"))
    with pytest.raises(ConfigError):
        load_config()


def test_resolved_yaml_reloads_to_same_config(tmp_path):
    cfg = load_config(seed=42, overrides={"source.kind": "spdc", "hbt.position": 1e-3})
    path = _write(tmp_path, cfg.to_yaml())
    assert load_config(path) == cfg
    assert "seed: 42" in cfg.to_yaml().splitlines()
