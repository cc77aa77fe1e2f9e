"""Run configuration: one YAML document, validated section by section.

Values are layered, lowest precedence first: the YAML file, environment
(TWOPHOTON_SEED, TWOPHOTON_OUT), explicit --seed/--out flags, then dotted
per-field overrides such as ``geometry.d=0.135e-3``.
"""

from __future__ import annotations

import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Mapping, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .coincidence.histogram import HistogramConfig
from .errors import ConfigError
from .events.stream import DEFAULT_RATE_D1, DEFAULT_RATE_D2, DetectorConfig
from .optics.geometry import (
    HENE_WAVELENGTH,
    DEFAULT_SLIT_SEPARATION,
    DEFAULT_SLIT_WIDTH,
    CoherentSource,
    Geometry,
    SourceModel,
    SpdcModel,
    SpdcSource,
    ThermalMixture,
    ThermalSource,
)
from .scan.results import ScanConfig
from .scan.runner import scan_grid

log = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = Path(__file__).resolve().parent / "assets" / "default_config.yaml"
ENV_CONFIG = "TWOPHOTON_CONFIG"
ENV_SEED = "TWOPHOTON_SEED"
ENV_OUT = "TWOPHOTON_OUT"


def _getenv_int(name: str) -> Optional[int]:
    v = (os.getenv(name) or "").strip()
    if not v:
        return None
    try:
        return int(v, 0)
    except ValueError as exc:
        raise ConfigError(f"{name} must be an integer, got {v!r}") from exc


def _getenv_path(name: str) -> Optional[str]:
    return (os.getenv(name) or "").strip() or None


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True, frozen=True)


class GeometrySection(_Section):
    slit_width: float = Field(DEFAULT_SLIT_WIDTH, alias="a")
    slit_separation: float = Field(DEFAULT_SLIT_SEPARATION, alias="d")
    distance: float = Field(1.0, alias="z")
    wavelength: float = HENE_WAVELENGTH


class MixtureSection(_Section):
    p_alpha: float = 1.0 / 3.0
    p_beta: float = 1.0 / 3.0
    p_gamma: float = 1.0 / 3.0


class SourceSection(_Section):
    kind: Literal["thermal", "spdc", "coherent"] = "thermal"
    mixture: MixtureSection = MixtureSection()
    subsources_per_slit: int = 32
    tau_c: float = 200e-9  # s
    mean_intensity: float = 1.0
    phase_difference: float = 0.0
    pair_rate: float = 1000.0  # pairs/s


class DetectorSection(_Section):
    mean_rate: float
    dead_time: float = 0.0  # ns
    efficiency: float = 1.0


class DetectorsSection(_Section):
    d1: DetectorSection = DetectorSection(mean_rate=DEFAULT_RATE_D1)
    d2: DetectorSection = DetectorSection(mean_rate=DEFAULT_RATE_D2)


class HistogramSection(_Section):
    channel_width: float = 0.3
    range_ns: float = 2000.0
    window_ns: float = 600.0
    accidental_shift_ns: float = 4000.0


class GridSection(_Section):
    start: float
    stop: float
    num: int = Field(ge=2)

    def values(self) -> Tuple[float, ...]:
        return scan_grid(self.start, self.stop, self.num)


Positions = Union[GridSection, List[float]]


def _positions(p: Positions) -> Tuple[float, ...]:
    return p.values() if isinstance(p, GridSection) else tuple(float(x) for x in p)


class ScanSection(_Section):
    mode: Literal["fix_D2_scan_D1", "antisymmetric", "difference_grid"] = "difference_grid"
    positions: Positions = GridSection(start=-15e-3, stop=15e-3, num=601)
    fixed_x2: float = 0.0
    engine: Literal["analytic", "speckle_mc", "event_mc"] = "analytic"
    realizations: int = 100_000
    seconds_per_point: float = 1.0
    workers: int = 1
    batches: int = 20


class SpeckleSection(_Section):
    positions: Positions = GridSection(start=-10e-3, stop=10e-3, num=11)
    realizations: int = 100_000
    batches: int = 20
    workers: int = 1


class HbtSection(_Section):
    duration_s: float = Field(20.0, gt=0)
    position: float = 0.0
    dt_fraction: float = Field(12.0, gt=10)
    fit_rebin: int = Field(11, ge=1)
    write_events: bool = False


class RunConfig(_Section):
    geometry: GeometrySection = GeometrySection()
    source: SourceSection = SourceSection()
    detectors: DetectorsSection = DetectorsSection()
    histogram: HistogramSection = HistogramSection()
    scan: ScanSection = ScanSection()
    speckle: SpeckleSection = SpeckleSection()
    hbt: HbtSection = HbtSection()
    seed: int = Field(0, ge=0, lt=2 ** 64)
    output_dir: str = "out"

    # ---- domain objects ----

    def to_geometry(self) -> Geometry:
        geometry = Geometry(**self.geometry.model_dump())
        if not geometry.far_field:
            log.warning(
                "z = %g m is inside 10·d²/λ = %g m; the far-field closed forms are approximate",
                geometry.distance,
                10.0 * geometry.slit_separation ** 2 / geometry.wavelength,
            )
        return geometry

    def to_source(self) -> SourceModel:
        s = self.source
        if s.kind == "spdc":
            return SpdcSource(model=SpdcModel(s.phase_difference), pair_rate=s.pair_rate)
        if s.kind == "coherent":
            return CoherentSource()
        return ThermalSource(
            mixture=ThermalMixture(**s.mixture.model_dump()),
            subsources_per_slit=s.subsources_per_slit,
            tau_c=s.tau_c,
            mean_intensity=s.mean_intensity,
        )

    def to_detectors(self) -> Tuple[DetectorConfig, DetectorConfig]:
        return (
            DetectorConfig(**self.detectors.d1.model_dump()),
            DetectorConfig(**self.detectors.d2.model_dump()),
        )

    def to_histogram(self) -> HistogramConfig:
        return HistogramConfig(**self.histogram.model_dump())

    def to_scan(self) -> ScanConfig:
        s = self.scan
        return ScanConfig(
            mode=s.mode,
            positions=_positions(s.positions),
            engine=s.engine,
            realizations=s.realizations,
            seconds_per_point=s.seconds_per_point,
            fixed_x2=s.fixed_x2,
            batches=s.batches,
            workers=s.workers,
            seed=self.seed,
            detectors=self.to_detectors(),
            histogram=self.to_histogram(),
        )

    def speckle_positions(self) -> Tuple[float, ...]:
        return _positions(self.speckle.positions)

    def to_yaml(self) -> str:
        """Resolved configuration, keys sorted, as echoed into output headers."""
        return yaml.safe_dump(self.model_dump(by_alias=True, mode="json"), sort_keys=True, default_flow_style=False)


# ---- Loading ----

def resolve_config_path(cli_path: Optional[str] = None) -> Path:
    """--config, then TWOPHOTON_CONFIG, then the packaged default."""
    candidates: List[Tuple[str, Path]] = []
    if cli_path:
        candidates.append(("--config", Path(cli_path).expanduser()))
    env_path = _getenv_path(ENV_CONFIG)
    if env_path:
        candidates.append((ENV_CONFIG, Path(env_path).expanduser()))
    if candidates:
        origin, path = candidates[0]
        if not path.is_file():
            raise ConfigError(f"config file from {origin} not found: {path}")
        return path
    return DEFAULT_CONFIG_PATH


def parse_override_value(text: str) -> Any:
    """YAML scalar typing, with plain float syntax such as ``1e-3`` accepted too."""
    try:
        value = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse override value {text!r}: {exc}") from exc
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            return value
    return value


def apply_override(doc: Dict[str, Any], dotted: str, value: Any) -> None:
    keys = [k for k in dotted.split(".") if k]
    if not keys:
        raise ConfigError(f"empty override key {dotted!r}")
    node = doc
    for key in keys[:-1]:
        child = node.get(key)
        if child is None:
            child = node[key] = {}
        if not isinstance(child, dict):
            raise ConfigError(f"override {dotted!r}: {key!r} is not a section")
        node = child
    node[keys[-1]] = value


def _read_document(path: Path) -> Dict[str, Any]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"Failed to read config file {path}: {exc}") from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a mapping of sections")
    return doc


def load_config(
    path: Optional[str] = None,
    *,
    seed: Optional[int] = None,
    output_dir: Optional[str] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> RunConfig:
    source = resolve_config_path(path)
    doc = _read_document(source)

    env_seed = _getenv_int(ENV_SEED)
    if env_seed is not None:
        doc["seed"] = env_seed
    env_out = _getenv_path(ENV_OUT)
    if env_out:
        doc["output_dir"] = env_out
    if seed is not None:
        doc["seed"] = seed
    if output_dir:
        doc["output_dir"] = output_dir
    for key, value in (overrides or {}).items():
        apply_override(doc, key, value)

    try:
        cfg = RunConfig.model_validate(doc)
    except ValidationError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    log.debug("config loaded from %s (seed=%d)", source, cfg.seed)
    return cfg
