"""Scan configuration and result records."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Literal, Optional, Sequence, Tuple

import numpy as np

from ..coincidence.histogram import HistogramConfig
from ..errors import ConfigError
from ..events.stream import DEFAULT_RATE_D1, DEFAULT_RATE_D2, DetectorConfig

ScanMode = Literal["fix_D2_scan_D1", "antisymmetric", "difference_grid"]
Engine = Literal["analytic", "speckle_mc", "event_mc"]
SourceKind = Literal["thermal", "spdc"]

SCAN_MODES: Tuple[str, ...] = ("fix_D2_scan_D1", "antisymmetric", "difference_grid")
ENGINES: Tuple[str, ...] = ("analytic", "speckle_mc", "event_mc")
MIN_POSITIONS = 5


def _default_detectors() -> Tuple[DetectorConfig, DetectorConfig]:
    return DetectorConfig(DEFAULT_RATE_D1), DetectorConfig(DEFAULT_RATE_D2)


@dataclass(frozen=True)
class ScanConfig:
    mode: ScanMode = "difference_grid"
    positions: Tuple[float, ...] = ()
    engine: Engine = "analytic"
    realizations: int = 100_000  # speckle_mc budget per point
    seconds_per_point: float = 1.0  # event_mc budget per point
    fixed_x2: float = 0.0
    batches: int = 20
    workers: int = 1
    seed: int = 0
    detectors: Tuple[DetectorConfig, DetectorConfig] = field(default_factory=_default_detectors)
    histogram: HistogramConfig = field(default_factory=HistogramConfig)

    def __post_init__(self) -> None:
        object.__setattr__(self, "positions", tuple(float(p) for p in self.positions))
        if self.mode not in SCAN_MODES:
            raise ConfigError(f"unknown scan mode {self.mode!r}; expected one of {SCAN_MODES}")
        if self.engine not in ENGINES:
            raise ConfigError(f"unknown engine {self.engine!r}; expected one of {ENGINES}")
        if len(self.positions) < MIN_POSITIONS:
            raise ConfigError(f"a scan needs >= {MIN_POSITIONS} positions, got {len(self.positions)}")
        if not np.all(np.isfinite(self.positions)) or np.any(np.diff(self.positions) <= 0):
            raise ConfigError("scan positions must be finite and strictly increasing")
        if self.engine == "speckle_mc" and int(self.realizations) <= 0:
            raise ConfigError(f"realizations must be > 0, got {self.realizations}")
        if self.engine == "event_mc" and not self.seconds_per_point > 0:
            raise ConfigError(f"seconds_per_point must be > 0, got {self.seconds_per_point}")
        if int(self.workers) < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")

    @property
    def budget(self) -> float:
        if self.engine == "speckle_mc":
            return float(self.realizations)
        if self.engine == "event_mc":
            return float(self.seconds_per_point)
        return 0.0


@dataclass(frozen=True)
class ScanResult:
    """Per-position coincidence values; columns share one index order."""

    x1: np.ndarray
    x2: np.ndarray
    coincidence: np.ndarray
    coincidence_error: np.ndarray
    singles1: np.ndarray  # events/s
    singles2: np.ndarray
    mode: str = "difference_grid"
    engine: str = "analytic"
    kind: str = "thermal"
    # event engine only: background-subtracted coincidences per second
    net_rate: Optional[np.ndarray] = None
    net_rate_error: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        names = ("x1", "x2", "coincidence", "coincidence_error", "singles1", "singles2")
        for name in names:
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        n = self.x1.size
        if any(getattr(self, name).shape != (n,) for name in names):
            raise ConfigError("scan result columns must be one-dimensional with equal lengths")
        if np.any(self.coincidence_error < 0):
            raise ConfigError("coincidence errors must be >= 0")

    def __len__(self) -> int:
        return int(self.x1.size)

    def coordinate(self, kind: Optional[str] = None) -> np.ndarray:
        """Pattern argument: x1 - x2 for thermal light, x1 + x2 for SPDC."""
        kind = kind or self.kind
        if kind == "thermal":
            return self.x1 - self.x2
        if kind == "spdc":
            return self.x1 + self.x2
        raise ConfigError(f"no pattern coordinate for source kind {kind!r}")

    def to_columns(self) -> Dict[str, np.ndarray]:
        return {
            "x1": self.x1,
            "x2": self.x2,
            "coincidence": self.coincidence,
            "coincidence_err": self.coincidence_error,
            "singles1": self.singles1,
            "singles2": self.singles2,
        }


@dataclass(frozen=True)
class FitResult:
    amplitude: float
    background: float
    a_fit: float
    d_fit: float
    residual_rms: float
    converged: bool
    iterations: int = 0
    kind: str = "thermal"
    wavelength: float = 632.8e-9
    distance: float = 1.0

    def __post_init__(self) -> None:
        if self.converged and not (self.a_fit > 0 and self.d_fit > 0):
            raise ConfigError("a converged fit must have positive slit width and separation")

    def evaluate(self, u: Sequence[float]) -> np.ndarray:
        u = np.asarray(u, dtype=float) / (self.wavelength * self.distance)
        return self.background + self.amplitude * np.sinc(self.a_fit * u) ** 2 * np.cos(np.pi * self.d_fit * u) ** 2

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out["converged"] = bool(self.converged)
        return out


@dataclass(frozen=True)
class ResolutionReport:
    period_two_photon: float  # in x1 under antisymmetric scanning
    period_first_order: float
    ratio: float
    kind: str = "thermal"

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)
