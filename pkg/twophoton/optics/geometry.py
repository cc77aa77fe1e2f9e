"""Geometry and source descriptions for the double-slit setup."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Union

from ..errors import ConfigError

# Slit A sits at +d/2, slit B at -d/2; detector coordinates share the symmetry axis.
SlitLabel = Literal["A", "B"]

# e^{ik r} factors are carried as Python complex numbers.
ComplexAmplitude = complex

HENE_WAVELENGTH = 632.8e-9
DEFAULT_SLIT_WIDTH = 0.043e-3
DEFAULT_SLIT_SEPARATION = 0.135e-3
DEFAULT_DISTANCE = 1.0


def _finite(name: str, value: float) -> float:
    v = float(value)
    if not math.isfinite(v):
        raise ConfigError(f"{name} must be finite, got {value!r}")
    return v


@dataclass(frozen=True)
class Geometry:
    slit_width: float = DEFAULT_SLIT_WIDTH
    slit_separation: float = DEFAULT_SLIT_SEPARATION
    distance: float = DEFAULT_DISTANCE
    wavelength: float = HENE_WAVELENGTH

    def __post_init__(self) -> None:
        for name in ("slit_width", "slit_separation", "distance", "wavelength"):
            _finite(name, getattr(self, name))
        if self.slit_width <= 0:
            raise ConfigError(f"slit width must be > 0, got {self.slit_width}")
        if self.slit_separation <= self.slit_width:
            raise ConfigError(
                f"slit separation ({self.slit_separation}) must exceed slit width ({self.slit_width})"
            )
        if self.distance <= 0:
            raise ConfigError(f"distance must be > 0, got {self.distance}")
        if self.wavelength <= 0:
            raise ConfigError(f"wavelength must be > 0, got {self.wavelength}")

    # short physics names
    @property
    def a(self) -> float:
        return self.slit_width

    @property
    def d(self) -> float:
        return self.slit_separation

    @property
    def z(self) -> float:
        return self.distance

    @property
    def k(self) -> float:
        """Wavenumber 2π/λ."""
        return 2.0 * math.pi / self.wavelength

    @property
    def far_field(self) -> bool:
        """True when z ≥ 10·d²/λ."""
        return self.distance >= 10.0 * self.slit_separation ** 2 / self.wavelength

    def slit_center(self, slit: SlitLabel) -> float:
        if slit == "A":
            return 0.5 * self.slit_separation
        if slit == "B":
            return -0.5 * self.slit_separation
        raise ConfigError(f"slit label must be 'A' or 'B', got {slit!r}")

    def fringe_scale(self) -> float:
        """λz, the length scale shared by every far-field argument."""
        return self.wavelength * self.distance

    def replace(self, **changes: float) -> "Geometry":
        values = {
            "slit_width": self.slit_width,
            "slit_separation": self.slit_separation,
            "distance": self.distance,
            "wavelength": self.wavelength,
        }
        values.update(changes)
        return Geometry(**values)


@dataclass(frozen=True)
class DetectorPair:
    x1: float
    x2: float

    def __post_init__(self) -> None:
        _finite("x1", self.x1)
        _finite("x2", self.x2)

    @property
    def difference(self) -> float:
        return self.x1 - self.x2

    @property
    def total(self) -> float:
        return self.x1 + self.x2


@dataclass(frozen=True)
class ThermalMixture:
    """Weights of the both-from-A, both-from-B and one-from-each two-photon states."""

    p_alpha: float = 1.0 / 3.0
    p_beta: float = 1.0 / 3.0
    p_gamma: float = 1.0 / 3.0

    def __post_init__(self) -> None:
        for name in ("p_alpha", "p_beta", "p_gamma"):
            p = _finite(name, getattr(self, name))
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {p}")
        total = self.p_alpha + self.p_beta + self.p_gamma
        if abs(total - 1.0) > 1e-12:
            raise ConfigError(f"mixture weights must sum to 1, got {total!r}")


@dataclass(frozen=True)
class SpdcModel:
    phase_difference: float = 0.0

    def __post_init__(self) -> None:
        _finite("phase_difference", self.phase_difference)


# ---- Source models ----

@dataclass(frozen=True)
class ThermalSource:
    mixture: ThermalMixture = field(default_factory=ThermalMixture)
    subsources_per_slit: int = 32
    tau_c: float = 200e-9
    mean_intensity: float = 1.0

    kind: Literal["thermal"] = field(default="thermal", init=False)

    def __post_init__(self) -> None:
        if int(self.subsources_per_slit) < 1:
            raise ConfigError(f"subsources_per_slit must be >= 1, got {self.subsources_per_slit}")
        if not self.tau_c > 0:
            raise ConfigError(f"tau_c must be > 0, got {self.tau_c}")
        if not self.mean_intensity > 0:
            raise ConfigError(f"mean_intensity must be > 0, got {self.mean_intensity}")


@dataclass(frozen=True)
class SpdcSource:
    model: SpdcModel = field(default_factory=SpdcModel)
    pair_rate: float = 1000.0

    kind: Literal["spdc"] = field(default="spdc", init=False)

    def __post_init__(self) -> None:
        if not self.pair_rate > 0:
            raise ConfigError(f"pair_rate must be > 0, got {self.pair_rate}")


@dataclass(frozen=True)
class CoherentSource:
    """Attenuated laser: constant intensity, Poisson photon statistics."""

    kind: Literal["coherent"] = field(default="coherent", init=False)


SourceModel = Union[ThermalSource, SpdcSource, CoherentSource]
