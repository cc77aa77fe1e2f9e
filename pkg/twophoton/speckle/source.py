"""Discretized pseudo-thermal source: sub-sources, random amplitudes, propagation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ConfigError
from ..optics.geometry import Geometry, ThermalSource
from ..optics.quadrature import aperture_nodes, fraunhofer_phase

_KEY_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class ThermalSourceConfig:
    subsources_per_slit: int = 32
    tau_c: float = 200e-9  # s
    mean_intensity: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if int(self.subsources_per_slit) < 1:
            raise ConfigError(f"subsources_per_slit must be >= 1, got {self.subsources_per_slit}")
        if not self.tau_c > 0:
            raise ConfigError(f"tau_c must be > 0, got {self.tau_c}")
        if not self.mean_intensity > 0:
            raise ConfigError(f"mean_intensity must be > 0, got {self.mean_intensity}")

    @property
    def n_total(self) -> int:
        return 2 * int(self.subsources_per_slit)

    @property
    def tau_c_ns(self) -> float:
        return self.tau_c * 1e9

    @classmethod
    def from_source(cls, source: ThermalSource, seed: int) -> "ThermalSourceConfig":
        return cls(
            subsources_per_slit=source.subsources_per_slit,
            tau_c=source.tau_c,
            mean_intensity=source.mean_intensity,
            seed=seed,
        )


@dataclass(frozen=True)
class SpeckleEnsemble:
    """Complex detector fields, one row per realization, one column per position."""

    detector_positions: np.ndarray
    realizations: np.ndarray
    seed: int

    def __post_init__(self) -> None:
        if self.realizations.ndim != 2 or self.realizations.shape[1] != self.detector_positions.size:
            raise ConfigError(
                f"ensemble shape {self.realizations.shape} does not match "
                f"{self.detector_positions.size} detector positions"
            )
        if not np.all(np.isfinite(self.realizations)):
            raise ConfigError("ensemble contains non-finite amplitudes")

    @property
    def n_realizations(self) -> int:
        return int(self.realizations.shape[0])

    def intensities(self) -> np.ndarray:
        return np.abs(self.realizations) ** 2

    def mean_intensity(self) -> np.ndarray:
        """Per-position mean intensity and its standard error, shape (2, positions)."""
        i = self.intensities()
        return np.vstack([i.mean(axis=0), i.std(axis=0, ddof=1) / np.sqrt(i.shape[0])])

    def correlation(self, j1: int, j2: int) -> float:
        i = self.intensities()
        return float(np.mean(i[:, j1] * i[:, j2]) / (np.mean(i[:, j1]) * np.mean(i[:, j2])))


# ---- Counter-based generators ----

def realization_rng(seed: int, index: int) -> np.random.Generator:
    """Independent Philox stream keyed by seed XOR index."""
    return np.random.Generator(np.random.Philox(key=(int(seed) ^ int(index)) & _KEY_MASK))


# ---- Source model ----

def discretize_source(geometry: Geometry, config: ThermalSourceConfig) -> np.ndarray:
    """Sub-source positions: cell midpoints across each slit aperture, slit A first."""
    return aperture_nodes(geometry, config.subsources_per_slit)


def draw_realization(
    subsource_positions: np.ndarray,
    config: ThermalSourceConfig,
    rng: np.random.Generator,
    size: int | None = None,
) -> np.ndarray:
    """Circular complex Gaussian amplitude per sub-source.

    Each quadrature has variance mean_intensity/(2·N). With ``size`` a
    (size, N) block of independent realizations is returned.
    """
    n = np.asarray(subsource_positions).size
    sigma = np.sqrt(config.mean_intensity / (2.0 * n))
    shape = (n,) if size is None else (int(size), n)
    draws = rng.standard_normal(shape + (2,)) * sigma
    return draws[..., 0] + 1j * draws[..., 1]


def propagation_phasors(
    subsource_positions: np.ndarray, detector_x: float, geometry: Geometry
) -> np.ndarray:
    return np.exp(1j * fraunhofer_phase(geometry, np.asarray(subsource_positions, dtype=float), detector_x))


def propagate(
    realization: np.ndarray,
    subsource_positions: np.ndarray,
    detector_x: float,
    geometry: Geometry,
) -> complex | np.ndarray:
    """Σ_s E_s·e^{ik r(s → detector)} with the Fraunhofer phase; works on stacked realizations."""
    field = np.asarray(realization) @ propagation_phasors(subsource_positions, detector_x, geometry)
    return complex(field) if np.ndim(field) == 0 else field


def mutual_coherence(
    geometry: Geometry,
    config: ThermalSourceConfig,
    x1: float,
    x2: float,
) -> complex:
    """Normalized ⟨E(x1)E*(x2)⟩ of the discretized source.

    1 + |μ|² is the exact equal-time g2 between the two positions.
    """
    xs = discretize_source(geometry, config)
    dphi = fraunhofer_phase(geometry, xs, x1) - fraunhofer_phase(geometry, xs, x2)
    return complex(np.mean(np.exp(1j * dphi)))


def sample_ensemble(
    geometry: Geometry,
    config: ThermalSourceConfig,
    detector_positions: Sequence[float],
    n_realizations: int,
) -> SpeckleEnsemble:
    """Realization-by-realization fields; row i is drawn from ``realization_rng(seed, i)``."""
    positions = np.asarray(detector_positions, dtype=float)
    xs = discretize_source(geometry, config)
    phasors = np.stack([propagation_phasors(xs, x, geometry) for x in positions], axis=1)
    rows = np.stack(
        [draw_realization(xs, config, realization_rng(config.seed, i)) for i in range(int(n_realizations))]
    )
    return SpeckleEnsemble(detector_positions=positions, realizations=rows @ phasors, seed=config.seed)
