"""Time-resolved speckle intensity from a rotating-diffuser source model.

Every sub-source amplitude follows a complex first-order autoregressive
process with correlation e^{-dt/tau_c} per step, so the field autocorrelation
is g1(τ) = e^{-τ/tau_c}. Series are produced in chunks to bound memory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, List, Optional, Tuple

import numpy as np
from scipy.signal import lfilter

from ..errors import PreconditionError
from ..optics.geometry import DetectorPair, Geometry
from .source import ThermalSourceConfig, draw_realization, mutual_coherence, propagation_phasors

DEFAULT_CHUNK_SAMPLES = 1 << 20


@dataclass(frozen=True)
class IntensitySeries:
    """Intensity samples on a uniform grid; sample j covers [t0 + j·dt, t0 + (j+1)·dt)."""

    t0_ns: float
    dt_ns: float
    values: np.ndarray

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def span_ns(self) -> float:
        return self.dt_ns * self.values.size

    @property
    def end_ns(self) -> float:
        return self.t0_ns + self.span_ns

    def times(self) -> np.ndarray:
        return self.t0_ns + self.dt_ns * np.arange(self.values.size)

    def to_pairs(self) -> List[Tuple[float, float]]:
        return list(zip(self.times().tolist(), self.values.tolist()))

    @classmethod
    def from_pairs(cls, pairs: List[Tuple[float, float]]) -> "IntensitySeries":
        if len(pairs) < 2:
            raise PreconditionError("an intensity series needs at least 2 samples")
        t = np.array([p[0] for p in pairs], dtype=float)
        steps = np.diff(t)
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0) or steps[0] <= 0:
            raise PreconditionError("intensity samples must lie on a uniform increasing grid")
        return cls(t0_ns=float(t[0]), dt_ns=float(steps[0]), values=np.array([p[1] for p in pairs], dtype=float))

    @classmethod
    def concatenate(cls, chunks: List["IntensitySeries"]) -> "IntensitySeries":
        if not chunks:
            raise PreconditionError("no intensity chunks to join")
        return cls(chunks[0].t0_ns, chunks[0].dt_ns, np.concatenate([c.values for c in chunks]))


def _check_grid(tau_c_ns: float, duration_ns: float, dt_ns: float) -> int:
    if not dt_ns > 0 or dt_ns >= tau_c_ns / 10.0:
        raise PreconditionError(f"dt ({dt_ns} ns) must be positive and below tau_c/10 ({tau_c_ns / 10.0} ns)")
    if duration_ns <= 10.0 * tau_c_ns:
        raise PreconditionError(f"duration ({duration_ns} ns) must exceed 10·tau_c ({10.0 * tau_c_ns} ns)")
    return int(math.floor(duration_ns / dt_ns))


def _chunk_sizes(n_samples: int, chunk_samples: int) -> Iterator[Tuple[int, int]]:
    start = 0
    while start < n_samples:
        m = min(int(chunk_samples), n_samples - start)
        yield start, m
        start += m


def _ar1(state: np.ndarray, noise: np.ndarray, rho: float) -> np.ndarray:
    """x[n] = ρ·x[n-1] + sqrt(1-ρ²)·noise[n] along the last axis, seeded with ``state``."""
    zi = (rho * state)[..., None]
    out, _ = lfilter([math.sqrt(1.0 - rho * rho)], [1.0, -rho], noise, axis=-1, zi=zi)
    return out


def _unit_complex_noise(rng: np.random.Generator, shape: Tuple[int, ...]) -> np.ndarray:
    draws = rng.standard_normal(shape + (2,)) * math.sqrt(0.5)
    return draws[..., 0] + 1j * draws[..., 1]


def iter_speckle_time_series(
    config: ThermalSourceConfig,
    subsource_positions: np.ndarray,
    detector_x: float,
    duration_ns: float,
    dt_ns: float,
    rng: np.random.Generator,
    *,
    geometry: Optional[Geometry] = None,
    chunk_samples: int = DEFAULT_CHUNK_SAMPLES,
) -> Iterator[IntensitySeries]:
    """Chunks of the detector intensity with every sub-source evolved individually."""
    geometry = geometry or Geometry()
    n_samples = _check_grid(config.tau_c_ns, duration_ns, dt_ns)
    xs = np.asarray(subsource_positions, dtype=float)
    phasors = propagation_phasors(xs, detector_x, geometry)
    rho = math.exp(-dt_ns / config.tau_c_ns)
    state = draw_realization(xs, config, rng)
    for start, m in _chunk_sizes(n_samples, chunk_samples // max(1, xs.size) or 1):
        noise = draw_realization(xs, config, rng, size=m).T
        amps = _ar1(state, noise, rho)
        state = amps[:, -1]
        field = phasors @ amps
        yield IntensitySeries(t0_ns=start * dt_ns, dt_ns=dt_ns, values=np.abs(field) ** 2)


def speckle_time_series(
    config: ThermalSourceConfig,
    subsource_positions: np.ndarray,
    detector_x: float,
    duration_ns: float,
    dt_ns: float,
    rng: np.random.Generator,
    *,
    geometry: Optional[Geometry] = None,
) -> IntensitySeries:
    return IntensitySeries.concatenate(
        list(
            iter_speckle_time_series(
                config, subsource_positions, detector_x, duration_ns, dt_ns, rng, geometry=geometry
            )
        )
    )


def iter_correlated_intensity(
    geometry: Geometry,
    config: ThermalSourceConfig,
    pair: DetectorPair,
    duration_ns: float,
    dt_ns: float,
    rng: np.random.Generator,
    *,
    chunk_samples: int = DEFAULT_CHUNK_SAMPLES,
) -> Iterator[Tuple[IntensitySeries, IntensitySeries]]:
    """Joint intensity chunks at D1 and D2.

    All sub-sources share one AR(1) coefficient, so the two detector fields are
    jointly an AR(1) pair with cross-correlation μ·e^{-τ/tau_c}, μ being the
    mutual coherence. Two unit fields are mixed as E2 = μ*·E1 + sqrt(1-|μ|²)·W.
    """
    n_samples = _check_grid(config.tau_c_ns, duration_ns, dt_ns)
    mu = mutual_coherence(geometry, config, pair.x1, pair.x2)
    independent = math.sqrt(max(0.0, 1.0 - abs(mu) ** 2))
    rho = math.exp(-dt_ns / config.tau_c_ns)

    state = _unit_complex_noise(rng, (2,))
    for start, m in _chunk_sizes(n_samples, chunk_samples):
        if independent > 1e-12:
            fields = _ar1(state, _unit_complex_noise(rng, (2, m)), rho)
            state = fields[:, -1]
            e1 = fields[0]
            e2 = np.conj(mu) * e1 + independent * fields[1]
        else:
            e1 = _ar1(state[:1], _unit_complex_noise(rng, (1, m)), rho)[0]
            state = np.array([e1[-1], state[1]])
            e2 = np.conj(mu) * e1
        t0 = start * dt_ns
        yield (
            IntensitySeries(t0, dt_ns, config.mean_intensity * np.abs(e1) ** 2),
            IntensitySeries(t0, dt_ns, config.mean_intensity * np.abs(e2) ** 2),
        )


def intensity_g2(series: IntensitySeries, lag_samples: int) -> float:
    """⟨I(t)·I(t+lag)⟩/⟨I⟩² from one sampled series."""
    i = series.values
    lag = int(lag_samples)
    if lag < 0 or lag >= i.size:
        raise PreconditionError(f"lag {lag} outside series of {i.size} samples")
    mean = i.mean()
    if mean <= 0:
        raise PreconditionError("series has zero mean intensity")
    prod = i[: i.size - lag] * i[lag:]
    return float(prod.mean() / mean ** 2)
