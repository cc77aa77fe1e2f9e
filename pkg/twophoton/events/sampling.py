"""Photon detection events from intensity processes and from SPDC pairs.

Thermal events come from inhomogeneous Poisson thinning: candidates at the
dominating rate mean_rate·max(I)/⟨I⟩, each kept with probability I(t)/max(I).
The bound is taken per chunk, which keeps the construction exact while the
series streams through in pieces.
"""

from __future__ import annotations

import logging
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import PreconditionError
from ..optics.geometry import DetectorPair, Geometry, SpdcModel
from ..optics.patterns import spdc_pattern
from ..speckle.timeseries import IntensitySeries
from .stream import DetectorConfig, EventStream

log = logging.getLogger(__name__)

# mean_rate · tau_c above this leaves the two-photon regime
LOW_RATE_LIMIT = 0.1

IntensityInput = Union[IntensitySeries, Sequence[Tuple[float, float]], Iterable[IntensitySeries]]


class _Thinner:
    """Streams intensity chunks into accepted detection times for one detector."""

    def __init__(
        self,
        detector_id: str,
        config: DetectorConfig,
        rng: np.random.Generator,
        mean_intensity: float,
    ) -> None:
        if not mean_intensity > 0:
            raise PreconditionError(f"{detector_id}: mean intensity must be > 0, got {mean_intensity}")
        self._id = detector_id
        self._cfg = config
        self._rng = rng
        self._mean = float(mean_intensity)
        self._parts: List[np.ndarray] = []
        self._last_kept = -np.inf
        self._end = 0.0
        self._samples = 0

    def feed(self, chunk: IntensitySeries) -> None:
        vals = chunk.values
        if vals.size == 0:
            return
        if np.any(vals < 0) or not np.all(np.isfinite(vals)):
            raise PreconditionError(f"{self._id}: intensities must be finite and non-negative")
        self._samples += vals.size
        self._end = chunk.end_ns
        peak = float(vals.max())
        if peak <= 0:
            return

        rng = self._rng
        lam_max = self._cfg.rate_per_ns * peak / self._mean
        n = int(rng.poisson(lam_max * chunk.span_ns))
        t = np.sort(rng.uniform(chunk.t0_ns, chunk.end_ns, n))
        cell = np.minimum(((t - chunk.t0_ns) / chunk.dt_ns).astype(np.int64), vals.size - 1)
        t = t[rng.random(n) < vals[cell] / peak]
        if self._cfg.efficiency < 1.0:
            t = t[rng.random(t.size) < self._cfg.efficiency]
        if self._cfg.dead_time > 0 and t.size:
            t = self._apply_dead_time(t)
        self._parts.append(t)

    def _apply_dead_time(self, t: np.ndarray) -> np.ndarray:
        # non-paralyzable: an event blinds the detector for dead_time after it
        keep = np.zeros(t.size, dtype=bool)
        last = self._last_kept
        for i, ti in enumerate(t):
            if ti - last >= self._cfg.dead_time:
                keep[i] = True
                last = ti
        self._last_kept = last
        return t[keep]

    def finish(self, duration_ns: Optional[float] = None) -> EventStream:
        if self._samples == 0:
            raise PreconditionError(f"{self._id}: empty intensity series")
        return EventStream.merge(self._id, duration_ns or self._end, self._parts)


def _warn_low_rate(config: DetectorConfig, tau_c_ns: Optional[float], detector_id: str) -> None:
    if tau_c_ns is None:
        return
    product = config.rate_per_ns * tau_c_ns
    if product >= LOW_RATE_LIMIT:
        log.warning(
            "%s: mean_rate·tau_c = %.3g is not << 1; the two-photon regime assumption is violated",
            detector_id,
            product,
        )


def _as_chunks(intensity: IntensityInput) -> Tuple[Iterable[IntensitySeries], Optional[float]]:
    if isinstance(intensity, IntensitySeries):
        if len(intensity) == 0:
            raise PreconditionError("empty intensity series")
        return [intensity], float(intensity.values.mean())
    if isinstance(intensity, (list, tuple)) and (not intensity or not isinstance(intensity[0], IntensitySeries)):
        if len(intensity) == 0:
            raise PreconditionError("empty intensity series")
        series = IntensitySeries.from_pairs(list(intensity))
        return [series], float(series.values.mean())
    return intensity, None


def sample_thermal_events(
    intensity_series: IntensityInput,
    detector_config: DetectorConfig,
    rng: np.random.Generator,
    *,
    detector_id: str = "D1",
    mean_intensity: Optional[float] = None,
    tau_c_ns: Optional[float] = None,
    duration_ns: Optional[float] = None,
) -> EventStream:
    """Detection events whose rate follows mean_rate·I(t)/⟨I⟩.

    Accepts one series, (time, intensity) pairs, or an iterable of chunks; the
    latter needs ``mean_intensity`` since it cannot be averaged up front.
    Efficiency is an independent Bernoulli thinning; dead-time pruning runs last.
    """
    chunks, sample_mean = _as_chunks(intensity_series)
    mean = mean_intensity if mean_intensity is not None else sample_mean
    if mean is None:
        raise PreconditionError("streamed intensity chunks need an explicit mean_intensity")
    _warn_low_rate(detector_config, tau_c_ns, detector_id)
    thinner = _Thinner(detector_id, detector_config, rng, mean)
    for chunk in chunks:
        thinner.feed(chunk)
    return thinner.finish(duration_ns)


def sample_correlated_thermal_events(
    chunk_pairs: Iterable[Tuple[IntensitySeries, IntensitySeries]],
    configs: Tuple[DetectorConfig, DetectorConfig],
    rngs: Tuple[np.random.Generator, np.random.Generator],
    mean_intensity: float,
    *,
    tau_c_ns: Optional[float] = None,
) -> Tuple[EventStream, EventStream]:
    """Thin two jointly generated intensity streams into D1 and D2 events."""
    for cfg, det in zip(configs, ("D1", "D2")):
        _warn_low_rate(cfg, tau_c_ns, det)
    t1 = _Thinner("D1", configs[0], rngs[0], mean_intensity)
    t2 = _Thinner("D2", configs[1], rngs[1], mean_intensity)
    for c1, c2 in chunk_pairs:
        t1.feed(c1)
        t2.feed(c2)
    return t1.finish(), t2.finish()


def sample_poisson_events(
    detector_config: DetectorConfig,
    duration_ns: float,
    rng: np.random.Generator,
    *,
    detector_id: str = "D1",
) -> EventStream:
    """Homogeneous Poisson events: constant intensity (coherent light or uncorrelated singles)."""
    flat = IntensitySeries(t0_ns=0.0, dt_ns=float(duration_ns), values=np.ones(1))
    return sample_thermal_events(flat, detector_config, rng, detector_id=detector_id)


def sample_spdc_pairs(
    geometry: Geometry,
    model: SpdcModel,
    pair_rate: float,
    duration_ns: float,
    positions: DetectorPair,
    rng: np.random.Generator,
) -> Tuple[EventStream, EventStream]:
    """Simultaneous D1/D2 detections of down-converted pairs.

    Pairs are emitted as a Poisson process; each is detected jointly with
    probability equal to the finite-slit SPDC pattern at the detector positions.
    """
    if not pair_rate > 0:
        raise PreconditionError(f"pair_rate must be > 0, got {pair_rate}")
    acceptance = float(spdc_pattern(geometry, positions.total, model.phase_difference))
    n = int(rng.poisson(pair_rate * 1e-9 * duration_ns))
    emitted = np.sort(rng.uniform(0.0, duration_ns, n))
    detected = np.unique(emitted[rng.random(n) < acceptance])
    return (
        EventStream("D1", detected, duration_ns),
        EventStream("D2", detected.copy(), duration_ns),
    )


def sample_spdc_events(
    geometry: Geometry,
    model: SpdcModel,
    pair_rate: float,
    duration_ns: float,
    positions: DetectorPair,
    configs: Tuple[DetectorConfig, DetectorConfig],
    rng: np.random.Generator,
) -> Tuple[EventStream, EventStream]:
    """SPDC pairs merged with uncorrelated singles at each detector's mean_rate."""
    d1, d2 = sample_spdc_pairs(geometry, model, pair_rate, duration_ns, positions, rng)
    n1 = sample_poisson_events(configs[0], duration_ns, rng, detector_id="D1")
    n2 = sample_poisson_events(configs[1], duration_ns, rng, detector_id="D2")
    return (
        EventStream.merge("D1", duration_ns, [d1.timestamps, n1.timestamps]),
        EventStream.merge("D2", duration_ns, [d2.timestamps, n2.timestamps]),
    )
