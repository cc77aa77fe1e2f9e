"""Detector scans over the analytic, speckle Monte Carlo and event engines."""

from __future__ import annotations

import asyncio
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from ..coincidence.histogram import count_windowed
from ..errors import ConfigError
from ..events.sampling import sample_correlated_thermal_events, sample_spdc_events
from ..optics.geometry import CoherentSource, DetectorPair, Geometry, SourceModel, SpdcSource, ThermalSource
from ..optics.patterns import spdc_pattern, thermal_pattern
from ..speckle.estimate import estimate_g2_spatial
from ..speckle.source import ThermalSourceConfig
from ..speckle.timeseries import iter_correlated_intensity
from .eventbus import EventBus
from .results import ScanConfig, ScanResult

log = logging.getLogger(__name__)

# intensity samples per coherence time for the event engine
DT_FRACTION = 12.0


@dataclass(frozen=True)
class _Point:
    coincidence: float
    error: float
    singles1: float
    singles2: float
    net_rate: float = 0.0
    net_rate_error: float = 0.0


def scan_pairs(scan: ScanConfig, kind: str) -> List[DetectorPair]:
    """Detector positions for every scan coordinate, in scan order."""
    p = scan.positions
    if scan.mode == "fix_D2_scan_D1":
        return [DetectorPair(x, scan.fixed_x2) for x in p]
    if scan.mode == "antisymmetric":
        return [DetectorPair(x, -x) for x in p]
    # difference_grid: the coordinate is the pattern argument itself
    if kind == "spdc":
        return [DetectorPair(0.5 * x, 0.5 * x) for x in p]
    return [DetectorPair(0.5 * x, -0.5 * x) for x in p]


def point_seed(seed: int, index: int) -> int:
    """Independent 64-bit seed for scan point ``index``."""
    return int(np.random.SeedSequence([int(seed), int(index)]).generate_state(1, dtype=np.uint64)[0])


def _check_engine(source: SourceModel, engine: str) -> str:
    if isinstance(source, CoherentSource):
        raise ConfigError("coherent light has no two-photon pattern to scan; use a thermal or spdc source")
    if engine == "speckle_mc" and not isinstance(source, ThermalSource):
        raise ConfigError("the speckle_mc engine needs a thermal source")
    return source.kind


# ---- Engines ----

def _analytic(geometry: Geometry, source: SourceModel, pairs: List[DetectorPair], scan: ScanConfig) -> List[_Point]:
    if isinstance(source, SpdcSource):
        values = spdc_pattern(geometry, np.array([q.total for q in pairs]), source.model.phase_difference)
    else:
        values = thermal_pattern(geometry, np.array([q.difference for q in pairs]))
    d1, d2 = scan.detectors
    r1 = d1.mean_rate * d1.efficiency
    r2 = d2.mean_rate * d2.efficiency
    return [_Point(float(v), 0.0, r1, r2) for v in np.atleast_1d(values)]


def _speckle_point(geometry: Geometry, source: ThermalSource, pair: DetectorPair, scan: ScanConfig, index: int) -> _Point:
    config = ThermalSourceConfig.from_source(source, point_seed(scan.seed, index))
    est = estimate_g2_spatial(geometry, config, pair, scan.realizations, batches=scan.batches)
    d1, d2 = scan.detectors
    return _Point(
        est.value,
        est.std_error,
        d1.mean_rate * d1.efficiency * est.mean_i1 / source.mean_intensity,
        d2.mean_rate * d2.efficiency * est.mean_i2 / source.mean_intensity,
    )


def _event_point(geometry: Geometry, source: SourceModel, pair: DetectorPair, scan: ScanConfig, index: int) -> _Point:
    seq = np.random.SeedSequence([int(scan.seed), int(index)])
    rng_field, rng1, rng2 = (np.random.default_rng(s) for s in seq.spawn(3))
    duration_ns = scan.seconds_per_point * 1e9
    seconds = scan.seconds_per_point
    hist = scan.histogram

    if isinstance(source, SpdcSource):
        s1, s2 = sample_spdc_events(
            geometry, source.model, source.pair_rate, duration_ns, pair, scan.detectors, rng_field
        )
    else:
        config = ThermalSourceConfig.from_source(source, 0)
        chunks = iter_correlated_intensity(
            geometry, config, pair, duration_ns, config.tau_c_ns / DT_FRACTION, rng_field
        )
        s1, s2 = sample_correlated_thermal_events(
            chunks, scan.detectors, (rng1, rng2), config.mean_intensity, tau_c_ns=config.tau_c_ns
        )

    counts = count_windowed(s1, s2, hist)
    net_rate = counts.net / seconds
    net_err = math.sqrt(counts.coincidences + counts.accidentals) / seconds
    if isinstance(source, SpdcSource):
        # fraction of emitted pairs seen as coincidences
        scale = source.pair_rate * seconds
        value, error = counts.net / scale, math.sqrt(counts.coincidences + counts.accidentals) / scale
    else:
        # normalized by the Poisson expectation R1·R2·W·T
        expected = len(s1) * len(s2) * hist.window_ns / duration_ns
        if expected <= 0:
            value, error = float("nan"), 0.0
        else:
            value, error = counts.coincidences / expected, math.sqrt(counts.coincidences) / expected
    return _Point(value, error, len(s1) / seconds, len(s2) / seconds, net_rate, net_err)


# ---- Orchestration ----

def _assemble(scan: ScanConfig, kind: str, pairs: List[DetectorPair], points: List[_Point]) -> ScanResult:
    event = scan.engine == "event_mc"
    return ScanResult(
        x1=np.array([q.x1 for q in pairs]),
        x2=np.array([q.x2 for q in pairs]),
        coincidence=np.array([p.coincidence for p in points]),
        coincidence_error=np.array([p.error for p in points]),
        singles1=np.array([p.singles1 for p in points]),
        singles2=np.array([p.singles2 for p in points]),
        mode=scan.mode,
        engine=scan.engine,
        kind=kind,
        net_rate=np.array([p.net_rate for p in points]) if event else None,
        net_rate_error=np.array([p.net_rate_error for p in points]) if event else None,
    )


async def run_scan_async(
    geometry: Geometry,
    source: SourceModel,
    scan: ScanConfig,
    *,
    bus: Optional[EventBus] = None,
) -> ScanResult:
    """Evaluate every scan point; Monte Carlo points run in worker threads.

    Each point draws from its own seed derived from (scan.seed, index), so the
    result is independent of ``scan.workers`` and completion order.
    """
    kind = _check_engine(source, scan.engine)
    pairs = scan_pairs(scan, kind)
    total = len(pairs)

    async def _emit(event: dict) -> None:
        if bus is not None:
            await bus.publish(event)

    await _emit({"type": "scan.started", "engine": scan.engine, "mode": scan.mode, "kind": kind, "points": total})
    if scan.engine == "analytic":
        points = _analytic(geometry, source, pairs, scan)
    else:
        worker = _speckle_point if scan.engine == "speckle_mc" else _event_point
        sem = asyncio.Semaphore(int(scan.workers))
        done = 0

        async def _run(index: int, pair: DetectorPair) -> _Point:
            nonlocal done
            async with sem:
                point = await asyncio.to_thread(worker, geometry, source, pair, scan, index)
            done += 1
            await _emit(
                {
                    "type": "scan.point",
                    "index": index,
                    "done": done,
                    "points": total,
                    "x1": pair.x1,
                    "x2": pair.x2,
                    "value": point.coincidence,
                    "error": point.error,
                }
            )
            return point

        points = list(await asyncio.gather(*(_run(i, q) for i, q in enumerate(pairs))))

    await _emit({"type": "scan.finished", "points": total})
    log.info("scan %s/%s/%s: %d points", kind, scan.engine, scan.mode, total)
    return _assemble(scan, kind, pairs, points)


def run_scan(geometry: Geometry, source: SourceModel, scan: ScanConfig) -> ScanResult:
    return asyncio.run(run_scan_async(geometry, source, scan))


def scan_grid(start: float, stop: float, num: int) -> Tuple[float, ...]:
    return tuple(float(x) for x in np.linspace(start, stop, int(num)))
