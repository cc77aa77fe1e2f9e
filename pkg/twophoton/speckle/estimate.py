"""Monte Carlo estimate of the equal-time intensity correlation."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..errors import ConfigError, PreconditionError
from ..optics.geometry import DetectorPair, Geometry
from .source import (
    ThermalSourceConfig,
    discretize_source,
    draw_realization,
    propagation_phasors,
    realization_rng,
)

log = logging.getLogger(__name__)

MIN_REALIZATIONS = 100
MIN_BATCHES = 10
# realizations drawn at once inside a batch
_BLOCK = 16384


@dataclass(frozen=True)
class CorrelationEstimate:
    value: float
    std_error: float
    n_realizations: int
    mean_i1: float = float("nan")
    mean_i2: float = float("nan")

    def __post_init__(self) -> None:
        if self.n_realizations < 2:
            raise ConfigError(f"an estimate needs >= 2 realizations, got {self.n_realizations}")
        if self.std_error < 0:
            raise ConfigError(f"std_error must be >= 0, got {self.std_error}")


def _batch_sums(
    config: ThermalSourceConfig,
    xs: np.ndarray,
    p1: np.ndarray,
    p2: np.ndarray,
    batch_index: int,
    size: int,
) -> Tuple[float, float, float]:
    rng = realization_rng(config.seed, batch_index)
    s12 = s1 = s2 = 0.0
    remaining = size
    while remaining > 0:
        m = min(remaining, _BLOCK)
        amps = draw_realization(xs, config, rng, size=m)
        i1 = np.abs(amps @ p1) ** 2
        i2 = np.abs(amps @ p2) ** 2
        s12 += float(np.dot(i1, i2))
        s1 += float(i1.sum())
        s2 += float(i2.sum())
        remaining -= m
    return s12, s1, s2


def estimate_g2_spatial(
    geometry: Geometry,
    config: ThermalSourceConfig,
    pair: DetectorPair,
    n_realizations: int,
    *,
    batches: int = 20,
    workers: int = 1,
) -> CorrelationEstimate:
    """mean(I1·I2)/(mean(I1)·mean(I2)) over independent speckle realizations.

    Realizations are split into ``batches`` fixed-size groups; group b is drawn
    from ``realization_rng(seed, b)``, so the result does not depend on
    ``workers``. The standard error is the batch-means error.
    """
    n = int(n_realizations)
    if n < MIN_REALIZATIONS:
        raise PreconditionError(f"n_realizations must be >= {MIN_REALIZATIONS}, got {n}")
    if int(batches) < MIN_BATCHES:
        raise PreconditionError(f"batch-means error needs >= {MIN_BATCHES} batches, got {batches}")
    n_batches = min(int(batches), n // 2)

    xs = discretize_source(geometry, config)
    p1 = propagation_phasors(xs, pair.x1, geometry)
    p2 = propagation_phasors(xs, pair.x2, geometry)
    sizes = [len(chunk) for chunk in np.array_split(np.arange(n), n_batches)]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=int(workers)) as pool:
            sums = list(pool.map(lambda b: _batch_sums(config, xs, p1, p2, b, sizes[b]), range(n_batches)))
    else:
        sums = [_batch_sums(config, xs, p1, p2, b, sizes[b]) for b in range(n_batches)]

    arr = np.asarray(sums)
    counts = np.asarray(sizes, dtype=float)
    per_batch = (arr[:, 0] / counts) / ((arr[:, 1] / counts) * (arr[:, 2] / counts))
    total = arr.sum(axis=0)
    value = (total[0] / n) / ((total[1] / n) * (total[2] / n))
    std_error = float(np.std(per_batch, ddof=1) / np.sqrt(n_batches))
    log.debug("g2(%.4g, %.4g) = %.5f ± %.5f (%d realizations)", pair.x1, pair.x2, value, std_error, n)
    return CorrelationEstimate(
        value=float(value),
        std_error=std_error,
        n_realizations=n,
        mean_i1=float(total[1] / n),
        mean_i2=float(total[2] / n),
    )
