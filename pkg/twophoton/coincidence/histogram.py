"""Start-stop analysis of two detector streams.

All event pairs are considered (multi-stop), τ = t1 - t2. Channel k is
centered on k·channel_width and open on the side facing τ = 0, so swapping
the streams mirrors the histogram exactly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, List, NamedTuple, Optional, Tuple, Union

import numpy as np
import pandas as pd
from scipy.optimize import curve_fit

from ..errors import ConfigError, PreconditionError
from ..events.stream import EventStream

log = logging.getLogger(__name__)

# first-index blocks for the sweep; bounds the size of the pair arrays
_SWEEP_BLOCK = 65536


@dataclass(frozen=True)
class HistogramConfig:
    channel_width: float = 0.3  # ns
    range_ns: float = 2000.0  # half-width of the τ axis
    window_ns: float = 600.0
    accidental_shift_ns: float = 4000.0

    def __post_init__(self) -> None:
        if not self.channel_width > 0:
            raise ConfigError(f"channel_width must be > 0, got {self.channel_width}")
        if not self.range_ns > 0:
            raise ConfigError(f"range_ns must be > 0, got {self.range_ns}")
        if not self.window_ns > 0:
            raise ConfigError(f"window_ns must be > 0, got {self.window_ns}")
        if not self.accidental_shift_ns > self.window_ns + self.range_ns:
            raise ConfigError(
                f"accidental_shift_ns ({self.accidental_shift_ns}) must exceed "
                f"window_ns + range_ns ({self.window_ns + self.range_ns})"
            )

    @property
    def half_channels(self) -> int:
        return int(math.floor(self.range_ns / self.channel_width + 0.5))

    def centers(self) -> np.ndarray:
        k = self.half_channels
        return np.arange(-k, k + 1) * self.channel_width

    def channel_index(self, tau: np.ndarray) -> np.ndarray:
        """Signed channel number of each delay."""
        tau = np.asarray(tau, dtype=float)
        return (np.sign(tau) * np.floor(np.abs(tau) / self.channel_width + 0.5)).astype(np.int64)


@dataclass(frozen=True)
class CoincidenceHistogram:
    centers: np.ndarray  # ns
    counts: np.ndarray
    total_pairs_considered: int
    channel_width: float

    def __post_init__(self) -> None:
        if self.centers.shape != self.counts.shape:
            raise ConfigError("centers and counts must have equal length")
        if np.any(self.counts < 0):
            raise ConfigError("histogram counts must be non-negative")

    def __len__(self) -> int:
        return int(self.counts.size)

    def count_at(self, tau_ns: float) -> int:
        k = int(np.argmin(np.abs(self.centers - tau_ns)))
        return int(self.counts[k])

    def mirrored(self) -> "CoincidenceHistogram":
        return CoincidenceHistogram(-self.centers[::-1], self.counts[::-1].copy(), self.total_pairs_considered, self.channel_width)


class WindowedCounts(NamedTuple):
    coincidences: int
    accidentals: int
    net: float


# ---- Pair enumeration ----

def _check_streams(s1: EventStream, s2: EventStream) -> None:
    if not math.isclose(s1.duration_ns, s2.duration_ns, rel_tol=1e-12, abs_tol=0.0):
        raise PreconditionError(
            f"stream durations differ: {s1.detector_id}={s1.duration_ns} ns, {s2.detector_id}={s2.duration_ns} ns"
        )


def _pair_delays(t1: np.ndarray, t2: np.ndarray, center: float, half: float) -> Iterator[np.ndarray]:
    """Delays t1 - t2 of every pair with |t1 - t2 - center| <= half.

    Both arrays are sorted, so the partner window of each t1 is a contiguous
    slice of t2 found with two binary searches. Bounds are widened slightly and
    the exact test is applied to the computed delays.
    """
    if t1.size == 0 or t2.size == 0:
        return
    slack = 1e-9 * max(1.0, abs(center) + half, float(np.abs(t1[-1])))
    lo_all = np.searchsorted(t2, t1 - center - half - slack, side="left")
    hi_all = np.searchsorted(t2, t1 - center + half + slack, side="right")
    for start in range(0, t1.size, _SWEEP_BLOCK):
        stop = min(start + _SWEEP_BLOCK, t1.size)
        lo = lo_all[start:stop]
        n = hi_all[start:stop] - lo
        total = int(n.sum())
        if total == 0:
            continue
        first = np.repeat(np.arange(start, stop), n)
        offset = np.arange(total) - np.repeat(np.cumsum(n) - n, n)
        second = np.repeat(lo, n) + offset
        tau = t1[first] - t2[second]
        yield tau[np.abs(tau - center) <= half]


# ---- Histograms ----

def _histogram_from_delays(delays: Iterable[np.ndarray], config: HistogramConfig) -> CoincidenceHistogram:
    k = config.half_channels
    counts = np.zeros(2 * k + 1, dtype=np.int64)
    considered = 0
    for tau in delays:
        considered += tau.size
        idx = config.channel_index(tau) + k
        counts += np.bincount(idx, minlength=counts.size)[: counts.size]
    return CoincidenceHistogram(config.centers(), counts, considered, config.channel_width)


def build_histogram(s1: EventStream, s2: EventStream, config: HistogramConfig = HistogramConfig()) -> CoincidenceHistogram:
    """Counts of t1 - t2 per channel for every pair with |t1 - t2| <= range."""
    _check_streams(s1, s2)
    hist = _histogram_from_delays(_pair_delays(s1.timestamps, s2.timestamps, 0.0, config.range_ns), config)
    log.debug("histogram %s×%s: %d pairs in ±%g ns", s1.detector_id, s2.detector_id, hist.total_pairs_considered, config.range_ns)
    return hist


def build_histogram_bruteforce(
    s1: EventStream, s2: EventStream, config: HistogramConfig = HistogramConfig()
) -> CoincidenceHistogram:
    """All-pairs reference implementation; O(n1·n2) memory, small inputs only."""
    _check_streams(s1, s2)
    tau = np.subtract.outer(s1.timestamps, s2.timestamps).ravel()
    return _histogram_from_delays([tau[np.abs(tau) <= config.range_ns]], config)


def count_windowed(s1: EventStream, s2: EventStream, config: HistogramConfig = HistogramConfig()) -> WindowedCounts:
    """Coincidences in |τ| <= window/2 and accidentals in the window shifted by accidental_shift_ns."""
    _check_streams(s1, s2)
    half = 0.5 * config.window_ns
    coincidences = sum(t.size for t in _pair_delays(s1.timestamps, s2.timestamps, 0.0, half))
    accidentals = sum(
        t.size for t in _pair_delays(s1.timestamps, s2.timestamps, config.accidental_shift_ns, half)
    )
    return WindowedCounts(int(coincidences), int(accidentals), float(coincidences - accidentals))


def expected_accidentals(s1: EventStream, s2: EventStream, window_ns: float) -> float:
    """R1·R2·window·T for independent streams."""
    return len(s1) * len(s2) * window_ns / s1.duration_ns


# ---- Normalization ----

def _normalization(histogram: CoincidenceHistogram, s1: EventStream, s2: EventStream) -> float:
    if len(s1) == 0 or len(s2) == 0:
        raise PreconditionError("g2 normalization needs events in both streams")
    return len(s1) * len(s2) * histogram.channel_width / s1.duration_ns


def g2_tau(histogram: CoincidenceHistogram, s1: EventStream, s2: EventStream) -> List[Tuple[float, float]]:
    """(τ, counts(τ)/(R1·R2·T·channel_width)) per channel."""
    norm = _normalization(histogram, s1, s2)
    return list(zip(histogram.centers.tolist(), (histogram.counts / norm).tolist()))


def rebin(histogram: CoincidenceHistogram, factor: int) -> CoincidenceHistogram:
    """Merge ``factor`` adjacent channels, keeping the zero channel at a group center."""
    factor = int(factor)
    if factor < 1 or factor % 2 == 0:
        raise ConfigError(f"rebin factor must be a positive odd integer, got {factor}")
    k = histogram.counts.size // 2
    groups = (k - factor // 2) // factor
    keep = slice(k - factor // 2 - groups * factor, k + factor // 2 + groups * factor + 1)
    counts = histogram.counts[keep].reshape(-1, factor).sum(axis=1)
    centers = histogram.centers[keep].reshape(-1, factor).mean(axis=1)
    return CoincidenceHistogram(centers, counts, histogram.total_pairs_considered, histogram.channel_width * factor)


# ---- Thermal bunching ----

def window_dilution(tau_c_ns: float, window_ns: float) -> float:
    """Mean of e^{-2|τ|/tau_c} over |τ| <= window/2: (tau_c/W)(1 - e^{-W/tau_c})."""
    if not tau_c_ns > 0 or not window_ns > 0:
        raise ConfigError("tau_c and window must be > 0")
    x = window_ns / tau_c_ns
    return float(-np.expm1(-x) / x)


@dataclass(frozen=True)
class DecayFit:
    amplitude: float
    tau_c_ns: float
    amplitude_err: float
    tau_c_err: float

    @property
    def g2_zero(self) -> float:
        return 1.0 + self.amplitude


def _bunching(tau: np.ndarray, amplitude: float, tau_c: float) -> np.ndarray:
    return 1.0 + amplitude * np.exp(-2.0 * np.abs(tau) / tau_c)


def fit_decay(
    histogram: CoincidenceHistogram,
    s1: EventStream,
    s2: EventStream,
    *,
    rebin_factor: int = 11,
    tau_c_guess: Optional[float] = None,
) -> DecayFit:
    """Least-squares fit of 1 + A·e^{-2|τ|/tau_c} to the normalized histogram."""
    coarse = rebin(histogram, rebin_factor) if rebin_factor > 1 else histogram
    norm = _normalization(coarse, s1, s2)
    g2 = coarse.counts / norm
    sigma = np.sqrt(np.maximum(coarse.counts, 1)) / norm
    guess = tau_c_guess or 0.25 * float(np.max(np.abs(coarse.centers)))
    try:
        popt, pcov = curve_fit(
            _bunching,
            coarse.centers,
            g2,
            p0=(max(float(g2.max()) - 1.0, 0.1), guess),
            sigma=sigma,
            absolute_sigma=True,
            bounds=([-1.0, 1e-6 * guess], [np.inf, np.inf]),
        )
    except RuntimeError as exc:
        raise PreconditionError(f"bunching fit did not converge: {exc}") from exc
    err = np.sqrt(np.diag(pcov))
    return DecayFit(float(popt[0]), float(popt[1]), float(err[0]), float(err[1]))


# ---- CSV ----

def write_histogram_csv(
    histogram: CoincidenceHistogram,
    config: HistogramConfig,
    path: Union[str, Path],
    header_lines: Iterable[str] = (),
) -> Path:
    p = Path(path)
    head = [
        f"# config channel_width={config.channel_width} range_ns={config.range_ns} "
        f"window_ns={config.window_ns} accidental_shift_ns={config.accidental_shift_ns}"
    ]
    head += [f"# {h}" for h in header_lines]
    frame = pd.DataFrame({"tau_ns": np.round(histogram.centers, 9), "counts": histogram.counts})
    try:
        with p.open("w", encoding="utf-8", newline="") as fh:
            fh.write("\n".join(head) + "\n")
            frame.to_csv(fh, index=False, lineterminator="\n")
    except OSError as exc:
        raise RuntimeError(f"Failed to write histogram {p}: {exc}") from exc
    return p


def read_histogram_csv(path: Union[str, Path], channel_width: Optional[float] = None) -> CoincidenceHistogram:
    p = Path(path)
    try:
        frame = pd.read_csv(p, comment="#")
    except OSError as exc:
        raise RuntimeError(f"Failed to read histogram {p}: {exc}") from exc
    centers = frame["tau_ns"].to_numpy(dtype=float)
    counts = frame["counts"].to_numpy(dtype=np.int64)
    width = channel_width or float(np.median(np.diff(centers)))
    return CoincidenceHistogram(centers, counts, int(counts.sum()), width)
