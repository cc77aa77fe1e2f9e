"""Fringe visibility of the central fringe of a sampled pattern."""

from __future__ import annotations

from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from ..errors import ConfigError, InsufficientSpanError


def _bracketed(y: np.ndarray, i: int) -> Optional[int]:
    return i if 0 < i < y.size - 1 else None


def _lobe_min(y: np.ndarray, start: int, step: int, level: float) -> Optional[int]:
    """Lowest sample of the first dip below ``level`` walking away from ``start``.

    The dip ends once the data climb back above halfway between the peak
    and the lowest sample seen so far.
    """
    best: Optional[int] = None
    i = start + step
    while 0 <= i < y.size:
        if best is None:
            if y[i] < level:
                best = i
        elif y[i] < y[best]:
            best = i
        elif y[i] > 0.5 * (y[start] + y[best]):
            break
        i += step
    return None if best is None else _bracketed(y, best)


def _window_min(x: np.ndarray, y: np.ndarray, i_max: int, side: int, period: float) -> Optional[int]:
    offset = side * (x - x[i_max])
    idx = np.flatnonzero((offset > 0) & (offset <= period))
    if not idx.size:
        return None
    return _bracketed(y, int(idx[np.argmin(y[idx])]))


def _refine(spline: Optional[CubicSpline], x: np.ndarray, y: np.ndarray, i: int, pick) -> float:
    """Extremum value near sample i from the spline's critical points inside the bracket."""
    value = float(y[i])
    if spline is None:
        return value
    lo, hi = x[max(i - 1, 0)], x[min(i + 1, x.size - 1)]
    roots = spline.derivative().roots(extrapolate=False)
    roots = roots[(roots >= lo) & (roots <= hi)]
    if roots.size:
        value = pick(value, float(pick(spline(roots))))
    return value


def visibility(samples: Iterable[Tuple[float, float]], period: Optional[float] = None) -> float:
    """(max - min)/(max + min) over the central fringe.

    The central fringe runs from the envelope maximum to the fringe minimum
    beside it. With a known fringe ``period`` the minimum is the lowest
    sample within one period of the maximum. Without one it is the lowest
    sample of the first dip below the half level between the maximum and
    the global minimum, so sample noise near the peak is not mistaken for
    the fringe minimum. Either way the minimum must have samples on both
    sides. Extremes are refined on a cubic spline through the samples so
    that grids which straddle the true extremum stay accurate.
    """
    pts: Sequence[Tuple[float, float]] = sorted((float(p), float(v)) for p, v in samples)
    if len(pts) < 3:
        raise InsufficientSpanError(f"visibility needs at least 3 samples, got {len(pts)}")
    if period is not None and not period > 0:
        raise ConfigError(f"fringe period must be > 0, got {period}")
    x = np.array([p for p, _ in pts])
    y = np.array([v for _, v in pts])
    if np.ptp(y) == 0:
        return 0.0

    i_max = int(np.argmax(y))
    if period is None:
        level = 0.5 * (y[i_max] + y.min())
        found = (_lobe_min(y, i_max, +1, level), _lobe_min(y, i_max, -1, level))
    else:
        found = (_window_min(x, y, i_max, +1, period), _window_min(x, y, i_max, -1, period))
    candidates = [i for i in found if i is not None]
    if not candidates:
        raise InsufficientSpanError("no fringe minimum bracketed next to the envelope maximum")

    spline = CubicSpline(x, y) if x.size >= 4 and np.all(np.diff(x) > 0) else None
    vmax = _refine(spline, x, y, i_max, max)
    vmin = min(_refine(spline, x, y, i, min) for i in candidates)

    if vmax + vmin <= 0:
        return 0.0
    return float(np.clip((vmax - vmin) / (vmax + vmin), 0.0, 1.0))
