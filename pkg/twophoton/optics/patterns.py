"""First- and second-order interference-diffraction patterns.

The closed forms are the primary evaluators. The exact-path point-slit
formulas are kept alongside them as an independent cross-check.
"""

from __future__ import annotations

import cmath
import logging
import math
from typing import Union

import numpy as np
from numpy.typing import ArrayLike

from .geometry import ComplexAmplitude, DetectorPair, Geometry, SlitLabel, SpdcModel, ThermalMixture

log = logging.getLogger(__name__)

Real = Union[float, np.ndarray]

# Equal-weight mixture background (2/3) is rescaled to 1.
THERMAL_POINT_NORMALIZATION = 1.5


def _scalar_or_array(value: np.ndarray) -> Real:
    return float(value) if np.ndim(value) == 0 else value


def sinc(u: ArrayLike) -> Real:
    """sin(u)/u with sinc(0) = 1 (unnormalized convention)."""
    return _scalar_or_array(np.sinc(np.asarray(u, dtype=float) / np.pi))


# ---- Geometry primitives ----

def path_length(slit_center_x: float, detector_x: float, geometry: Geometry) -> float:
    """Euclidean distance from a point on the slit plane to a detector position."""
    return math.hypot(geometry.distance, detector_x - slit_center_x)


def two_photon_phase(
    geometry: Geometry,
    pair: DetectorPair,
    path1: SlitLabel,
    path2: SlitLabel,
) -> ComplexAmplitude:
    """Unit amplitude e^{ik(r_{path1,D1} + r_{path2,D2})}."""
    r1 = path_length(geometry.slit_center(path1), pair.x1, geometry)
    r2 = path_length(geometry.slit_center(path2), pair.x2, geometry)
    return cmath.exp(1j * geometry.k * (r1 + r2))


# ---- Point-slit (exact path) patterns ----

def g2_point_thermal(
    geometry: Geometry,
    pair: DetectorPair,
    mixture: ThermalMixture = ThermalMixture(),
    *,
    normalize: bool = True,
) -> float:
    """Mixture-weighted G² for point slits.

    Raw value is p_α + p_β + p_γ·½|e^{ik(r_A1+r_B2)} + e^{ik(r_B1+r_A2)}|². With
    ``normalize`` the value is scaled by 3/2 so the equal-weight background is 1.
    """
    if not geometry.far_field:
        log.debug("point-slit thermal pattern evaluated outside the far-field zone")
    cross = two_photon_phase(geometry, pair, "A", "B") + two_photon_phase(geometry, pair, "B", "A")
    raw = mixture.p_alpha + mixture.p_beta + mixture.p_gamma * 0.5 * abs(cross) ** 2
    return raw * THERMAL_POINT_NORMALIZATION if normalize else raw


def g2_point_spdc(geometry: Geometry, pair: DetectorPair, model: SpdcModel = SpdcModel()) -> float:
    """|e^{ik(r_A1+r_A2)} + e^{i(k(r_B1+r_B2)+Δφ)}|² for point slits."""
    upper = two_photon_phase(geometry, pair, "A", "A")
    lower = two_photon_phase(geometry, pair, "B", "B") * cmath.exp(1j * model.phase_difference)
    return abs(upper + lower) ** 2


# ---- Far-field closed forms ----

def _envelope_fringe(geometry: Geometry, u: ArrayLike, phase: float = 0.0) -> np.ndarray:
    arg = np.pi * np.asarray(u, dtype=float) / geometry.fringe_scale()
    envelope = np.sinc(arg * geometry.slit_width / np.pi) ** 2
    return envelope * np.cos(arg * geometry.slit_separation + 0.5 * phase) ** 2


def thermal_pattern(geometry: Geometry, u: ArrayLike) -> Real:
    """1 + sinc²(πau/λz)·cos²(πdu/λz) with u = x1 - x2."""
    return _scalar_or_array(1.0 + _envelope_fringe(geometry, u))


def spdc_pattern(geometry: Geometry, u: ArrayLike, phase_difference: float = 0.0) -> Real:
    """sinc²(πau/λz)·cos²(πdu/λz + Δφ/2) with u = x1 + x2."""
    return _scalar_or_array(_envelope_fringe(geometry, u, phase_difference))


def g2_finite_thermal(geometry: Geometry, pair: DetectorPair) -> float:
    return float(thermal_pattern(geometry, pair.difference))


def g2_finite_spdc(geometry: Geometry, pair: DetectorPair) -> float:
    return float(spdc_pattern(geometry, pair.total))


def first_order_pattern(geometry: Geometry, x: ArrayLike) -> Real:
    """Coherent double-slit intensity sinc²(πax/λz)·cos²(πdx/λz)."""
    return _scalar_or_array(_envelope_fringe(geometry, x))


def fringe_period(geometry: Geometry) -> float:
    """Period λz/d of cos²(πd·u/λz) in its argument u."""
    return geometry.fringe_scale() / geometry.slit_separation
