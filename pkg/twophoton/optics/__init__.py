"""Closed-form and exact-path interference-diffraction patterns."""

from .geometry import (
    CoherentSource,
    ComplexAmplitude,
    DetectorPair,
    Geometry,
    SlitLabel,
    SourceModel,
    SpdcModel,
    SpdcSource,
    ThermalMixture,
    ThermalSource,
)
from .patterns import (
    first_order_pattern,
    fringe_period,
    g2_finite_spdc,
    g2_finite_thermal,
    g2_point_spdc,
    g2_point_thermal,
    path_length,
    sinc,
    spdc_pattern,
    thermal_pattern,
    two_photon_phase,
)
from .quadrature import g2_finite_by_quadrature
from .visibility import visibility

__all__ = [
    "CoherentSource",
    "ComplexAmplitude",
    "DetectorPair",
    "Geometry",
    "SlitLabel",
    "SourceModel",
    "SpdcModel",
    "SpdcSource",
    "ThermalMixture",
    "ThermalSource",
    "first_order_pattern",
    "fringe_period",
    "g2_finite_by_quadrature",
    "g2_finite_spdc",
    "g2_finite_thermal",
    "g2_point_spdc",
    "g2_point_thermal",
    "path_length",
    "sinc",
    "spdc_pattern",
    "thermal_pattern",
    "two_photon_phase",
    "visibility",
]
