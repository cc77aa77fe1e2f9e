"""Coincidence histograms, windowed counts and normalized g2(τ)."""

from .histogram import (
    CoincidenceHistogram,
    DecayFit,
    HistogramConfig,
    WindowedCounts,
    build_histogram,
    build_histogram_bruteforce,
    count_windowed,
    expected_accidentals,
    fit_decay,
    g2_tau,
    read_histogram_csv,
    rebin,
    window_dilution,
    write_histogram_csv,
)

__all__ = [
    "CoincidenceHistogram",
    "DecayFit",
    "HistogramConfig",
    "WindowedCounts",
    "build_histogram",
    "build_histogram_bruteforce",
    "count_windowed",
    "expected_accidentals",
    "fit_decay",
    "g2_tau",
    "read_histogram_csv",
    "rebin",
    "window_dilution",
    "write_histogram_csv",
]
