"""Monte Carlo model of the rotating ground-glass (pseudo-thermal) source."""

from .estimate import CorrelationEstimate, estimate_g2_spatial
from .source import (
    SpeckleEnsemble,
    ThermalSourceConfig,
    discretize_source,
    draw_realization,
    mutual_coherence,
    propagate,
    realization_rng,
    sample_ensemble,
)
from .timeseries import (
    IntensitySeries,
    intensity_g2,
    iter_correlated_intensity,
    iter_speckle_time_series,
    speckle_time_series,
)

__all__ = [
    "CorrelationEstimate",
    "IntensitySeries",
    "SpeckleEnsemble",
    "ThermalSourceConfig",
    "discretize_source",
    "draw_realization",
    "estimate_g2_spatial",
    "intensity_g2",
    "iter_correlated_intensity",
    "iter_speckle_time_series",
    "mutual_coherence",
    "propagate",
    "realization_rng",
    "sample_ensemble",
    "speckle_time_series",
]
