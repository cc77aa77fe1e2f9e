from .sampling import (
    LOW_RATE_LIMIT,
    sample_correlated_thermal_events,
    sample_poisson_events,
    sample_spdc_events,
    sample_spdc_pairs,
    sample_thermal_events,
)
from .stream import (
    DEFAULT_RATE_D1,
    DEFAULT_RATE_D2,
    DetectorConfig,
    DetectorId,
    EventStream,
    read_event_stream,
    write_event_stream,
)

__all__ = [
    "DEFAULT_RATE_D1",
    "DEFAULT_RATE_D2",
    "DetectorConfig",
    "DetectorId",
    "EventStream",
    "LOW_RATE_LIMIT",
    "read_event_stream",
    "sample_correlated_thermal_events",
    "sample_poisson_events",
    "sample_spdc_events",
    "sample_spdc_pairs",
    "sample_thermal_events",
    "write_event_stream",
]
