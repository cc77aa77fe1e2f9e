from __future__ import annotations

import numpy as np
import pytest

from twophoton.events.stream import EventStream
from twophoton.optics.geometry import Geometry


@pytest.fixture
def geometry() -> Geometry:
    """HeNe double slit: a = 0.043 mm, d = 0.135 mm, detectors 1 m away."""
    return Geometry()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)


def poisson_stream(rng: np.random.Generator, rate_per_s: float, duration_ns: float, detector_id: str) -> EventStream:
    n = rng.poisson(rate_per_s * duration_ns * 1e-9)
    return EventStream(detector_id, np.unique(rng.uniform(0.0, duration_ns, n)), duration_ns)
