"""Detection event streams and their plain-text tag-file format."""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Literal, Union

import numpy as np

from ..errors import ConfigError

DetectorId = Literal["D1", "D2"]

# measured single-count rates of the reference setup
DEFAULT_RATE_D1 = 45_000.0
DEFAULT_RATE_D2 = 25_000.0

_HEADER = re.compile(r"^#\s*detector=(?P<id>\S+)\s+duration_ns=(?P<duration>\S+)\s*$")


@dataclass(frozen=True)
class DetectorConfig:
    mean_rate: float  # events/s
    dead_time: float = 0.0  # ns
    efficiency: float = 1.0

    def __post_init__(self) -> None:
        if not self.mean_rate > 0:
            raise ConfigError(f"mean_rate must be > 0, got {self.mean_rate}")
        if self.dead_time < 0:
            raise ConfigError(f"dead_time must be >= 0, got {self.dead_time}")
        if not 0.0 < self.efficiency <= 1.0:
            raise ConfigError(f"efficiency must lie in (0, 1], got {self.efficiency}")

    @property
    def rate_per_ns(self) -> float:
        return self.mean_rate * 1e-9


@dataclass(frozen=True)
class EventStream:
    detector_id: str
    timestamps: np.ndarray  # ns
    duration_ns: float

    def __post_init__(self) -> None:
        t = np.asarray(self.timestamps, dtype=float)
        object.__setattr__(self, "timestamps", t)
        if t.ndim != 1:
            raise ConfigError("timestamps must be one-dimensional")
        if not self.duration_ns > 0:
            raise ConfigError(f"stream duration must be > 0, got {self.duration_ns}")
        if t.size:
            if np.any(np.diff(t) <= 0):
                raise ConfigError(f"{self.detector_id}: timestamps must be strictly increasing")
            if t[0] < 0 or t[-1] > self.duration_ns:
                raise ConfigError(f"{self.detector_id}: timestamps outside [0, {self.duration_ns}] ns")

    def __len__(self) -> int:
        return int(self.timestamps.size)

    @property
    def rate(self) -> float:
        """Measured events per second."""
        return self.timestamps.size / (self.duration_ns * 1e-9)

    def shifted(self, offset_ns: float) -> "EventStream":
        """Stream delayed by ``offset_ns``; events pushed past the end are dropped."""
        t = self.timestamps + offset_ns
        keep = (t >= 0) & (t <= self.duration_ns)
        return EventStream(self.detector_id, t[keep], self.duration_ns)

    @classmethod
    def merge(cls, detector_id: str, duration_ns: float, parts: Iterable[np.ndarray]) -> "EventStream":
        """Union of several timestamp sets, coincident duplicates collapsed."""
        joined = np.concatenate([np.asarray(p, dtype=float) for p in parts] or [np.empty(0)])
        return cls(detector_id, np.unique(joined), duration_ns)


# ---- Tag files ----

def _fmt(t: float) -> str:
    return str(int(t)) if float(t).is_integer() else repr(float(t))


def write_event_stream(
    stream: EventStream, path: Union[str, Path], header_lines: Iterable[str] = ()
) -> Path:
    p = Path(path)
    lines = [f"# detector={stream.detector_id} duration_ns={_fmt(stream.duration_ns)}"]
    lines += [f"# {h}" for h in header_lines]
    lines += [_fmt(t) for t in stream.timestamps]
    try:
        p.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise RuntimeError(f"Failed to write event stream {p}: {exc}") from exc
    return p


def read_event_stream(path: Union[str, Path]) -> EventStream:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise RuntimeError(f"Failed to read event stream {p}: {exc}") from exc

    detector_id = None
    duration = None
    stamps = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            m = _HEADER.match(line)
            if m and detector_id is None:
                detector_id, duration = m.group("id"), float(m.group("duration"))
            continue
        try:
            stamps.append(float(line))
        except ValueError as exc:
            raise ConfigError(f"{p}: invalid timestamp {line!r}") from exc

    if detector_id is None or duration is None:
        raise ConfigError(f"{p}: missing '# detector=<id> duration_ns=<T>' header")
    return EventStream(detector_id, np.asarray(stamps, dtype=float), duration)
