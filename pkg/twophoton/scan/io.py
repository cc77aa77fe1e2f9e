"""Scan datasets as CSV and fit/report records as YAML key-value blocks."""

from __future__ import annotations

import re
from pathlib import Path
from typing import Any, Iterable, Mapping, Union

import numpy as np
import pandas as pd
import yaml

from ..errors import ConfigError
from .results import ScanResult

SCAN_COLUMNS = ("x1", "x2", "coincidence", "coincidence_err", "singles1", "singles2")

_META = re.compile(r"^#\s*scan\s+(?P<body>.*)$")


def _write_text(path: Path, head: Iterable[str], body: str, what: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as fh:
            for line in head:
                fh.write(f"# {line}\n" if not line.startswith("#") else f"{line}\n")
            fh.write(body)
    except OSError as exc:
        raise RuntimeError(f"Failed to write {what} {path}: {exc}") from exc
    return path


def write_scan_csv(result: ScanResult, path: Union[str, Path], header_lines: Iterable[str] = ()) -> Path:
    head = [f"scan mode={result.mode} engine={result.engine} kind={result.kind}", *header_lines]
    frame = pd.DataFrame(result.to_columns(), columns=list(SCAN_COLUMNS))
    return _write_text(Path(path), head, frame.to_csv(index=False, lineterminator="\n"), "scan")


def read_scan_csv(path: Union[str, Path]) -> ScanResult:
    """Load a scan CSV written by this package or produced externally."""
    p = Path(path)
    meta = {"mode": "difference_grid", "engine": "analytic", "kind": "thermal"}
    try:
        with p.open("r", encoding="utf-8") as fh:
            for line in fh:
                if not line.startswith("#"):
                    break
                m = _META.match(line.strip())
                if m:
                    for token in m.group("body").split():
                        key, _, value = token.partition("=")
                        if key in meta and value:
                            meta[key] = value
        frame = pd.read_csv(p, comment="#")
    except OSError as exc:
        raise RuntimeError(f"Failed to read scan {p}: {exc}") from exc

    missing = [c for c in SCAN_COLUMNS if c not in frame.columns]
    if missing:
        raise ConfigError(f"{p}: missing scan columns {missing}")
    return ScanResult(
        x1=frame["x1"].to_numpy(dtype=float),
        x2=frame["x2"].to_numpy(dtype=float),
        coincidence=frame["coincidence"].to_numpy(dtype=float),
        coincidence_error=frame["coincidence_err"].to_numpy(dtype=float),
        singles1=frame["singles1"].to_numpy(dtype=float),
        singles2=frame["singles2"].to_numpy(dtype=float),
        **meta,
    )


def _plain(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        return value.item()
    return value


def write_yaml_block(data: Mapping[str, Any], path: Union[str, Path], header_lines: Iterable[str] = ()) -> Path:
    body = yaml.safe_dump(_plain(data), sort_keys=True, default_flow_style=False)
    return _write_text(Path(path), header_lines, body, "record")


def read_yaml_block(path: Union[str, Path]) -> dict:
    p = Path(path)
    try:
        data = yaml.safe_load(p.read_text(encoding="utf-8"))
    except OSError as exc:
        raise RuntimeError(f"Failed to read {p}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{p}: expected a key-value block")
    return data
