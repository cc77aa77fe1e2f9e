"""Detector scans, pattern fits and resolution reports."""

from .eventbus import EventBus
from .fitting import fit_curve, fit_pattern, resolution_report
from .io import read_scan_csv, read_yaml_block, write_scan_csv, write_yaml_block
from .results import FitResult, ResolutionReport, ScanConfig, ScanResult
from .runner import point_seed, run_scan, run_scan_async, scan_grid, scan_pairs

__all__ = [
    "EventBus",
    "FitResult",
    "ResolutionReport",
    "ScanConfig",
    "ScanResult",
    "fit_curve",
    "fit_pattern",
    "point_seed",
    "read_scan_csv",
    "read_yaml_block",
    "resolution_report",
    "run_scan",
    "run_scan_async",
    "scan_grid",
    "scan_pairs",
    "write_scan_csv",
    "write_yaml_block",
]
