"""twophoton entry: analytic | speckle | hbt | scan subcommands writing CSV/YAML datasets."""
from __future__ import annotations

import argparse
import asyncio
import contextlib
import dataclasses
import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

try:
    import uvloop as _uvloop  # type: ignore
    _uvloop.install()
except Exception:
    pass

import numpy as np
import pandas as pd
import yaml
from pydantic import ValidationError

from .coincidence.histogram import (
    build_histogram,
    count_windowed,
    expected_accidentals,
    fit_decay,
    g2_tau,
    window_dilution,
    write_histogram_csv,
)
from .config import RunConfig, load_config, parse_override_value
from .errors import ConfigError, PreconditionError
from .events.sampling import sample_correlated_thermal_events, sample_poisson_events, sample_spdc_events
from .events.stream import EventStream, write_event_stream
from .optics.geometry import DetectorPair, SpdcModel, SpdcSource, ThermalSource
from .optics.patterns import first_order_pattern, fringe_period, thermal_pattern
from .optics.visibility import visibility
from .scan.eventbus import EventBus
from .scan.fitting import fit_pattern, resolution_report
from .scan.io import write_scan_csv, write_yaml_block
from .scan.runner import point_seed, run_scan, run_scan_async
from .speckle.estimate import estimate_g2_spatial
from .speckle.source import ThermalSourceConfig, mutual_coherence
from .speckle.timeseries import iter_correlated_intensity

logger = logging.getLogger(__name__)

COMMANDS = ("analytic", "speckle", "hbt", "scan")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def _provenance(command: str, cfg: RunConfig) -> List[str]:
    """Header lines echoed into every output file."""
    return [f"twophoton {command}", f"seed={cfg.seed}", "resolved config:"] + [
        f"  {line}" for line in cfg.to_yaml().splitlines()
    ]


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir).expanduser()
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise RuntimeError(f"Output directory {out} is not writable: {exc}") from exc
    return out


def _write_frame(frame: pd.DataFrame, path: Path, header: Sequence[str]) -> Path:
    try:
        with path.open("w", encoding="utf-8", newline="") as fh:
            for line in header:
                fh.write(f"# {line}\n")
            frame.to_csv(fh, index=False, lineterminator="\n")
    except OSError as exc:
        raise RuntimeError(f"Failed to write {path}: {exc}") from exc
    return path


# ---- Commands ----

def cmd_analytic(cfg: RunConfig) -> List[Path]:
    """Thermal, SPDC and first-order closed-form patterns over the scan grid."""
    out = _out_dir(cfg)
    geometry = cfg.to_geometry()
    scan = dataclasses.replace(cfg.to_scan(), engine="analytic")
    head = _provenance("analytic", cfg)

    thermal = run_scan(geometry, ThermalSource(), scan)
    spdc = run_scan(geometry, SpdcSource(model=SpdcModel(cfg.source.phase_difference)), scan)
    x = np.asarray(scan.positions)
    first = pd.DataFrame({"x": x, "intensity": np.atleast_1d(first_order_pattern(geometry, x))})

    paths = [
        write_scan_csv(thermal, out / "thermal.csv", head),
        write_scan_csv(spdc, out / "spdc.csv", head),
        _write_frame(first, out / "first_order.csv", head),
    ]
    logger.info("analytic: %d grid points -> %s", len(x), out)
    return paths


def cmd_speckle(cfg: RunConfig) -> Path:
    """Speckle Monte Carlo g2 over the difference grid, with closed form alongside."""
    source = cfg.to_source()
    if not isinstance(source, ThermalSource):
        raise ConfigError(f"speckle needs a thermal source, got {source.kind!r}")
    out = _out_dir(cfg)
    geometry = cfg.to_geometry()
    sp = cfg.speckle

    rows: List[Dict[str, Any]] = []
    for i, u in enumerate(cfg.speckle_positions()):
        pair = DetectorPair(0.5 * u, -0.5 * u)
        config = ThermalSourceConfig.from_source(source, point_seed(cfg.seed, i))
        est = estimate_g2_spatial(geometry, config, pair, sp.realizations, batches=sp.batches, workers=sp.workers)
        rows.append(
            {
                "x1": pair.x1,
                "x2": pair.x2,
                "u": u,
                "value": est.value,
                "std_error": est.std_error,
                "n_realizations": est.n_realizations,
                "closed_form": float(thermal_pattern(geometry, u)),
            }
        )
        logger.debug("speckle point %d/%d: %.5f ± %.5f", i + 1, len(cfg.speckle_positions()), est.value, est.std_error)
    path = _write_frame(pd.DataFrame(rows), out / "speckle.csv", _provenance("speckle", cfg))
    logger.info("speckle: %d points -> %s", len(rows), path)
    return path


def _hbt_streams(cfg: RunConfig) -> Tuple[EventStream, EventStream, Dict[str, Any]]:
    geometry = cfg.to_geometry()
    source = cfg.to_source()
    detectors = cfg.to_detectors()
    hbt = cfg.hbt
    duration_ns = hbt.duration_s * 1e9
    pair = DetectorPair(hbt.position, hbt.position)
    rng_field, rng1, rng2 = (np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(3))
    extra: Dict[str, Any] = {}

    if isinstance(source, ThermalSource):
        config = ThermalSourceConfig.from_source(source, cfg.seed)
        dt_ns = config.tau_c_ns / hbt.dt_fraction
        chunks = iter_correlated_intensity(geometry, config, pair, duration_ns, dt_ns, rng_field)
        s1, s2 = sample_correlated_thermal_events(
            chunks, detectors, (rng1, rng2), config.mean_intensity, tau_c_ns=config.tau_c_ns
        )
        mu = mutual_coherence(geometry, config, pair.x1, pair.x2)
        extra["tau_c_configured_ns"] = config.tau_c_ns
        extra["mutual_coherence_abs"] = abs(mu)
        extra["expected_windowed_g2"] = 1.0 + window_dilution(config.tau_c_ns, cfg.histogram.window_ns) * abs(mu) ** 2
    elif isinstance(source, SpdcSource):
        s1, s2 = sample_spdc_events(
            geometry, source.model, source.pair_rate, duration_ns, pair, detectors, rng_field
        )
        extra["pair_rate"] = source.pair_rate
    else:
        s1 = sample_poisson_events(detectors[0], duration_ns, rng1, detector_id="D1")
        s2 = sample_poisson_events(detectors[1], duration_ns, rng2, detector_id="D2")
    return s1, s2, extra


def cmd_hbt(cfg: RunConfig) -> Tuple[Path, Path]:
    """Event streams at one position, coincidence histogram and bunching summary."""
    out = _out_dir(cfg)
    head = _provenance("hbt", cfg)
    hist_cfg = cfg.to_histogram()
    s1, s2, extra = _hbt_streams(cfg)
    logger.info("hbt: %d events on D1, %d on D2 over %.3g s", len(s1), len(s2), cfg.hbt.duration_s)

    hist = build_histogram(s1, s2, hist_cfg)
    counts = count_windowed(s1, s2, hist_cfg)
    g2 = dict(g2_tau(hist, s1, s2))
    expected = expected_accidentals(s1, s2, hist_cfg.window_ns)
    summary: Dict[str, Any] = {
        "kind": cfg.source.kind,
        "duration_s": cfg.hbt.duration_s,
        "position": cfg.hbt.position,
        "events_d1": len(s1),
        "events_d2": len(s2),
        "singles_d1": s1.rate,
        "singles_d2": s2.rate,
        "coincidences": counts.coincidences,
        "accidentals": counts.accidentals,
        "net": counts.net,
        "expected_accidentals": expected,
        "windowed_g2": counts.coincidences / expected if expected > 0 else float("nan"),
        "g2_zero_channel": g2.get(0.0, float("nan")),
        **extra,
    }
    if isinstance(cfg.to_source(), ThermalSource):
        decay = fit_decay(
            hist, s1, s2, rebin_factor=cfg.hbt.fit_rebin, tau_c_guess=extra.get("tau_c_configured_ns")
        )
        summary.update(
            g2_zero=decay.g2_zero,
            g2_zero_err=decay.amplitude_err,
            tau_c_fit_ns=decay.tau_c_ns,
            tau_c_fit_err_ns=decay.tau_c_err,
        )
    else:
        summary["g2_zero"] = summary["g2_zero_channel"]

    if cfg.hbt.write_events:
        write_event_stream(s1, out / "events_d1.txt", head)
        write_event_stream(s2, out / "events_d2.txt", head)

    hist_path = write_histogram_csv(hist, hist_cfg, out / "histogram.csv", head)
    summary_path = write_yaml_block(summary, out / "hbt_summary.yaml", head)
    logger.info("hbt: g2(0) = %.4f, net = %.0f -> %s", summary["g2_zero"], counts.net, out)
    return hist_path, summary_path


async def _log_progress(bus: EventBus) -> None:
    async for ev in bus.subscribe():
        if ev.get("type") == "scan.point":
            logger.debug(
                "scan point %d/%d (x1=%.4g, x2=%.4g): %.5g ± %.2g",
                ev["done"], ev["points"], ev["x1"], ev["x2"], ev["value"], ev["error"],
            )
        else:
            logger.info("%s", {k: v for k, v in ev.items()})


async def _scan_with_progress(cfg: RunConfig):
    bus = EventBus()
    task = asyncio.create_task(_log_progress(bus))
    await bus.wait_for_subscribers()
    try:
        return await run_scan_async(cfg.to_geometry(), cfg.to_source(), cfg.to_scan(), bus=bus)
    finally:
        await bus.close()
        with contextlib.suppress(asyncio.CancelledError):
            await task


def _visibility_or_none(x: np.ndarray, y: np.ndarray, period: Optional[float] = None) -> Optional[float]:
    if np.ptp(x) == 0:
        logger.warning("visibility not available: every point sits at pattern argument %g", x[0])
        return None
    try:
        return visibility(zip(x, y), period)
    except PreconditionError as exc:
        logger.warning("visibility not available: %s", exc)
        return None


def cmd_scan(cfg: RunConfig) -> List[Path]:
    """Scan, pattern fit, visibility and resolution report."""
    out = _out_dir(cfg)
    head = _provenance("scan", cfg)
    geometry = cfg.to_geometry()
    result = asyncio.run(_scan_with_progress(cfg))
    paths = [write_scan_csv(result, out / "scan.csv", head)]

    coordinate = result.coordinate()
    period = fringe_period(geometry)
    report: Dict[str, Any] = {
        "kind": result.kind,
        "engine": result.engine,
        "mode": result.mode,
        "coordinate": "x1 - x2" if result.kind == "thermal" else "x1 + x2",
        "visibility_data": _visibility_or_none(coordinate, result.coincidence, period),
    }
    singles = np.vstack([result.singles1, result.singles2])
    report["singles_cv"] = (singles.std(axis=1, ddof=1) / singles.mean(axis=1)).tolist()

    try:
        fit = fit_pattern(result, result.kind, geometry)
    except PreconditionError as exc:
        logger.warning("scan fit skipped: %s", exc)
        fit = None
    if fit is not None:
        paths.append(write_yaml_block(fit.to_dict(), out / "fit.yaml", head))
        dense = np.linspace(coordinate.min(), coordinate.max(), 4001)
        report["visibility_fit"] = _visibility_or_none(dense, fit.evaluate(dense), period)
        if fit.converged:
            report["resolution"] = resolution_report(fit, geometry).to_dict()
    paths.append(write_yaml_block(report, out / "report.yaml", head))
    logger.info("scan: visibility %s -> %s", report["visibility_data"], out)
    return paths


HANDLERS = {
    "analytic": cmd_analytic,
    "speckle": cmd_speckle,
    "hbt": cmd_hbt,
    "scan": cmd_scan,
}


# ---- Argument handling ----

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="twophoton",
        description="Two-photon double-slit interference workbench.",
        epilog="Any config field can be overridden with a dotted flag, e.g. --geometry.d 0.135e-3.",
    )
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="YAML run configuration (default: $TWOPHOTON_CONFIG, then packaged)")
    p.add_argument("--seed", type=lambda s: int(s, 0), help="master seed (u64)")
    p.add_argument("--out", help="output directory")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    return p


def _dotted_overrides(extra: Sequence[str]) -> Dict[str, Any]:
    overrides: Dict[str, Any] = {}
    items = list(extra)
    i = 0
    while i < len(items):
        token = items[i]
        if not token.startswith("--") or "." not in token:
            raise ConfigError(f"unrecognized argument {token!r}")
        key, eq, value = token[2:].partition("=")
        if not eq:
            if i + 1 >= len(items):
                raise ConfigError(f"override {token} needs a value")
            value = items[i + 1]
            i += 1
        overrides[key] = parse_override_value(value)
        i += 1
    return overrides


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args, extra = _parser().parse_known_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG

    level = "DEBUG" if args.verbose else os.environ.get("LOG_LEVEL", "INFO")
    logging.basicConfig(level=level)

    try:
        cfg = load_config(args.config, seed=args.seed, output_dir=args.out, overrides=_dotted_overrides(extra))
        HANDLERS[args.command](cfg)
    except (ConfigError, ValidationError, yaml.YAMLError) as exc:
        logger.error("config error: %s", exc)
        return EXIT_CONFIG
    except (PreconditionError, RuntimeError, OSError) as exc:
        logger.error("%s failed: %s", args.command, exc)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
