from __future__ import annotations

import asyncio

import numpy as np
import pytest

from twophoton.coincidence import window_dilution
from twophoton.errors import ConfigError
from twophoton.events import DetectorConfig
from twophoton.optics import (
    CoherentSource,
    SpdcSource,
    ThermalSource,
    fringe_period,
    spdc_pattern,
    thermal_pattern,
    visibility,
)
from twophoton.scan import EventBus, ScanConfig, point_seed, run_scan, run_scan_async, scan_grid, scan_pairs

FIVE = scan_grid(-4e-3, 4e-3, 5)


def test_scan_pairs_follow_mode():
    p = FIVE
    fixed = scan_pairs(ScanConfig(mode="fix_D2_scan_D1", positions=p, fixed_x2=2e-3), "thermal")
    assert [q.x2 for q in fixed] == [2e-3] * 5
    assert [q.x1 for q in fixed] == list(p)
    anti = scan_pairs(ScanConfig(mode="antisymmetric", positions=p), "spdc")
    assert all(q.x2 == -q.x1 for q in anti)
    thermal = scan_pairs(ScanConfig(positions=p), "thermal")
    assert [q.difference for q in thermal] == pytest.approx(list(p))
    spdc = scan_pairs(ScanConfig(positions=p), "spdc")
    assert [q.total for q in spdc] == pytest.approx(list(p))


def test_scan_config_invariants():
    with pytest.raises(ConfigError):
        ScanConfig(positions=(0.0, 1.0, 2.0, 3.0))
    with pytest.raises(ConfigError):
        ScanConfig(positions=(0.0, 1.0, 1.0, 2.0, 3.0))
    with pytest.raises(ConfigError):
        ScanConfig(positions=FIVE, engine="exact")
    with pytest.raises(ConfigError):
        ScanConfig(positions=FIVE, engine="speckle_mc", realizations=0)
    with pytest.raises(ConfigError):
        ScanConfig(positions=FIVE, engine="event_mc", seconds_per_point=0.0)
    with pytest.raises(ConfigError):
        ScanConfig(positions=FIVE, workers=0)
    assert ScanConfig(positions=FIVE, engine="speckle_mc", realizations=123).budget == 123.0


def test_point_seeds_are_distinct_and_stable():
    seeds = [point_seed(7, i) for i in range(100)]
    assert len(set(seeds)) == 100
    assert point_seed(7, 3) == seeds[3]
    assert point_seed(8, 3) != seeds[3]


def test_analytic_scan_matches_closed_forms(geometry):
    positions = scan_grid(-15e-3, 15e-3, 601)
    detectors = (DetectorConfig(45_000.0, efficiency=0.5), DetectorConfig(25_000.0))
    scan = ScanConfig(positions=positions, detectors=detectors)
    thermal = run_scan(geometry, ThermalSource(), scan)
    assert np.allclose(thermal.coincidence, thermal_pattern(geometry, np.array(positions)), rtol=0, atol=1e-15)
    assert np.all(thermal.coincidence_error == 0.0)
    assert np.all(thermal.singles1 == 22_500.0) and np.all(thermal.singles2 == 25_000.0)
    assert thermal.net_rate is None
    spdc = run_scan(geometry, SpdcSource(), scan)
    assert np.allclose(spdc.coincidence, spdc_pattern(geometry, np.array(positions)), rtol=0, atol=1e-15)
    assert visibility(zip(spdc.coordinate(), spdc.coincidence)) == pytest.approx(1.0, abs=1e-6)


def test_engine_must_suit_source(geometry):
    with pytest.raises(ConfigError):
        run_scan(geometry, CoherentSource(), ScanConfig(positions=FIVE))
    with pytest.raises(ConfigError):
        run_scan(geometry, SpdcSource(), ScanConfig(positions=FIVE, engine="speckle_mc"))


def test_speckle_scan_is_independent_of_workers(geometry):
    def scan(workers: int) -> ScanConfig:
        return ScanConfig(positions=FIVE, engine="speckle_mc", realizations=2000, workers=workers, seed=11)

    serial = run_scan(geometry, ThermalSource(), scan(1))
    pooled = run_scan(geometry, ThermalSource(), scan(3))
    assert np.array_equal(serial.coincidence, pooled.coincidence)
    assert np.array_equal(serial.coincidence_error, pooled.coincidence_error)
    expected = thermal_pattern(geometry, np.array(FIVE))
    assert np.all(np.abs(serial.coincidence - expected) < 5 * serial.coincidence_error)


def test_event_scan_tracks_spdc_pattern(geometry):
    scan = ScanConfig(positions=scan_grid(-2e-3, 2e-3, 5), engine="event_mc", seconds_per_point=0.2, seed=3)
    result = run_scan(geometry, SpdcSource(), scan)
    expected = spdc_pattern(geometry, result.coordinate())
    assert np.all(np.abs(result.coincidence - expected) < 5 * result.coincidence_error)
    assert result.net_rate is not None and result.net_rate.shape == (5,)
    assert np.all(np.abs(result.singles1 - 45_000.0) < 3_000.0)


@pytest.mark.slow
def test_event_scan_thermal_contrast_is_diluted(geometry):
    positions = scan_grid(-4e-3, 4e-3, 9)
    scan = ScanConfig(positions=positions, engine="event_mc", seconds_per_point=0.5, workers=3, seed=1)
    result = run_scan(geometry, ThermalSource(), scan)
    singles = result.singles1
    assert singles.std(ddof=1) / singles.mean() < 0.02
    assert result.coincidence[4] > 1.1
    eta = window_dilution(200.0, scan.histogram.window_ns)
    measured = visibility(zip(result.coordinate(), result.coincidence), fringe_period(geometry))
    assert measured < 1.0 / 3.0
    assert measured == pytest.approx(eta / (2.0 + eta), abs=0.08)


@pytest.mark.slow
def test_engines_agree_on_common_grid(geometry):
    positions = scan_grid(-5e-3, 5e-3, 11)
    analytic = run_scan(geometry, ThermalSource(), ScanConfig(positions=positions)).coincidence

    speckle_scan = ScanConfig(positions=positions, engine="speckle_mc", realizations=20_000, workers=4)
    speckle = run_scan(geometry, ThermalSource(), speckle_scan)
    assert np.sum(np.abs(speckle.coincidence - analytic) >= 3 * speckle.coincidence_error) <= 1

    event_scan = ScanConfig(
        positions=positions,
        engine="event_mc",
        seconds_per_point=0.3,
        workers=4,
        detectors=(DetectorConfig(2e5), DetectorConfig(2e5)),
    )
    event = run_scan(geometry, ThermalSource(), event_scan)
    # windowed coincidences keep only the diluted excess over background
    eta = window_dilution(200.0, event_scan.histogram.window_ns)
    excess = event.coincidence - 1.0
    assert np.sum(np.abs(excess - eta * (analytic - 1.0)) >= 3 * event.coincidence_error) <= 1


def test_scan_publishes_progress_events(geometry):
    scan = ScanConfig(positions=FIVE, engine="speckle_mc", realizations=500, workers=2)

    async def run():
        bus = EventBus()
        seen = []

        async def listen():
            async for ev in bus.subscribe():
                seen.append(ev)

        task = asyncio.create_task(listen())
        await bus.wait_for_subscribers()
        result = await run_scan_async(geometry, ThermalSource(), scan, bus=bus)
        await bus.close()
        await task
        return result, seen

    result, seen = asyncio.run(run())
    types = [ev["type"] for ev in seen]
    assert types[0] == "scan.started" and types[-1] == "scan.finished"
    assert types.count("scan.point") == len(result) == 5
    assert sorted(ev["index"] for ev in seen if ev["type"] == "scan.point") == list(range(5))
    assert seen[-2]["done"] == 5
