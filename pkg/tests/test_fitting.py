from __future__ import annotations

import numpy as np
import pytest

from twophoton.errors import ConfigError, InsufficientSpanError, PreconditionError
from twophoton.events import DetectorConfig
from twophoton.optics import Geometry, SpdcSource, ThermalSource
from twophoton.scan import (
    FitResult,
    ScanConfig,
    fit_curve,
    fit_pattern,
    read_scan_csv,
    read_yaml_block,
    resolution_report,
    run_scan,
    scan_grid,
    write_scan_csv,
    write_yaml_block,
)

U = np.linspace(-15e-3, 15e-3, 601)


def _truth(geometry: Geometry, amplitude: float = 1.0, background: float = 1.0) -> FitResult:
    return FitResult(amplitude, background, geometry.a, geometry.d, 0.0, True)


def test_noiseless_pattern_is_recovered(geometry):
    fit = fit_curve(U, _truth(geometry).evaluate(U), "thermal", geometry)
    assert fit.converged
    assert fit.a_fit == pytest.approx(geometry.a, rel=1e-3)
    assert fit.d_fit == pytest.approx(geometry.d, rel=1e-3)
    assert fit.amplitude == pytest.approx(1.0, rel=1e-3)
    assert fit.background == pytest.approx(1.0, rel=1e-3)
    assert fit.residual_rms < 1e-9


def test_recovery_from_offset_start(geometry):
    start = geometry.replace(slit_width=0.9 * geometry.a, slit_separation=1.1 * geometry.d)
    fit = fit_curve(U, _truth(geometry).evaluate(U), "thermal", start)
    assert fit.converged
    assert fit.a_fit == pytest.approx(geometry.a, rel=1e-3)
    assert fit.d_fit == pytest.approx(geometry.d, rel=1e-3)


def test_noisy_pattern_is_recovered(geometry):
    rng = np.random.default_rng(17)
    clean = _truth(geometry).evaluate(U)
    fit = fit_curve(U, clean * (1.0 + 0.02 * rng.standard_normal(U.size)), "thermal", geometry)
    assert fit.converged
    assert fit.a_fit == pytest.approx(geometry.a, rel=0.02)
    assert fit.d_fit == pytest.approx(geometry.d, rel=0.02)
    assert fit.residual_rms == pytest.approx(0.02 * np.sqrt(np.mean(clean ** 2)), rel=0.2)


def test_constant_data_has_no_amplitude(geometry):
    fit = fit_curve(U, np.full(U.size, 3.0), "thermal", geometry)
    assert fit.amplitude == pytest.approx(0.0, abs=1e-12)
    assert fit.background == pytest.approx(3.0)


def test_refit_of_fitted_curve_is_stable(geometry):
    rng = np.random.default_rng(5)
    noisy = _truth(geometry).evaluate(U) + 0.01 * rng.standard_normal(U.size)
    first = fit_curve(U, noisy, "thermal", geometry)
    second = fit_curve(U, first.evaluate(U), "thermal", geometry)
    for name in ("amplitude", "background", "a_fit", "d_fit"):
        assert getattr(second, name) == pytest.approx(getattr(first, name), rel=1e-8)


def test_fit_preconditions(geometry):
    with pytest.raises(InsufficientSpanError):
        fit_curve(U[:7], np.ones(7), "thermal", geometry)
    narrow = np.linspace(0.0, 1e-3, 50)
    with pytest.raises(InsufficientSpanError):
        fit_curve(narrow, np.ones(50), "thermal", geometry)
    with pytest.raises(ConfigError):
        fit_curve(U, np.ones(10), "thermal", geometry)


def test_antisymmetric_scan_halves_the_period(geometry):
    scan = ScanConfig(mode="antisymmetric", positions=scan_grid(-7.5e-3, 7.5e-3, 301))
    result = run_scan(geometry, ThermalSource(), scan)
    fit = fit_pattern(result, None, geometry)
    report = resolution_report(fit, geometry)
    assert report.ratio == pytest.approx(0.5, abs=1e-9)
    assert report.period_first_order == pytest.approx(geometry.fringe_scale() / geometry.d)


def test_resolution_needs_converged_fit(geometry):
    stalled = FitResult(1.0, 1.0, geometry.a, geometry.d, 0.1, False)
    with pytest.raises(PreconditionError):
        resolution_report(stalled, geometry)


def test_spdc_scan_fit(geometry):
    scan = ScanConfig(positions=scan_grid(-15e-3, 15e-3, 601))
    result = run_scan(geometry, SpdcSource(), scan)
    fit = fit_pattern(result, "spdc", geometry)
    assert fit.kind == "spdc"
    assert fit.amplitude == pytest.approx(1.0, rel=1e-6)
    assert fit.background == pytest.approx(0.0, abs=1e-6)
    assert fit.d_fit == pytest.approx(geometry.d, rel=1e-6)


def test_scan_csv_and_fit_block_round_trip(geometry, tmp_path):
    scan = ScanConfig(mode="fix_D2_scan_D1", positions=scan_grid(-5e-3, 5e-3, 21), fixed_x2=1e-3)
    result = run_scan(geometry, ThermalSource(), scan)
    path = write_scan_csv(result, tmp_path / "scan.csv", ["seed=0"])
    assert path.read_text().splitlines()[0] == "# scan mode=fix_D2_scan_D1 engine=analytic kind=thermal"
    back = read_scan_csv(path)
    assert (back.mode, back.engine, back.kind) == ("fix_D2_scan_D1", "analytic", "thermal")
    assert np.allclose(back.x1, result.x1) and np.allclose(back.x2, 1e-3)
    assert np.allclose(back.coincidence, result.coincidence, rtol=1e-12)

    fit = fit_pattern(result, None, geometry)
    block = read_yaml_block(write_yaml_block(fit.to_dict(), tmp_path / "fit.yaml", ["seed=0"]))
    assert block["converged"] is fit.converged
    assert block["d_fit"] == pytest.approx(fit.d_fit)


@pytest.mark.slow
def test_event_scan_resolution_doubling(geometry):
    # default singles rates leave too few coincidences per point for a 2% period
    detectors = (DetectorConfig(2e5), DetectorConfig(2e5))
    scan = ScanConfig(
        mode="antisymmetric",
        positions=scan_grid(-7.5e-3, 7.5e-3, 31),
        engine="event_mc",
        seconds_per_point=0.3,
        workers=4,
        detectors=detectors,
    )
    result = run_scan(geometry, ThermalSource(), scan)
    fit = fit_pattern(result, None, geometry)
    assert fit.converged
    assert fit.d_fit == pytest.approx(geometry.d, rel=0.02)
    assert resolution_report(fit, geometry).ratio == pytest.approx(0.5, rel=0.02)
