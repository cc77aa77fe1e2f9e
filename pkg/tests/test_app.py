from __future__ import annotations

import logging

import pytest

from twophoton.app import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main
from twophoton.coincidence import read_histogram_csv
from twophoton.optics import Geometry
from twophoton.scan import fit_pattern, read_scan_csv, read_yaml_block


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    for name in ("TWOPHOTON_CONFIG", "TWOPHOTON_SEED", "TWOPHOTON_OUT"):
        monkeypatch.delenv(name, raising=False)


def _run(tmp_path, *args: str) -> int:
    return main([*args, "--out", str(tmp_path)])


def test_analytic_writes_three_patterns(tmp_path):
    assert _run(tmp_path, "analytic", "--seed", "7") == EXIT_OK
    thermal = read_scan_csv(tmp_path / "thermal.csv")
    spdc = read_scan_csv(tmp_path / "spdc.csv")
    assert len(thermal) == 601
    assert thermal.coincidence.max() == pytest.approx(2.0)
    assert thermal.coincidence.min() >= 1.0
    assert spdc.kind == "spdc" and spdc.coincidence.max() == pytest.approx(1.0)

    fit = fit_pattern(thermal, None, Geometry())
    assert fit.a_fit == pytest.approx(0.043e-3, rel=1e-3)
    assert fit.d_fit == pytest.approx(0.135e-3, rel=1e-3)

    lines = (tmp_path / "first_order.csv").read_text().splitlines()
    assert lines[0] == "# twophoton analytic"
    assert lines[1] == "# seed=7"
    assert "x,intensity" in lines


def test_outputs_carry_seed_and_resolved_config(tmp_path):
    assert _run(tmp_path, "analytic", "--seed", "0x2a", "--geometry.z", "2.0") == EXIT_OK
    text = (tmp_path / "thermal.csv").read_text()
    assert "# seed=42" in text
    assert "# resolved config:" in text
    assert "#     z: 2.0" in text


@pytest.mark.parametrize(
    "args",
    [
        ["analytic", "--geometry.d"],
        ["analytic", "--geometry.a", "0.2e-3"],
        ["analytic", "--geometry.slit_widht", "1.0"],
        ["analytic", "stray"],
        ["speckle", "--source.kind", "coherent"],
        ["scan", "--source.kind", "spdc", "--scan.engine", "speckle_mc"],
        ["interfere"],
    ],
)
def test_configuration_errors_exit_one(tmp_path, args):
    assert _run(tmp_path, *args) == EXIT_CONFIG


def test_unwritable_output_exits_two(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["analytic", "--out", str(blocker / "sub")]) == EXIT_RUNTIME


def test_speckle_output_is_reproducible(tmp_path):
    args = ["speckle", "--seed", "5", "--speckle.realizations", "2000", "--speckle.positions.num", "5"]
    assert _run(tmp_path, *args) == EXIT_OK
    first = (tmp_path / "speckle.csv").read_bytes()
    assert _run(tmp_path, *args, "--speckle.workers", "1") == EXIT_OK
    assert (tmp_path / "speckle.csv").read_bytes() == first
    header = [line for line in first.decode().splitlines() if not line.startswith("#")][0]
    assert header == "x1,x2,u,value,std_error,n_realizations,closed_form"


def test_thermal_scan_report(tmp_path):
    assert _run(tmp_path, "scan") == EXIT_OK
    report = read_yaml_block(tmp_path / "report.yaml")
    assert report["visibility_data"] == pytest.approx(1.0 / 3.0, abs=1e-6)
    assert report["visibility_fit"] == pytest.approx(1.0 / 3.0, abs=1e-4)
    assert report["resolution"]["ratio"] == pytest.approx(0.5, abs=1e-6)
    fit = read_yaml_block(tmp_path / "fit.yaml")
    assert fit["converged"] is True
    assert fit["d_fit"] == pytest.approx(0.135e-3, rel=1e-6)


def test_spdc_scan_report(tmp_path):
    assert _run(tmp_path, "scan", "--source.kind", "spdc") == EXIT_OK
    report = read_yaml_block(tmp_path / "report.yaml")
    assert report["coordinate"] == "x1 + x2"
    assert report["visibility_data"] == pytest.approx(1.0, abs=1e-6)


def test_degenerate_spdc_scan_reports_null_visibility(tmp_path, caplog):
    with caplog.at_level(logging.WARNING, logger="twophoton.app"):
        assert _run(tmp_path, "scan", "--source.kind", "spdc", "--scan.mode", "antisymmetric") == EXIT_OK
    report = read_yaml_block(tmp_path / "report.yaml")
    assert report["visibility_data"] is None
    assert "visibility_fit" not in report
    assert any("visibility not available" in r.getMessage() for r in caplog.records)


def test_hbt_coherent_light_is_flat(tmp_path):
    assert _run(tmp_path, "hbt", "--source.kind", "coherent", "--hbt.duration_s", "2") == EXIT_OK
    summary = read_yaml_block(tmp_path / "hbt_summary.yaml")
    assert summary["windowed_g2"] == pytest.approx(1.0, abs=0.15)
    assert "tau_c_fit_ns" not in summary
    assert (tmp_path / "histogram.csv").read_text().startswith("# config channel_width=0.3 ")


def test_hbt_spdc_peak_and_event_files(tmp_path):
    args = ["hbt", "--source.kind", "spdc", "--hbt.duration_s", "1", "--hbt.write_events", "true"]
    assert _run(tmp_path, *args) == EXIT_OK
    summary = read_yaml_block(tmp_path / "hbt_summary.yaml")
    assert summary["net"] == pytest.approx(1000.0, abs=250.0)
    hist = read_histogram_csv(tmp_path / "histogram.csv")
    assert hist.count_at(0.0) >= 900
    assert (tmp_path / "events_d1.txt").read_text().startswith("# detector=D1 duration_ns=1000000000\n")


@pytest.mark.slow
def test_hbt_thermal_bunching(tmp_path):
    args = [
        "hbt",
        "--hbt.duration_s", "1",
        "--detectors.d1.mean_rate", "2e5",
        "--detectors.d2.mean_rate", "2e5",
    ]
    assert _run(tmp_path, *args) == EXIT_OK
    summary = read_yaml_block(tmp_path / "hbt_summary.yaml")
    assert 1.9 <= summary["g2_zero"] <= 2.1
    assert summary["tau_c_fit_ns"] == pytest.approx(200.0, rel=0.15)
    assert summary["windowed_g2"] == pytest.approx(summary["expected_windowed_g2"], abs=0.03)
