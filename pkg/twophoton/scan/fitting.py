"""Fit of background + amplitude·sinc²(πau/λz)·cos²(πdu/λz) to scan data.

λ and z stay fixed. A coarse (a, d) grid with the linear parameters solved
exactly per cell picks the basin; Gauss–Newton with Armijo backtracking then
refines all four parameters.
"""

from __future__ import annotations

import logging
from typing import Optional, Tuple

import numpy as np

from ..errors import ConfigError, InsufficientSpanError, PreconditionError
from ..optics.geometry import Geometry
from ..optics.patterns import fringe_period
from .results import FitResult, ResolutionReport, ScanResult

log = logging.getLogger(__name__)

MIN_FIT_POINTS = 8
GRID_CELLS = 31
GRID_SPAN = 0.30
MAX_ITERATIONS = 200
STEP_TOL = 1e-10
# accepted when the line search gives up but the full step is already tiny
STALL_TOL = 1e-8
ARMIJO_C1 = 1e-4
MIN_STEP_LENGTH = 1e-12


class _Model:
    """Pattern model in scaled parameters p = [A, B, a/a0, d/d0]."""

    def __init__(self, u: np.ndarray, a0: float, d0: float, scale: float) -> None:
        self.v = u / scale  # u/λz
        self.a0 = a0
        self.d0 = d0

    def parts(self, p: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        a = p[2] * self.a0
        d = p[3] * self.d0
        s = a * self.v
        sinc = np.sinc(s)
        with np.errstate(divide="ignore", invalid="ignore"):
            dsinc = np.where(s == 0.0, 0.0, (np.cos(np.pi * s) - sinc) / s)
        phase = np.pi * d * self.v
        envelope = sinc ** 2
        fringe = np.cos(phase) ** 2
        d_envelope = 2.0 * sinc * dsinc * self.v * self.a0
        d_fringe = -np.sin(2.0 * phase) * np.pi * self.v * self.d0
        return envelope, fringe, d_envelope, d_fringe

    def value(self, p: np.ndarray) -> np.ndarray:
        envelope, fringe, _, _ = self.parts(p)
        return p[1] + p[0] * envelope * fringe

    def jacobian(self, p: np.ndarray) -> np.ndarray:
        envelope, fringe, d_envelope, d_fringe = self.parts(p)
        return np.column_stack(
            [envelope * fringe, np.ones_like(envelope), p[0] * d_envelope * fringe, p[0] * envelope * d_fringe]
        )


def _coarse_grid(model: _Model, y: np.ndarray) -> np.ndarray:
    """Best [A, B, α, δ] over the grid, linear parameters by least squares per cell."""
    factors = np.linspace(1.0 - GRID_SPAN, 1.0 + GRID_SPAN, GRID_CELLS)
    env = np.sinc(factors[:, None] * model.a0 * model.v[None, :]) ** 2
    fr = np.cos(np.pi * factors[:, None] * model.d0 * model.v[None, :]) ** 2
    f = env[:, None, :] * fr[None, :, :]
    f_mean = f.mean(axis=-1, keepdims=True)
    y_mean = y.mean()
    fc = f - f_mean
    var = np.sum(fc * fc, axis=-1)
    cov = np.sum(fc * (y - y_mean), axis=-1)
    amp = np.where(var > 0, cov / np.where(var > 0, var, 1.0), 0.0)
    bg = y_mean - amp * f_mean[..., 0]
    sse = np.sum((bg[..., None] + amp[..., None] * f - y) ** 2, axis=-1)
    i, j = np.unravel_index(int(np.argmin(sse)), sse.shape)
    return np.array([amp[i, j], bg[i, j], factors[i], factors[j]])


def _gauss_newton(model: _Model, y: np.ndarray, p0: np.ndarray) -> Tuple[np.ndarray, bool, int]:
    p = p0.copy()
    r = model.value(p) - y
    f = float(r @ r)
    for it in range(1, MAX_ITERATIONS + 1):
        jac = model.jacobian(p)
        step = -np.linalg.lstsq(jac, r, rcond=None)[0]
        full_norm = float(np.linalg.norm(step))
        if full_norm < STEP_TOL:
            return p, True, it
        slope = float(2.0 * (jac.T @ r) @ step)
        alpha = 1.0
        while True:
            trial = p + alpha * step
            r_trial = model.value(trial) - y
            f_trial = float(r_trial @ r_trial)
            if f_trial <= f + ARMIJO_C1 * alpha * slope:
                break
            alpha *= 0.5
            if alpha < MIN_STEP_LENGTH:
                # no decrease left along the Gauss–Newton direction
                return p, full_norm < STALL_TOL, it
        p, r, f = trial, r_trial, f_trial
        if alpha * full_norm < STEP_TOL:
            return p, True, it
    return p, False, MAX_ITERATIONS


def fit_curve(u: np.ndarray, y: np.ndarray, kind: str, geometry_init: Geometry) -> FitResult:
    """Fit the pattern model to samples y(u) starting from ``geometry_init``."""
    u = np.asarray(u, dtype=float)
    y = np.asarray(y, dtype=float)
    if u.shape != y.shape or u.ndim != 1:
        raise ConfigError("fit coordinates and values must be 1-D arrays of equal length")
    if u.size < MIN_FIT_POINTS:
        raise InsufficientSpanError(f"fit needs >= {MIN_FIT_POINTS} points, got {u.size}")
    period = fringe_period(geometry_init)
    if float(np.ptp(u)) < period:
        raise InsufficientSpanError(f"scan spans {np.ptp(u):.4g} m, less than one fringe ({period:.4g} m)")

    model = _Model(u, geometry_init.slit_width, geometry_init.slit_separation, geometry_init.fringe_scale())
    start = _coarse_grid(model, y)
    p, converged, iterations = _gauss_newton(model, y, start)
    residual = model.value(p) - y
    a_fit, d_fit = p[2] * model.a0, p[3] * model.d0
    if converged and not (a_fit > 0 and d_fit > 0):
        converged = False
    if not converged:
        log.warning("pattern fit did not converge after %d iterations", iterations)
    log.debug("fit %s: A=%.6g B=%.6g a=%.6g d=%.6g (%d it)", kind, p[0], p[1], a_fit, d_fit, iterations)
    return FitResult(
        amplitude=float(p[0]),
        background=float(p[1]),
        a_fit=float(a_fit),
        d_fit=float(d_fit),
        residual_rms=float(np.sqrt(np.mean(residual ** 2))),
        converged=bool(converged),
        iterations=int(iterations),
        kind=kind,
        wavelength=geometry_init.wavelength,
        distance=geometry_init.distance,
    )


def fit_pattern(result: ScanResult, kind: Optional[str], geometry_init: Geometry) -> FitResult:
    kind = kind or result.kind
    return fit_curve(result.coordinate(kind), result.coincidence, kind, geometry_init)


def resolution_report(fit_thermal: FitResult, first_order_reference: Geometry) -> ResolutionReport:
    """Antisymmetric-scan fringe period λz/(2·d_fit) against the first-order period λz/d."""
    if not fit_thermal.converged:
        raise PreconditionError("resolution report needs a converged fit")
    two_photon = fit_thermal.wavelength * fit_thermal.distance / (2.0 * fit_thermal.d_fit)
    first_order = fringe_period(first_order_reference)
    return ResolutionReport(
        period_two_photon=float(two_photon),
        period_first_order=float(first_order),
        ratio=float(two_photon / first_order),
        kind=fit_thermal.kind,
    )
