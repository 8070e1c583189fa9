"""Curve-shortening flow on the flat torus.

Each step moves vertices by a turning-weighted arclength second difference
of position, solved semi-implicitly as a cyclic tridiagonal system.  Curves are
periodically resampled to uniform arclength in the universal cover so the
closure vector never changes.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .curves import (
    DiagnosticSample,
    DiscreteCurve,
    FlowDiagnostics,
    RefinementRequired,
    _average_phase,
    _moment_norm,
    maslov,
    resample,
    swept_area,
)

logger = logging.getLogger(__name__)

__all__ = ["FlowConfig", "FlowResult", "ResampleRequired", "mcf_step", "run_flow"]

CONVERGED = "converged_to_line"
SINGULAR = "singular"
TIMEOUT = "timeout"
MIN_FACTOR = 1e-3


class ResampleRequired(ValueError):
    """An edge has collapsed below the degeneracy guard."""


@dataclass(frozen=True)
class FlowConfig:
    step_safety: float = 1.0
    resample_every: int = 10
    max_time: float = 10.0
    convergence_phase_spread: float = 1e-3
    min_edge_fraction: float = 0.05
    moment_tol: float = 1e-6
    # a curve whose length falls below this fraction of its initial length is singular
    singular_length_fraction: float = 1e-3
    implicit: bool = True
    # largest swept area per unit time accepted from one step (gradeable curves)
    flux_rate_tol: float = 1e-5

    def __post_init__(self):
        if not 0 < self.step_safety <= 1:
            raise ValueError("step_safety must lie in (0, 1]")
        if self.resample_every < 1:
            raise ValueError("resample_every must be >= 1")
        for name in ("max_time", "convergence_phase_spread", "min_edge_fraction",
                     "moment_tol", "singular_length_fraction", "flux_rate_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class FlowResult:
    status: str
    final_curve: DiscreteCurve
    line_class: tuple[int, int] | None
    diagnostics: FlowDiagnostics
    time: float = 0.0
    steps: int = 0
    warnings: list[str] = field(default_factory=list)
    # steps retried with a smaller dt by the swept-area error control
    rejected_steps: int = 0

    def summary(self) -> dict:
        last = self.diagnostics.samples[-1]
        return {
            "status": self.status,
            "line_class": list(self.line_class) if self.line_class else None,
            "time": self.time,
            "steps": self.steps,
            "rejected_steps": self.rejected_steps,
            "initial_length": self.diagnostics.samples[0].length,
            "final_length": last.length,
            "phase_mean": last.phase_mean,
            "phase_spread": last.phase_spread,
            "moment_norm": last.moment_norm,
            "cumulative_flux": last.cumulative_flux,
            "warnings": list(self.warnings),
        }


def _solve_cyclic(lower, diag, upper, rhs):
    """Solve a cyclic tridiagonal system (Sherman-Morrison on a banded solve).

    Row k reads ``lower[k] x[k-1] + diag[k] x[k] + upper[k] x[k+1]`` with
    indices taken mod n.  ``rhs`` may have several columns.
    """
    n = len(diag)
    gamma = -diag[0]
    beta = lower[0]  # coefficient of x[n-1] in row 0
    alpha = upper[-1]  # coefficient of x[0] in row n-1
    ab = np.zeros((3, n))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[1, 0] -= gamma
    ab[1, -1] -= alpha * beta / gamma
    ab[2, :-1] = lower[1:]
    u = np.zeros(n)
    u[0] = gamma
    u[-1] = alpha
    sol = solve_banded((1, 1), ab, np.column_stack([rhs, u]))
    x, z = sol[:, :-1], sol[:, -1]
    factor = (x[0] + beta * x[-1] / gamma) / (1 + z[0] + beta * z[-1] / gamma)
    return x - np.outer(z, factor)


def _tau_over_sin(x):
    out = np.ones_like(x)
    nz = np.abs(x) > 1e-8
    out[nz] = x[nz] / np.sin(x[nz])
    return out


def _weights(curve: DiscreteCurve):
    """Couplings to the previous and next vertex.

    The plain arclength second difference is scaled at each vertex by
    ``turn / sin(turn)``.  The swept-area rate of the semi-discrete flow is
    then the total turning, which vanishes for Maslov zero, so the scheme is
    exactly hamiltonian as dt -> 0.
    """
    h = curve.edge_lengths
    h_prev = np.roll(h, 1)
    turn = curve.theta_lift - np.roll(curve.theta_lift, 1)
    turn[0] = (turn[0] + np.pi) % (2 * np.pi) - np.pi
    c = 2.0 / (h_prev + h) * _tau_over_sin(turn)
    return c / h_prev, c / h


def _neighbours(x, shift):
    nxt = np.roll(x, -1, axis=0)
    nxt[-1] = x[0] + shift
    prv = np.roll(x, 1, axis=0)
    prv[0] = x[-1] - shift
    return prv, nxt


def _theta_solve(x, shift, a, b, dt, theta):
    prv, nxt = _neighbours(x, shift)
    lap = a[:, None] * (prv - x) + b[:, None] * (nxt - x)
    lower, upper = -theta * dt * a, -theta * dt * b
    rhs = x + (1 - theta) * dt * lap
    rhs[0] += lower[0] * shift
    rhs[-1] -= upper[-1] * shift
    return _solve_cyclic(lower, 1.0 - lower - upper, upper, rhs)


def mcf_step(curve: DiscreteCurve, dt: float, implicit: bool = True,
             min_edge_fraction: float | None = None) -> DiscreteCurve:
    """One curve-shortening step of size ``dt``.

    The velocity at vertex k is the weighted arclength second difference
    ``w_k * 2/(h_{k-1}+h_k) * ((x_{k+1}-x_k)/h_k - (x_k-x_{k-1})/h_{k-1})``.
    The implicit step is Crank-Nicolson with weights re-evaluated at the
    predicted midpoint, second order in time; the explicit step is forward
    Euler.
    """
    h = curve.edge_lengths
    if min_edge_fraction is not None and h.min() < min_edge_fraction * h.mean():
        raise ResampleRequired("resample required: degenerate edge")
    x = curve.vertices
    shift = curve.geometry.translation(*curve.closure)
    a, b = _weights(curve)
    if not implicit:
        if dt > 0.25 * h.min() ** 2:
            raise ValueError("explicit step violates dt <= h_min^2 / 4")
        prv, nxt = _neighbours(x, shift)
        return curve.with_vertices(x + dt * (a[:, None] * (prv - x) + b[:, None] * (nxt - x)))
    pred = _theta_solve(x, shift, a, b, dt, 0.5)
    a, b = _weights(curve.with_vertices(0.5 * (x + pred)))
    return curve.with_vertices(_theta_solve(x, shift, a, b, dt, 0.5))


def _diagnose(curve: DiscreteCurve, gradeable: bool, t: float, cum_flux: float) -> DiagnosticSample:
    lift = curve.theta_lift
    lengths = curve.edge_lengths
    if gradeable:
        phi = _average_phase(curve)
    else:
        phi = float(np.dot(lengths, lift) / lengths.sum())
    return DiagnosticSample(
        time=t,
        length=float(lengths.sum()),
        phase_mean=phi,
        phase_spread=float(lift.max() - lift.min()),
        moment_norm=_moment_norm(curve, phi),
        cumulative_flux=cum_flux,
    )


def _embedded(curve: DiscreteCurve) -> bool:
    from .surgery import self_crossings

    return not self_crossings(curve)


def run_flow(curve: DiscreteCurve, config: FlowConfig = FlowConfig(), observer=None) -> FlowResult:
    """Flow until the curve is a straight line, collapses, or time runs out.

    ``observer(t, curve)`` is called on the initial curve and after every
    accepted step.
    """
    warnings: list[str] = []
    closure = curve.closure
    gradeable = closure != (0, 0) and maslov(curve) == 0
    if not gradeable:
        warnings.append("curve is not gradeable (Maslov class or homology zero); no convergence claim")
    if not _embedded(curve):
        warnings.append("initial curve is not embedded")
    if gradeable:
        phi = _average_phase(curve)
        if np.max(np.abs(curve.theta_lift - phi)) >= 0.5 * math.pi:
            warnings.append("phase excursion beyond pi/2 from the average phase")
    for w in warnings:
        logger.warning(w)

    diag = FlowDiagnostics()
    t, steps, cum_flux = 0.0, 0, 0.0
    factor, rejected = 1.0, 0
    sample = _diagnose(curve, gradeable, t, cum_flux)
    diag.append(sample)
    initial_length = sample.length
    if observer is not None:
        observer(t, curve)

    def result(status):
        line_class = closure if status == CONVERGED else None
        return FlowResult(status, curve, line_class, diag, t, steps, warnings, rejected)

    while True:
        if (gradeable and sample.phase_spread < config.convergence_phase_spread
                and sample.moment_norm < config.moment_tol):
            return result(CONVERGED)
        if sample.length < config.singular_length_fraction * initial_length:
            return result(SINGULAR)
        if t >= config.max_time:
            return result(TIMEOUT)
        h_min = float(curve.edge_lengths.min())
        dt = config.step_safety * h_min * h_min * factor
        try:
            new = mcf_step(curve, dt, config.implicit, config.min_edge_fraction)
        except ResampleRequired:
            fixed = resample(curve, area_neutral=True)
            if fixed.edge_lengths.min() < config.min_edge_fraction * fixed.edge_lengths.mean():
                return result(SINGULAR)
            cum_flux += swept_area(curve, fixed)
            curve = fixed
            continue
        except RefinementRequired:
            return result(SINGULAR)
        area = swept_area(curve, new)
        # the semi-discrete flow sweeps no area, so a step's area is its error
        if gradeable and abs(area) > config.flux_rate_tol * dt and factor > MIN_FACTOR:
            factor *= 0.5
            rejected += 1
            continue
        factor = min(1.0, 1.5 * factor)
        cum_flux += area
        steps += 1
        t += dt
        if steps % config.resample_every == 0:
            try:
                fixed = resample(new, area_neutral=True)
            except RefinementRequired:
                fixed = new
            cum_flux += swept_area(new, fixed)
            new = fixed
        curve = new
        sample = _diagnose(curve, gradeable, t, cum_flux)
        diag.append(sample)
        if observer is not None:
            observer(t, curve)
