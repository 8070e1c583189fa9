"""Closed polygonal curves on the flat torus and their phase diagnostics.

Curves are stored in the universal cover: vertices ``v_0 .. v_{N-1}`` plus an
integer closure vector ``(p, q)``.  Edge ``k`` runs from ``v_k`` to
``v_{k+1}`` with ``v_N = v_0 + p*b_1 + q*b_2``, so there are N edges and the
homology class is exact integer data.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .torus import STANDARD, TorusCY, omega_integral, principal_arg

__all__ = [
    "RefinementRequired",
    "NotGradeable",
    "DiscreteCurve",
    "FlowDiagnostics",
    "DiagnosticSample",
    "theta_lift_compute",
    "maslov",
    "average_phase",
    "moment_norm",
    "weighted_metric",
    "swept_area",
    "flux",
    "resample",
    "line",
    "perturbed_line",
    "circle",
]

CLOSURE_TOL = 1e-12
HALF_PI = 0.5 * math.pi


class RefinementRequired(ValueError):
    """A tangent turn of pi/2 or more makes the phase lift ambiguous."""


class NotGradeable(ValueError):
    """The curve has non-zero Maslov class (or zero homology)."""


def _wrap(x):
    """Wrap angles to (-pi, pi]."""
    return np.pi - np.mod(np.pi - x, 2 * np.pi)


def _edges(vertices: np.ndarray, closure, geometry: TorusCY) -> np.ndarray:
    nxt = np.roll(vertices, -1, axis=0)
    nxt[-1] = vertices[0] + geometry.translation(*closure)
    return nxt - vertices


def _turns(angles: np.ndarray) -> np.ndarray:
    """Turn from edge k to edge k+1 (cyclic), wrapped to (-pi, pi]."""
    return _wrap(np.roll(angles, -1) - angles)


def theta_lift_compute(vertices, closure, geometry: TorusCY = STANDARD, lift_index: int = 0) -> np.ndarray:
    """Continuous lift of the tangent phase, one value per edge.

    The first value lies in (-pi, pi] (plus ``2*pi*lift_index``).  Raises
    RefinementRequired if any turn, including the closing one, reaches pi/2.
    """
    v = np.asarray(vertices, dtype=float)
    e = _edges(v, closure, geometry)
    lengths = np.hypot(e[:, 0], e[:, 1])
    if np.any(lengths <= 0):
        raise ValueError("curve has a zero-length edge")
    angles = np.arctan2(e[:, 1], e[:, 0]) - geometry.alpha
    turns = _turns(angles)
    bad = np.flatnonzero(np.abs(turns) >= HALF_PI)
    if bad.size:
        k = int(bad[0])
        raise RefinementRequired(
            f"refinement required: turn {turns[k]:.6g} rad after edge {k} is not below pi/2"
        )
    first = float(_wrap(angles[0]))
    lift = np.empty_like(angles)
    lift[0] = first + 2 * math.pi * lift_index
    lift[1:] = lift[0] + np.cumsum(turns[:-1])
    return lift


class DiscreteCurve:
    """A graded closed polygon on the torus.

    ``lift_index`` selects the grading: the first theta value lies in
    ``(-pi, pi] + 2*pi*lift_index``.
    """

    def __init__(self, vertices, closure, geometry: TorusCY = STANDARD, holonomy=None, lift_index: int = 0):
        v = np.array(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2:
            raise ValueError("vertices must be an (N, 2) array")
        p, q = (int(c) for c in closure)
        if (p, q) != tuple(closure):
            raise ValueError("closure must be an integer vector")
        shift = geometry.translation(p, q)
        # tolerate an explicitly repeated closing vertex
        if len(v) > 3 and np.linalg.norm(v[-1] - (v[0] + shift)) <= CLOSURE_TOL:
            v = v[:-1]
        if len(v) < 3:
            raise ValueError("a curve needs at least 3 vertices")
        if holonomy is not None:
            holonomy = float(holonomy) % (2 * math.pi)
        v.setflags(write=False)
        self.vertices = v
        self.closure = (p, q)
        self.geometry = geometry
        self.holonomy = holonomy
        self.lift_index = int(lift_index)
        lift = theta_lift_compute(v, self.closure, geometry, self.lift_index)
        lift.setflags(write=False)
        self.theta_lift = lift

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def edges(self) -> np.ndarray:
        return _edges(self.vertices, self.closure, self.geometry)

    @property
    def edge_lengths(self) -> np.ndarray:
        e = self.edges
        return np.hypot(e[:, 0], e[:, 1])

    @property
    def length(self) -> float:
        return float(self.edge_lengths.sum())

    @property
    def end(self) -> np.ndarray:
        """``v_N``, the lift of the first vertex one period later."""
        return self.vertices[0] + self.geometry.translation(*self.closure)

    def closed_vertices(self) -> np.ndarray:
        return np.vstack([self.vertices, self.end])

    def with_vertices(self, vertices, lift_like: "DiscreteCurve | None" = None) -> "DiscreteCurve":
        """New curve with the same closure, geometry and holonomy.

        The grading is chosen so that the first theta value stays closest to
        ``lift_like``'s (default: this curve's).
        """
        ref = self if lift_like is None else lift_like
        new = DiscreteCurve(vertices, self.closure, self.geometry, self.holonomy, 0)
        k = round((ref.theta_lift[0] - new.theta_lift[0]) / (2 * math.pi))
        return new.regraded(k) if k else new

    def regraded(self, lift_index: int) -> "DiscreteCurve":
        return DiscreteCurve(self.vertices, self.closure, self.geometry, self.holonomy, lift_index)

    def shifted(self, m: int) -> "DiscreteCurve":
        """Grading shift ``[m]``: theta + m*pi; odd m reverses orientation."""
        if m % 2 == 0:
            return self.regraded(self.lift_index + m // 2)
        end = self.end
        rev = np.vstack([end[None, :], self.vertices[:0:-1]])
        # reversed edge k' runs backwards along old edge N-1-k'
        closure = (-self.closure[0], -self.closure[1])
        new = DiscreteCurve(rev, closure, self.geometry, self.holonomy, 0)
        target = self.theta_lift[-1] + m * math.pi
        k = round((target - new.theta_lift[0]) / (2 * math.pi))
        return new.regraded(k)

    def maslov(self) -> int:
        return maslov(self)

    def to_json(self) -> dict:
        out = {
            "vertices": self.vertices.tolist(),
            "closure": list(self.closure),
            "holonomy": self.holonomy,
            "geometry": self.geometry.to_json(),
        }
        if self.lift_index:
            out["lift_index"] = self.lift_index
        return out

    @classmethod
    def from_json(cls, data: dict) -> "DiscreteCurve":
        try:
            geometry = TorusCY.from_json(data.get("geometry", {}))
            return cls(
                data["vertices"],
                data["closure"],
                geometry,
                data.get("holonomy"),
                data.get("lift_index", 0),
            )
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed curve JSON: {exc}") from exc

    def __repr__(self):
        return f"DiscreteCurve(n={self.n}, closure={self.closure}, lift_index={self.lift_index})"


def maslov(curve: DiscreteCurve) -> int:
    """Winding number of the tangent phase around the curve."""
    lift = curve.theta_lift
    angles = lift - lift[0]
    closing = _wrap(angles[0] - angles[-1])
    total = (lift[-1] - lift[0] + closing) / (2 * math.pi)
    k = round(total)
    if abs(total - k) > 1e-9:
        raise ArithmeticError(f"non-integral winding {total!r}")
    return int(k)


def _require_gradeable(curve: DiscreteCurve) -> None:
    if curve.closure == (0, 0):
        raise NotGradeable("null-homologous curve has no average phase")
    if maslov(curve) != 0:
        raise NotGradeable(f"Maslov class {maslov(curve)} is not zero; phase is not gradeable")


def _average_phase(curve: DiscreteCurve) -> float:
    base = principal_arg(omega_integral(curve.closure, curve.geometry))
    lengths = curve.edge_lengths
    ref = float(np.dot(lengths, curve.theta_lift) / lengths.sum())
    return base + 2 * math.pi * round((ref - base) / (2 * math.pi))


def average_phase(curve: DiscreteCurve) -> float:
    """Lifted argument of the integral of the holomorphic form over the curve.

    The lift is the one closest to the arclength-weighted mean of the
    pointwise phase, which fixes it inside the grading window.
    """
    _require_gradeable(curve)
    return _average_phase(curve)


def _moment_norm(curve: DiscreteCurve, phi: float) -> float:
    s = np.sin(curve.theta_lift - phi)
    return float(np.dot(s * s, curve.edge_lengths))


def moment_norm(curve: DiscreteCurve) -> float:
    """Sum over edges of ``sin(theta - phi)**2 * length``."""
    return _moment_norm(curve, average_phase(curve))


def weighted_metric(curve: DiscreteCurve, a, b) -> float:
    """``sum cos(theta - phi) * a * b * length`` with a, b sampled per edge."""
    phi = average_phase(curve)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != (curve.n,) or b.shape != (curve.n,):
        raise ValueError("a and b must have one value per edge")
    w = np.cos(curve.theta_lift - phi) * curve.edge_lengths
    # a * b first so the value is exactly symmetric
    return float(np.sum(w * (a * b)))


def _shoelace(points: np.ndarray) -> float:
    x, y = points[:, 0], points[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def swept_area(c0: DiscreteCurve, c1: DiscreteCurve) -> float:
    """Signed symplectic area swept going from ``c0`` to ``c1``.

    Both lifts must lie in the same class.  The region between them in the
    universal cover is closed up by ``c0`` forwards and ``c1`` backwards; its
    signed area does not depend on where either curve starts, and equals the
    sum of the quadrilaterals traced by corresponding edges.
    """
    if c0.closure != c1.closure:
        raise ValueError("curves lie in different homology classes")
    loop = np.vstack([c0.closed_vertices(), c1.closed_vertices()[::-1]])
    # centre to limit cancellation
    centre = loop.mean(axis=0)
    return _shoelace(loop - centre)


def flux(history) -> float:
    """Total flux of a vertexwise-corresponding history of curves."""
    history = list(history)
    if not history:
        return 0.0
    n, closure = history[0].n, history[0].closure
    for c in history[1:]:
        if c.n != n or c.closure != closure:
            raise ValueError("correspondence mismatch: curves differ in size or class")
    return float(sum(swept_area(a, b) for a, b in zip(history, history[1:])))


def resample(curve: DiscreteCurve, n: int | None = None, area_neutral: bool = False) -> DiscreteCurve:
    """Uniform arclength resampling, keeping the first vertex fixed.

    Chords cut corners, so the new polygon sweeps a small area against the
    old one.  With ``area_neutral`` the result is translated normal to the
    closure vector to cancel that area exactly (a translation by d sweeps
    ``d x T``); the first vertex then moves by a distance of that order.
    """
    n = curve.n if n is None else int(n)
    pts = curve.closed_vertices()
    seg = curve.edge_lengths
    s = np.concatenate([[0.0], np.cumsum(seg)])
    targets = np.arange(n) * (s[-1] / n)
    x = np.interp(targets, s, pts[:, 0])
    y = np.interp(targets, s, pts[:, 1])
    out = curve.with_vertices(np.column_stack([x, y]))
    if area_neutral and curve.closure != (0, 0):
        T = curve.geometry.translation(*curve.closure)
        normal = np.array([-T[1], T[0]]) / float(np.hypot(*T))
        unit = swept_area(out, out.with_vertices(out.vertices + normal))
        out = out.with_vertices(out.vertices - (swept_area(curve, out) / unit) * normal)
    return out


def line(p: int, q: int, n: int = 64, geometry: TorusCY = STANDARD, origin=(0.0, 0.0),
         lift_index: int = 0, holonomy=None) -> DiscreteCurve:
    """Straight closed geodesic in class ``(p, q)`` with n equal edges."""
    t = np.arange(n)[:, None] / n
    v = np.asarray(origin, dtype=float) + t * geometry.translation(p, q)
    return DiscreteCurve(v, (p, q), geometry, holonomy, lift_index)


def perturbed_line(p: int, q: int, n: int, amplitude: float, rng: np.random.Generator,
                   modes: int = 4, geometry: TorusCY = STANDARD, origin=(0.0, 0.0)) -> DiscreteCurve:
    """Line plus a random smooth normal graph of sup-norm ``amplitude``.

    The displacement is a random trigonometric polynomial with ``modes``
    harmonics, so the curve stays a graph over the line (Maslov zero) as long
    as its slope is moderate.
    """
    T = geometry.translation(p, q)
    L = float(np.hypot(*T))
    tangent = T / L
    normal = np.array([-tangent[1], tangent[0]])
    s = np.arange(n) / n
    coef = rng.standard_normal((modes, 2))
    f = np.zeros(n)
    for j in range(1, modes + 1):
        a, b = coef[j - 1]
        f += a * np.cos(2 * np.pi * j * s) + b * np.sin(2 * np.pi * j * s)
    f *= amplitude / np.max(np.abs(f))
    v = np.asarray(origin, dtype=float) + s[:, None] * T + f[:, None] * normal
    return DiscreteCurve(v, (p, q), geometry)


def circle(radius: float, n: int = 64, center=(0.5, 0.5), geometry: TorusCY = STANDARD) -> DiscreteCurve:
    """Regular n-gon inscribed in a circle, counterclockwise, class (0, 0)."""
    t = 2 * np.pi * np.arange(n) / n
    v = np.asarray(center, dtype=float) + radius * np.column_stack([np.cos(t), np.sin(t)])
    return DiscreteCurve(v, (0, 0), geometry)


@dataclass(frozen=True)
class DiagnosticSample:
    time: float
    length: float
    phase_mean: float
    phase_spread: float
    moment_norm: float
    cumulative_flux: float


CSV_HEADER = ("time", "length", "phase_mean", "phase_spread", "moment_norm", "cumulative_flux")


@dataclass
class FlowDiagnostics:
    samples: list[DiagnosticSample] = field(default_factory=list)

    def append(self, sample: DiagnosticSample) -> None:
        if self.samples and not sample.time > self.samples[-1].time:
            raise ValueError("diagnostic times must be strictly increasing")
        self.samples.append(sample)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.samples])

    def __len__(self):
        return len(self.samples)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for s in self.samples:
            w.writerow([format(getattr(s, h), ".17g") for h in CSV_HEADER])
        return buf.getvalue()
