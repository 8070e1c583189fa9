"""Transverse intersections and graded connect sums of torus curves.

At a crossing where the second curve's phase exceeds the first's by less
than pi, the crossing is resolved into two corner branches: one turning
counterclockwise from the first curve onto the second, and its point
reflection turning back.  Each branch is a quadratic Bezier arc whose
control point is the crossing itself, so it is tangent to both curves where
it meets them and its tangent turns monotonically between the two phases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .curves import DiscreteCurve

__all__ = [
    "IntersectionPoint",
    "NeckParameters",
    "ParallelIntersection",
    "GradedSumError",
    "intersections",
    "self_crossings",
    "grading_compatible",
    "connect_sum",
    "connect_sum_components",
    "neck_moduli_dimension",
]

PARAM_TOL = 1e-12


class ParallelIntersection(ValueError):
    """Curves share a segment; clean or parallel intersections are not supported."""


class GradedSumError(ValueError):
    """No graded connect sum exists; ``witness`` is the offending crossing."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


@dataclass(frozen=True)
class IntersectionPoint:
    location: tuple[float, float]
    index_on_each: tuple[int, int]
    crossing_sign: int
    local_phases: tuple[float, float]
    # arclength position along each curve, measured from its first vertex
    arclength: tuple[float, float]
    # lattice vector n with c1-lift point = c2-lift point + n
    lift_offset: tuple[int, int]

    def to_json(self) -> dict:
        return {
            "location": list(self.location),
            "index_on_each": list(self.index_on_each),
            "crossing_sign": self.crossing_sign,
            "local_phases": list(self.local_phases),
        }


@dataclass(frozen=True)
class NeckParameters:
    scales: tuple[float, ...]

    def __post_init__(self):
        scales = tuple(float(s) for s in self.scales)
        if not scales or any(not s > 0 for s in scales):
            raise ValueError("neck scales must be positive")
        object.__setattr__(self, "scales", scales)

    @classmethod
    def uniform(cls, count: int, scale: float) -> "NeckParameters":
        return cls((scale,) * count)

    def scaled(self, factor: float) -> "NeckParameters":
        return NeckParameters(tuple(factor * s for s in self.scales))


def _lattice_coords(curve: DiscreteCurve):
    inv = np.linalg.inv(curve.geometry.matrix)
    start = curve.vertices @ inv.T
    step = curve.edges @ inv.T
    return start, step


def _candidates(c1: DiscreteCurve, c2: DiscreteCurve, skip_adjacent: bool = False):
    """All (i, j, s, t, n) with edge_i(s) = edge_j(t) + n in lattice coordinates."""
    a, d = _lattice_coords(c1)
    b, e = _lattice_coords(c2)
    lo = np.floor(np.minimum(a, a + d).min(0) - np.maximum(b, b + e).max(0)) - 1
    hi = np.ceil(np.maximum(a, a + d).max(0) - np.minimum(b, b + e).min(0)) + 1
    den = d[:, None, 0] * e[None, :, 1] - d[:, None, 1] * e[None, :, 0]
    scale = np.hypot(d[:, None, 0], d[:, None, 1]) * np.hypot(e[None, :, 0], e[None, :, 1])
    n1, n2 = len(a), len(b)
    period = np.array(c1.closure)
    k = np.arange(n1)
    if skip_adjacent:
        dist = np.abs(k[:, None] - k[None, :])
        near = (dist <= 1) | (dist == n1 - 1)
    found = []
    for nx in range(int(lo[0]), int(hi[0]) + 1):
        for ny in range(int(lo[1]), int(hi[1]) + 1):
            n = np.array([nx, ny], dtype=float)
            w = b[None, :, :] + n - a[:, None, :]
            cw_e = w[..., 0] * e[None, :, 1] - w[..., 1] * e[None, :, 0]
            cw_d = w[..., 0] * d[:, None, 1] - w[..., 1] * d[:, None, 0]
            parallel = np.abs(den) <= 1e-14 * scale
            if skip_adjacent:
                trivial = any(np.array_equal(n, m * period) for m in (-1, 0, 1))
                mask_skip = near if trivial else np.zeros_like(near)
            else:
                mask_skip = np.zeros((n1, n2), dtype=bool)
            # collinear overlap
            coll = parallel & (np.abs(cw_d) <= 1e-12 * np.hypot(d[:, None, 0], d[:, None, 1])) & ~mask_skip
            if coll.any():
                for i, j in zip(*np.nonzero(coll)):
                    dd = d[i] @ d[i]
                    t0 = (w[i, j] @ d[i]) / dd
                    t1 = ((w[i, j] + e[j]) @ d[i]) / dd
                    if max(min(t0, t1), 0.0) < min(max(t0, t1), 1.0) - PARAM_TOL:
                        raise ParallelIntersection("clean/parallel intersection is not supported")
            with np.errstate(divide="ignore", invalid="ignore"):
                s = cw_e / den
                t = cw_d / den
            ok = ~parallel & ~mask_skip & (s >= -PARAM_TOL) & (s < 1 + PARAM_TOL) & (t >= -PARAM_TOL) & (t < 1 + PARAM_TOL)
            for i, j in zip(*np.nonzero(ok)):
                found.append((int(i), int(j), float(s[i, j]), float(t[i, j]), (nx, ny)))
    return found


def _normalise(i, s, n):
    """Move a parameter sitting on an edge's end to the next edge's start."""
    if s >= 1 - PARAM_TOL:
        return (i + 1) % n, 0.0, i + 1 == n
    return i, max(s, 0.0), False


def intersections(c1: DiscreteCurve, c2: DiscreteCurve) -> list[IntersectionPoint]:
    """Transverse crossings of two curves on the torus, ordered along ``c1``."""
    if c1.geometry != c2.geometry:
        raise ValueError("curves live on different tori")
    geom = c1.geometry
    out = {}
    cum1 = np.concatenate([[0.0], np.cumsum(c1.edge_lengths)])
    cum2 = np.concatenate([[0.0], np.cumsum(c2.edge_lengths)])
    for i, j, s, t, n in _candidates(c1, c2):
        i, s, wrap1 = _normalise(i, s, c1.n)
        j, t, wrap2 = _normalise(j, t, c2.n)
        # wrapping past the last edge moves the lift by one period
        n = np.array(n) - np.array(c1.closure) * wrap1 + np.array(c2.closure) * wrap2
        key = (i, j)
        if key in out:
            continue
        x1 = c1.vertices[i] + s * c1.edges[i]
        lat = np.linalg.solve(geom.matrix, x1)
        loc = geom.matrix @ (lat - np.floor(lat))
        u1, u2 = c1.edges[i], c2.edges[j]
        det = u1[0] * u2[1] - u1[1] * u2[0]
        out[key] = IntersectionPoint(
            location=(float(loc[0]), float(loc[1])),
            index_on_each=(i, j),
            crossing_sign=1 if det > 0 else -1,
            local_phases=(float(c1.theta_lift[i]), float(c2.theta_lift[j])),
            arclength=(float(cum1[i] + s * c1.edge_lengths[i]), float(cum2[j] + t * c2.edge_lengths[j])),
            lift_offset=(int(round(n[0])), int(round(n[1]))),
        )
    pts = sorted(out.values(), key=lambda p: (p.arclength[0], p.arclength[1]))
    # a crossing exactly at a vertex can surface from both neighbouring edges
    uniq = []
    for p in pts:
        if uniq and abs(p.arclength[0] - uniq[-1].arclength[0]) < 1e-12 \
                and abs(p.arclength[1] - uniq[-1].arclength[1]) < 1e-12:
            continue
        uniq.append(p)
    return uniq


def self_crossings(curve: DiscreteCurve) -> list[tuple[int, int]]:
    """Pairs of non-adjacent edges that cross on the torus."""
    pairs = set()
    for i, j, s, t, n in _candidates(curve, curve, skip_adjacent=True):
        if i != j:
            pairs.add((min(i, j), max(i, j)))
    return sorted(pairs)


def grading_compatible(phi1: float, phi2: float) -> bool:
    """Whether the graded sum ``L1 # L2`` exists: ``0 < phi2 - phi1 < pi``."""
    return 0.0 < phi2 - phi1 < math.pi


def neck_moduli_dimension(points) -> int:
    """Dimension of the projective space of neck ratios."""
    k = len(points)
    if k == 0:
        raise ValueError("no intersection points")
    return k - 1


def _point_at(curve: DiscreteCurve, s: float) -> np.ndarray:
    L = curve.length
    k = math.floor(s / L)
    r = s - k * L
    pts = curve.closed_vertices()
    cum = np.concatenate([[0.0], np.cumsum(curve.edge_lengths)])
    x = np.interp(r, cum, pts[:, 0])
    y = np.interp(r, cum, pts[:, 1])
    return np.array([x, y]) + curve.geometry.translation(k * curve.closure[0], k * curve.closure[1])


def _interior_vertices(curve: DiscreteCurve, s0: float, s1: float) -> list[np.ndarray]:
    """Vertices of the curve strictly between arclength s0 and s1 (s1 may exceed L)."""
    L = curve.length
    cum = np.concatenate([[0.0], np.cumsum(curve.edge_lengths)])[:-1]
    out = []
    k = math.floor(s0 / L)
    while k * L < s1:
        for idx, c in enumerate(cum):
            s = k * L + c
            if s0 + 1e-12 < s < s1 - 1e-12:
                T = curve.geometry.translation(k * curve.closure[0], k * curve.closure[1])
                out.append(curve.vertices[idx] + T)
        k += 1
    return out


def _bezier(p0, p1, p2, samples: int) -> list[np.ndarray]:
    """Interior samples of the arc, equally spaced in tangent angle.

    The tangent is proportional to (1 - t) u + t w, so the parameter where it
    points along a given direction e solves e x ((1 - t) u + t w) = 0.
    Uniform parameter spacing crowds the turning near the apex of a sharp
    neck; angle spacing keeps every discrete turn at (total turn) / samples.
    """
    u, w = p1 - p0, p2 - p1
    a0 = math.atan2(u[1], u[0])
    turn = math.remainder(math.atan2(w[1], w[0]) - a0, 2 * math.pi)
    ang = a0 + turn * np.arange(1, samples) / samples
    e = np.column_stack([np.cos(ang), np.sin(ang)])
    cu = e[:, 0] * u[1] - e[:, 1] * u[0]
    cw = e[:, 0] * w[1] - e[:, 1] * w[0]
    t = (cu / (cu - cw))[:, None]
    pts = (1 - t) ** 2 * p0 + 2 * t * (1 - t) * p1 + t ** 2 * p2
    return list(pts)


def _check_necks(curve: DiscreteCurve, positions, scales):
    order = np.argsort(positions)
    pos = np.asarray(positions)[order]
    gaps = np.diff(np.concatenate([pos, [pos[0] + curve.length]]))
    if max(scales) >= 0.5 * gaps.min():
        raise ValueError("necks too large: a scale reaches half the gap between crossings")


def connect_sum_components(c1: DiscreteCurve, c2: DiscreteCurve, necks: NeckParameters | None = None,
                           neck_samples: int = 16, default_scale: float = 0.05) -> list[DiscreteCurve]:
    """Graded connect sum ``c1 # c2`` resolved at every crossing.

    Returns one curve per connected component, each graded consistently with
    ``c1``.  Raises GradedSumError if some crossing fails the phase window.
    """
    pts = intersections(c1, c2)
    if not pts:
        raise GradedSumError("curves do not intersect; nothing to connect")
    for p in pts:
        th1, th2 = p.local_phases
        if not grading_compatible(th1, th2):
            raise GradedSumError(
                f"graded sum does not exist: phases {th1:.6g}, {th2:.6g} at {p.location} "
                "violate 0 < theta2 - theta1 < pi",
                witness=p,
            )
    if necks is None:
        necks = NeckParameters.uniform(len(pts), default_scale)
    if len(necks.scales) != len(pts):
        raise ValueError(f"{len(pts)} crossings but {len(necks.scales)} neck scales")
    a = necks.scales
    s1 = [p.arclength[0] for p in pts]
    s2 = [p.arclength[1] for p in pts]
    _check_necks(c1, s1, a)
    _check_necks(c2, s2, a)

    geom = c1.geometry
    m = len(pts)
    nxt1 = {k: (k + 1) % m for k in range(m)}  # pts already sorted along c1
    order2 = sorted(range(m), key=lambda k: s2[k])
    nxt2 = {order2[r]: order2[(r + 1) % m] for r in range(m)}
    L1, L2 = c1.length, c2.length

    def lattice_shift(x_from, x_to):
        n = np.rint(np.linalg.solve(geom.matrix, x_to - x_from)).astype(int)
        return n

    components = []
    used = set()
    for start in range(m):
        if start in used:
            continue
        verts: list[np.ndarray] = []
        offset = np.zeros(2, dtype=int)  # lattice offset of the current lift
        k = start
        while True:
            used.add(k)
            # piece of c1 from crossing k to the next crossing along c1
            k2 = nxt1[k]
            lo = s1[k] + a[k]
            hi = s1[k2] - a[k2] + (L1 if s1[k2] <= s1[k] else 0.0)
            T = geom.translation(*offset)
            piece = [_point_at(c1, lo)] + _interior_vertices(c1, lo, hi) + [_point_at(c1, hi)]
            piece = [x + T for x in piece]
            verts.extend(piece)
            # branch from c1 onto c2 at crossing k2
            x_cross = _point_at(c1, hi + a[k2]) + T
            off2 = lattice_shift(_point_at(c2, s2[k2]), x_cross)
            T2 = geom.translation(*off2)
            p2 = _point_at(c2, s2[k2] + a[k2]) + T2
            verts.extend(_bezier(verts[-1], x_cross, p2, neck_samples))
            # piece of c2 from crossing k2 to the next crossing along c2
            k3 = nxt2[k2]
            lo2 = s2[k2] + a[k2]
            hi2 = s2[k3] - a[k3] + (L2 if s2[k3] <= s2[k2] else 0.0)
            piece = [_point_at(c2, lo2)] + _interior_vertices(c2, lo2, hi2) + [_point_at(c2, hi2)]
            verts.extend(x + T2 for x in piece)
            # branch from c2 back onto c1 at crossing k3
            x_cross = _point_at(c2, hi2 + a[k3]) + T2
            offset = lattice_shift(_point_at(c1, s1[k3]), x_cross)
            T = geom.translation(*offset)
            p1 = _point_at(c1, s1[k3] + a[k3]) + T
            verts.extend(_bezier(verts[-1], x_cross, p1, neck_samples))
            k = k3
            if k == start:
                break
        closure = tuple(int(c) for c in offset)
        verts = _dedupe(verts, 1e-12 * (L1 + L2))
        curve = DiscreteCurve(np.array(verts), closure, geom, c1.holonomy)
        ref = _theta_at(c1, s1[start] + a[start])
        shift = round((ref - curve.theta_lift[0]) / (2 * math.pi))
        components.append(curve.regraded(shift) if shift else curve)
    return components


def _theta_at(curve: DiscreteCurve, s: float) -> float:
    """Phase of the edge containing arclength s (periodic)."""
    r = s % curve.length
    idx = int(np.searchsorted(np.cumsum(curve.edge_lengths), r, side="right"))
    return float(curve.theta_lift[min(idx, curve.n - 1)])


def _dedupe(verts, tol):
    out = [verts[0]]
    for v in verts[1:]:
        if np.linalg.norm(v - out[-1]) > tol:
            out.append(v)
    return out


def connect_sum(c1: DiscreteCurve, c2: DiscreteCurve, necks: NeckParameters | None = None,
                neck_samples: int = 16, default_scale: float = 0.05) -> DiscreteCurve:
    """Graded connect sum as a single curve.

    Raises ValueError when the resolution has several components (this
    happens when the summed class is imprimitive); use
    ``connect_sum_components`` in that case.
    """
    comps = connect_sum_components(c1, c2, necks, neck_samples, default_scale)
    if len(comps) != 1:
        raise ValueError(f"connect sum has {len(comps)} components; use connect_sum_components")
    return comps[0]
