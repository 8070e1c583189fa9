import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lagstab.curves import (
    DiagnosticSample,
    DiscreteCurve,
    FlowDiagnostics,
    NotGradeable,
    RefinementRequired,
    average_phase,
    circle,
    flux,
    line,
    maslov,
    moment_norm,
    perturbed_line,
    resample,
    swept_area,
    theta_lift_compute,
    weighted_metric,
)
from lagstab.torus import TorusCY

seeds = st.integers(0, 2**32 - 1)
small_classes = st.sampled_from([(1, 0), (0, 1), (1, 1), (2, 1), (1, -2), (-1, 3), (3, 2)])


def test_line_lifts():
    assert np.all(line(1, 0, 16).theta_lift == 0)
    assert np.allclose(line(1, 1, 16).theta_lift, math.pi / 4, atol=1e-15)


def test_regular_polygon_lift():
    # edge k of the regular n-gon points at angle pi/2 + pi/n + 2 pi k/n
    n = 64
    c = circle(0.2, n)
    expected = math.pi / 2 + math.pi / n + 2 * math.pi * np.arange(n) / n
    assert np.allclose(c.theta_lift, expected, atol=1e-12)
    # with the closing turn the lift gains exactly 2 pi
    assert c.theta_lift[-1] + 2 * math.pi / n - c.theta_lift[0] == pytest.approx(2 * math.pi)
    assert maslov(c) == 1
    cw = DiscreteCurve(c.vertices[::-1], (0, 0))
    assert maslov(cw) == -1


def test_lift_first_value_window():
    lift = theta_lift_compute(line(-1, 0, 8).vertices, (-1, 0))
    assert lift[0] == pytest.approx(math.pi)
    lift = theta_lift_compute(line(1, 0, 8).vertices, (1, 0), lift_index=2)
    assert lift[0] == pytest.approx(4 * math.pi)


def test_sharp_turn_needs_refinement():
    v = [[0.0, 0.0], [0.4, 0.0], [0.4, 0.3], [0.7, 0.3]]
    with pytest.raises(RefinementRequired):
        DiscreteCurve(v, (1, 0))
    # a square has pi/2 turns, which is already too coarse
    with pytest.raises(RefinementRequired):
        DiscreteCurve([[0, 0], [0.1, 0], [0.1, 0.1], [0, 0.1]], (0, 0))


def test_repeated_closing_vertex_is_dropped():
    v = np.vstack([line(1, 0, 8).vertices, [[1.0, 0.0]]])
    assert DiscreteCurve(v, (1, 0)).n == 8


def test_small_wiggle_keeps_maslov_zero():
    rng = np.random.default_rng(4)
    assert maslov(perturbed_line(1, 0, 128, 0.05, rng)) == 0


def test_average_phase_examples():
    assert average_phase(line(1, 0, 8)) == 0
    assert average_phase(line(2, 1, 8)) == pytest.approx(math.atan(0.5), abs=1e-15)
    with pytest.raises(NotGradeable):
        average_phase(circle(0.1, 32))


def test_average_phase_window_and_shift():
    c = line(1, 0, 8).shifted(1)
    assert c.closure == (-1, 0)
    assert average_phase(c) == pytest.approx(math.pi)
    assert average_phase(line(1, 0, 8).shifted(2)) == pytest.approx(2 * math.pi)


def test_moment_norm_examples():
    assert moment_norm(line(2, 1, 32)) == pytest.approx(0, abs=1e-28)
    # edges of 1/8 keep every turn below pi/2
    v = line(1, 0, 8).vertices.copy()
    v[3, 1] += 0.1
    assert moment_norm(DiscreteCurve(v, (1, 0))) > 0


def _subdivide(curve, m):
    pts = curve.closed_vertices()
    t = np.arange(m)[:, None] / m
    out = [a + t * (b - a) for a, b in zip(pts[:-1], pts[1:])]
    return np.vstack(out + [pts[-1:]])


def test_moment_norm_quadrature_oracle():
    # independent oracle: raw atan2 angles on a 10x subdivided polygon,
    # class phase from arctan of the slope (sin^2 ignores lifts)
    s = np.arange(200) / 200
    v = np.column_stack([2 * s, s]) + 0.04 * np.sin(6 * np.pi * s)[:, None] * np.array([-1, 2]) / math.sqrt(5)
    c = DiscreteCurve(v, (2, 1))
    fine = _subdivide(c, 10)
    d = np.diff(fine, axis=0)
    ang = np.arctan2(d[:, 1], d[:, 0])
    oracle = float(np.sum(np.sin(ang - math.atan(0.5)) ** 2 * np.hypot(d[:, 0], d[:, 1])))
    assert moment_norm(c) == pytest.approx(oracle, abs=1e-9)
    assert oracle > 1e-3


def test_weighted_metric_line_is_length():
    c = line(2, 1, 16)
    ones = np.ones(c.n)
    assert weighted_metric(c, ones, ones) == pytest.approx(math.sqrt(5))


def test_weighted_metric_indefinite_past_half_pi():
    s = np.arange(400) / 400
    v = np.column_stack([s + 0.25 * np.sin(2 * np.pi * s), 0.15 * np.sin(2 * np.pi * s)])
    c = DiscreteCurve(v, (1, 0))
    assert maslov(c) == 0
    dev = c.theta_lift - average_phase(c)
    assert np.abs(dev).max() > math.pi / 2
    a = (np.cos(dev) < 0).astype(float)
    assert weighted_metric(c, a, a) < 0


@given(seeds, small_classes, st.floats(0.0, 0.08))
def test_weighted_metric_positive_inside_window(seed, cls, amp):
    c = perturbed_line(*cls, 128, amp, np.random.default_rng(seed))
    dev = np.abs(c.theta_lift - average_phase(c)).max()
    if dev >= math.pi / 2:
        return
    a = np.random.default_rng(seed).standard_normal(c.n)
    assert weighted_metric(c, a, a) > 0


@given(seeds)
def test_weighted_metric_symmetric(seed):
    rng = np.random.default_rng(seed)
    c = perturbed_line(1, 1, 64, 0.05, rng)
    a, b = rng.standard_normal((2, c.n))
    assert weighted_metric(c, a, b) == weighted_metric(c, b, a)


@given(seeds, small_classes, st.floats(0.0, 0.1))
def test_average_phase_ignores_interior(seed, cls, amp):
    c = perturbed_line(*cls, 96, amp, np.random.default_rng(seed))
    if maslov(c) != 0:
        return
    base = average_phase(line(*cls, 8))
    assert average_phase(c) == base


@given(seeds, st.integers(17, 300))
def test_maslov_resampling_invariant(seed, n):
    c = perturbed_line(2, 1, 256, 0.05, np.random.default_rng(seed))
    assert maslov(resample(c, n)) == maslov(c)
    assert maslov(resample(circle(0.2, 256), n)) == 1


def test_flux_constant_history():
    c = line(1, 2, 16)
    assert flux([c, c, c]) == 0


def test_flux_swept_rectangle():
    c = line(1, 0, 16)
    h = 0.37
    up = c.with_vertices(c.vertices + [0.0, h])
    assert flux([c, up]) == pytest.approx(h, abs=1e-15)
    assert swept_area(up, c) == pytest.approx(-h, abs=1e-15)


def test_flux_general_lattice():
    g = TorusCY(basis=((2.0, 0.0), (0.5, 1.5)))
    c = line(1, 0, 12, geometry=g)
    # translate along the second basis vector by a fraction f: area f * det
    f = 0.25
    moved = c.with_vertices(c.vertices + f * np.array([0.5, 1.5]))
    assert flux([c, moved]) == pytest.approx(f * 3.0)


def test_flux_correspondence_mismatch():
    with pytest.raises(ValueError):
        flux([line(1, 0, 8), line(1, 0, 9)])
    with pytest.raises(ValueError):
        flux([line(1, 0, 8), line(0, 1, 8)])


@given(seeds, seeds, seeds)
def test_flux_homomorphism(s1, s2, s3):
    a, b, c = (perturbed_line(1, 1, 64, 0.05, np.random.default_rng(s)) for s in (s1, s2, s3))
    h1, h2 = [a, b], [b, c]
    whole = flux(h1 + h2[1:])
    assert whole == pytest.approx(flux(h1) + flux(h2), abs=1e-14)


@given(seeds, st.integers(1, 63))
def test_swept_area_basepoint_free(seed, k):
    rng = np.random.default_rng(seed)
    a = perturbed_line(2, 1, 64, 0.05, rng)
    b = perturbed_line(2, 1, 64, 0.05, rng)
    # same geometric curve, started at vertex k
    T = b.geometry.translation(*b.closure)
    rolled = np.vstack([b.vertices[k:], b.vertices[:k] + T])
    b2 = DiscreteCurve(rolled, b.closure)
    assert swept_area(a, b2) == pytest.approx(swept_area(a, b), abs=1e-13)


def test_resample_uniform_and_area_neutral():
    c = perturbed_line(2, 1, 128, 0.08, np.random.default_rng(1))
    r = resample(c)
    assert np.allclose(r.vertices[0], c.vertices[0])
    h = r.edge_lengths
    assert h.max() - h.min() < 0.05 * h.mean()
    neutral = resample(c, area_neutral=True)
    assert swept_area(c, neutral) == pytest.approx(0, abs=1e-13)
    assert neutral.closure == c.closure


def test_json_roundtrip():
    c = perturbed_line(2, 1, 16, 0.05, np.random.default_rng(0)).regraded(1)
    c = DiscreteCurve(c.vertices, c.closure, c.geometry, holonomy=1.0, lift_index=1)
    d = DiscreteCurve.from_json(c.to_json())
    assert np.array_equal(d.vertices, c.vertices)
    assert d.closure == c.closure and d.holonomy == c.holonomy
    assert np.array_equal(d.theta_lift, c.theta_lift)
    with pytest.raises(ValueError):
        DiscreteCurve.from_json({"closure": [1, 0]})


def test_diagnostics_times_and_csv():
    d = FlowDiagnostics()
    d.append(DiagnosticSample(0.0, 1.0, 0.0, 0.1, 0.01, 0.0))
    d.append(DiagnosticSample(0.5, 0.9, 0.0, 0.05, 0.005, 1e-9))
    with pytest.raises(ValueError):
        d.append(DiagnosticSample(0.5, 0.8, 0.0, 0.0, 0.0, 0.0))
    lines = d.to_csv().splitlines()
    assert lines[0] == "time,length,phase_mean,phase_spread,moment_norm,cumulative_flux"
    assert len(lines) == 3
    assert float(lines[2].split(",")[0]) == 0.5
