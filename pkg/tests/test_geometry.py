import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from trimlump.geometry import (ExtrudedPlate, Interval1D, PerforatedPlate, RotatedSquare, UnitSquare,
                               make_domain)
from trimlump.splines import SplineSpace

# -- slice oracle: |T ∩ Omega| = int over x of the length of the vertical chord ------------


def _chords_rotated(dom: RotatedSquare, x):
    """y-interval of the square at abscissa x, from |R^T (p - c)|_inf <= s."""
    R, c, s = dom.rotation, np.asarray(dom.center), dom.half_side
    ylo, yhi = -np.inf, np.inf
    for k in range(2):
        a, b = R[0, k], R[1, k]  # r_k . (p - c) = a (x - cx) + b (y - cy)
        base = a * (x - c[0])
        # -s <= base + b (y - cy) <= s
        lo, hi = (-s - base) / b + c[1], (s - base) / b + c[1]
        lo, hi = min(lo, hi), max(lo, hi)
        ylo, yhi = max(ylo, lo), min(yhi, hi)
    return [(ylo, yhi)] if yhi > ylo else []


def _complement(holes, y0, y1):
    """Parts of [y0, y1] outside the given y-interval."""
    out = [(y0, y1)]
    for a, b in holes:
        nxt = []
        for u, v in out:
            if b <= u or a >= v:
                nxt.append((u, v))
                continue
            if a > u:
                nxt.append((u, a))
            if b < v:
                nxt.append((b, v))
        out = nxt
    return out


def _chords_disk_hole(dom: PerforatedPlate, x, y0, y1):
    c, r = dom.center, dom.radius
    dx = x - c[0]
    if abs(dx) >= r:
        return [(y0, y1)]
    hw = math.sqrt(r * r - dx * dx)
    return _complement([(c[1] - hw, c[1] + hw)], y0, y1)


def _chords_stadium_hole(dom: ExtrudedPlate, x, y0, y1):
    r, xm = dom.radius, dom.c1[0]
    dx = x - xm
    if abs(dx) >= r:
        return [(y0, y1)]
    hw = math.sqrt(r * r - dx * dx)
    return _complement([(dom.c1[1] - hw, dom.c2[1] + hw)], y0, y1)


def oracle_integral(dom, lo, hi, g=lambda x, y0, y1: y1 - y0):
    """Integral over T ∩ Omega of a function given through its y-antiderivative ``g``."""
    def slice_(x):
        if isinstance(dom, RotatedSquare):
            ch = [(max(a, lo[1]), min(b, hi[1])) for a, b in _chords_rotated(dom, x)]
        elif isinstance(dom, PerforatedPlate):
            ch = _chords_disk_hole(dom, x, lo[1], hi[1])
        else:
            ch = _chords_stadium_hole(dom, x, lo[1], hi[1])
        return sum(g(x, a, b) for a, b in ch if b > a)

    pts = [lo[0], hi[0]]
    if isinstance(dom, RotatedSquare):
        pts += [p for p in dom.corners[:, 0]]
        # x where an edge crosses y = lo[1] or y = hi[1]
        for k in range(4):
            a, b = dom.corners[k], dom.corners[(k + 1) % 4]
            for yv in (lo[1], hi[1]):
                if (a[1] - yv) * (b[1] - yv) < 0:
                    pts.append(a[0] + (yv - a[1]) / (b[1] - a[1]) * (b[0] - a[0]))
    else:
        r = dom.radius
        centers = [dom.center] if isinstance(dom, PerforatedPlate) else [dom.c1, dom.c2]
        for c in centers:
            pts += [c[0] - r, c[0] + r]
            for yv in (lo[1], hi[1]):  # circle crossings of the horizontal box edges
                if abs(yv - c[1]) < r:
                    hw = math.sqrt(r * r - (yv - c[1]) ** 2)
                    pts += [c[0] - hw, c[0] + hw]
    pts = sorted(p for p in pts if lo[0] <= p <= hi[0])
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        if b > a:
            total += quad(slice_, a, b, epsabs=1e-15, epsrel=1e-13, limit=200)[0]
    return total


def cut_cells(dom, n=16):
    S = SplineSpace.uniform(1, 0, n, 2)
    out = []
    for e in range(S.n_elements):
        lo, hi = S.element_bounds(e)
        f = dom.volume_fraction(lo, hi)
        if 0.0 < f < 1.0:
            out.append((lo, hi, f))
    return out


# -- volume fractions ----------------------------------------------------------------------


def test_interval_fraction_example():
    dom = Interval1D(eps=1e-6)
    f = dom.volume_fraction([192 / 256], [193 / 256])
    assert f == pytest.approx(2.56e-4, rel=1e-8)
    assert dom.volume_fraction([0.1], [0.2]) == 1.0
    assert dom.volume_fraction([0.8], [0.9]) == 0.0


@pytest.mark.parametrize("dom", [RotatedSquare(eps=1e-6), PerforatedPlate(eps=1e-6), ExtrudedPlate(eps=1e-7)],
                         ids=["rotated", "perforated", "plate"])
def test_fractions_match_slice_oracle(dom):
    cells = cut_cells(dom)
    assert len(cells) > 10
    tol = 1e-8 if isinstance(dom, RotatedSquare) else 1e-10
    for lo, hi, f in cells:
        ref = oracle_integral(dom, lo, hi) / np.prod(hi - lo)
        assert abs(f - ref) <= tol * max(ref, 1e-3), (lo, f, ref)


def test_full_and_empty():
    dom = RotatedSquare(eps=1e-6)
    assert dom.volume_fraction([0.45, 0.45], [0.55, 0.55]) == 1.0
    assert dom.volume_fraction([0.0, 0.0], [0.05, 0.05]) == 0.0
    assert len(dom.interior_rule(np.array([0.0, 0.0]), np.array([0.05, 0.05]), 4)) == 0


@given(x=st.floats(0.0, 0.9), y=st.floats(0.0, 0.9), w=st.floats(0.01, 0.1))
def test_rotated_fraction_property(x, y, w):
    dom = RotatedSquare(eps=1e-6)
    lo, hi = np.array([x, y]), np.array([x + w, y + w])
    ref = oracle_integral(dom, lo, hi) / w ** 2
    assert abs(dom.volume_fraction(lo, hi) - ref) <= 1e-8


# -- interior rules ------------------------------------------------------------------------


def test_interval_cut_rule():
    dom = Interval1D(eps=1e-6)
    rule = dom.interior_rule(np.array([0.75]), np.array([0.76]), 8)
    assert rule.total == pytest.approx(1e-6, rel=1e-10)
    assert np.all(rule.weights > 0)
    assert np.all(rule.points <= dom.x_end)


def test_rotated_rule_consistent_with_fraction():
    dom = RotatedSquare(eps=1e-6)
    for lo, hi, f in cut_cells(dom, 24):
        rule = dom.interior_rule(lo, hi, 8)
        assert abs(rule.total - f * np.prod(hi - lo)) <= 1e-12 * np.prod(hi - lo)
        assert np.all(rule.weights > 0)


def test_rotated_rule_polynomial_exactness():
    dom = RotatedSquare(eps=1e-6)
    g = lambda x, a, b: x ** 2 * (b ** 4 - a ** 4) / 4  # noqa: E731  antiderivative of x^2 y^3
    for lo, hi, _ in cut_cells(dom, 8)[:12]:
        rule = dom.interior_rule(lo, hi, 8)
        val = rule.integrate(lambda p: p[:, 0] ** 2 * p[:, 1] ** 3)
        assert val == pytest.approx(oracle_integral(dom, lo, hi, g), rel=1e-11, abs=1e-16)


def test_circular_rule_accuracy():
    dom = PerforatedPlate(eps=1e-6)
    g = lambda x, a, b: np.cos(3 * x) * (np.exp(b) - np.exp(a))  # noqa: E731
    for lo, hi, _ in cut_cells(dom, 12)[:10]:
        rule = dom.interior_rule(lo, hi, 8)
        val = rule.integrate(lambda p: np.cos(3 * p[:, 0]) * np.exp(p[:, 1]))
        assert val == pytest.approx(oracle_integral(dom, lo, hi, g), rel=1e-10)


@pytest.mark.parametrize("kind,eps", [("interval", 1e-6), ("rotated_square", 1e-6),
                                      ("extruded_plate", 1e-7), ("perforated_plate", 1e-6)])
def test_global_measure(kind, eps):
    dom = make_domain(kind, eps)
    S = SplineSpace.uniform(1, 0, 32, dom.dim)
    total = sum(dom.interior_rule(*S.element_bounds(e), 6).total for e in range(S.n_elements))
    assert total == pytest.approx(dom.measure, rel=1e-8)


def test_analytic_measures():
    assert RotatedSquare(eps=0.0).measure == pytest.approx(0.25)
    p = PerforatedPlate(eps=0.0)
    assert p.measure == pytest.approx(1 - math.pi * 0.125 ** 2 * 2)
    x = ExtrudedPlate(eps=0.0)
    assert x.measure == pytest.approx(1 - math.pi / 64 - 0.125)


# -- boundary rules ------------------------------------------------------------------------


def test_interval_boundary_point():
    dom = Interval1D(eps=1e-6)
    r = dom.boundary_rule(np.array([0.75]), np.array([0.76]), 4)
    assert r.points[0, 0] == dom.x_end and r.weights[0] == 1.0 and r.normals[0, 0] == 1.0
    assert len(dom.boundary_rule(np.array([0.1]), np.array([0.2]), 4)) == 0
    with pytest.raises(ValueError):
        dom.boundary_rule(np.array([0.75]), np.array([1.0]), 4, ("right",))


def _all_boundary(dom, n=16, q=8):
    S = SplineSpace.uniform(1, 0, n, 2)
    rules = [dom.boundary_rule(*S.element_bounds(e), q) for e in range(S.n_elements)]
    return [r for r in rules if len(r)]


def test_rotated_perimeter():
    dom = RotatedSquare(eps=1e-6)
    total = sum(r.total for r in _all_boundary(dom))
    assert total == pytest.approx(8 * dom.half_side, rel=1e-12)


def test_perforated_arc_lengths():
    dom = PerforatedPlate(eps=1e-6)
    rules = _all_boundary(dom)
    assert sum(r.total for r in rules) == pytest.approx(2 * math.pi * dom.radius, rel=1e-10)
    c = np.asarray(dom.center)
    S = SplineSpace.uniform(1, 0, 16, 2)
    for e in range(S.n_elements):
        lo, hi = S.element_bounds(e)
        r = dom.boundary_rule(lo, hi, 8)
        if not len(r):
            continue
        assert r.total == pytest.approx(dom.radius * arc_span(c, dom.radius, lo, hi), rel=1e-10)
        assert np.allclose(r.normals, -(r.points - c) / dom.radius)


def arc_span(c, rad, lo, hi):
    """Total angle of the circle inside the box, from its crossings with the box edges."""
    ang = [0.0, 2 * math.pi]
    for k in range(2):
        for v in (lo[k], hi[k]):
            d = v - c[k]
            if abs(d) < rad:
                w = math.sqrt(rad * rad - d * d)
                for o in (-w, w):
                    p = (v, c[1] + o) if k == 0 else (c[0] + o, v)
                    ang.append(math.atan2(p[1] - c[1], p[0] - c[0]) % (2 * math.pi))
    ang = sorted(ang)
    span = 0.0
    for a0, a1 in zip(ang[:-1], ang[1:]):
        m = 0.5 * (a0 + a1)
        p = (c[0] + rad * math.cos(m), c[1] + rad * math.sin(m))
        if lo[0] <= p[0] <= hi[0] and lo[1] <= p[1] <= hi[1]:
            span += a1 - a0
    return span


def test_plate_perimeter():
    dom = ExtrudedPlate(eps=1e-7)
    total = sum(r.total for r in _all_boundary(dom))
    ref = 2 * math.pi * dom.radius + 2 * (dom.c2[1] - dom.c1[1])
    assert total == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("dom", [RotatedSquare(eps=1e-6), PerforatedPlate(eps=1e-6), ExtrudedPlate(eps=1e-7)],
                         ids=["rotated", "perforated", "plate"])
def test_normals_point_outward(dom, rng):
    rules = _all_boundary(dom)
    pts = np.concatenate([r.points for r in rules])
    nrm = np.concatenate([r.normals for r in rules])
    pick = rng.choice(len(pts), 100, replace=False)
    d = 1e-8
    assert np.allclose(np.linalg.norm(nrm, axis=1), 1.0)
    assert not dom.contains(pts[pick] + d * nrm[pick]).any()
    assert dom.contains(pts[pick] - d * nrm[pick]).all()


def test_box_sides_rule():
    dom = UnitSquare()
    r = dom.boundary_rule(np.array([0.0, 0.0]), np.array([0.25, 0.25]), 4, ("left", "bottom"))
    assert r.total == pytest.approx(0.5)
    assert {tuple(n) for n in r.normals} == {(-1.0, 0.0), (0.0, -1.0)}


def test_membership_tie_break():
    dom = Interval1D(eps=1e-6)
    assert not dom.contains([dom.x_end])[0]
    assert not dom.contains([dom.x_end - 1e-15])[0]
    assert dom.contains([dom.x_end - 1e-12])[0]
    sq = RotatedSquare(eps=1e-6)
    assert not sq.contains(sq.corners[:1])[0]


def test_membership_matches_signed_distance(rng):
    for dom in (RotatedSquare(eps=1e-6), PerforatedPlate(eps=1e-6), ExtrudedPlate(eps=1e-7)):
        x = rng.random((500, 2))
        assert np.array_equal(dom.contains(x), dom.signed_distance(x) > 1e-14)


def test_unknown_domain():
    with pytest.raises(ValueError):
        make_domain("triangle", 1e-6)
