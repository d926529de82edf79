"""Trimmed domains inside the unit interval / unit square and cut-cell quadrature.

Straight trims are handled by exact half-plane clipping followed by a fan
triangulation with collapsed Gauss rules on each triangle.  Circular trims are
integrated in polar coordinates about the circle center: the angular range is
split at polygon corners and circle/edge crossings, and angular panels are
bisected until the monomial moments of the rule stop changing.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

TRIM_TOL = 1e-14
PANEL_TOL = 1e-12
MAX_PANEL_DEPTH = 30

BOX_SIDES = ("left", "right", "bottom", "top")


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray
    normals: np.ndarray | None = None

    def __len__(self):
        return self.weights.size

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    def integrate(self, f) -> float:
        if not len(self):
            return 0.0
        return float(np.dot(self.weights, f(self.points)))

    @staticmethod
    def empty(dim: int, with_normals: bool = False) -> "QuadratureRule":
        return QuadratureRule(np.zeros((0, dim)), np.zeros(0),
                              np.zeros((0, dim)) if with_normals else None)

    @staticmethod
    def concat(rules, dim: int, with_normals: bool = False) -> "QuadratureRule":
        rules = [r for r in rules if len(r)]
        if not rules:
            return QuadratureRule.empty(dim, with_normals)
        normals = np.concatenate([r.normals for r in rules]) if with_normals else None
        return QuadratureRule(np.concatenate([r.points for r in rules]),
                              np.concatenate([r.weights for r in rules]), normals)


# -- elementary rules -----------------------------------------------------------


@functools.lru_cache(maxsize=None)
def gauss01(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre rule with ``n`` points on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def n_gauss(q: int) -> int:
    """Points needed for exactness up to polynomial degree ``q``."""
    return max(1, (q + 2) // 2)


def box_rule(lo, hi, q: int) -> QuadratureRule:
    lo, hi = np.atleast_1d(lo).astype(float), np.atleast_1d(hi).astype(float)
    x, w = gauss01(n_gauss(q))
    if lo.size == 1:
        return QuadratureRule((lo + (hi - lo) * x)[:, None], (hi - lo)[0] * w)
    X, Y = np.meshgrid(lo[0] + (hi[0] - lo[0]) * x, lo[1] + (hi[1] - lo[1]) * x, indexing="ij")
    W = np.outer(w, w) * np.prod(hi - lo)
    return QuadratureRule(np.column_stack([X.ravel(), Y.ravel()]), W.ravel())


def box_polygon(lo, hi) -> np.ndarray:
    return np.array([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]], dtype=float)


def polygon_area(poly: np.ndarray) -> float:
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def clip_polygon(poly: np.ndarray, normal, offset: float) -> np.ndarray:
    """Keep the part of a convex polygon with ``normal . x <= offset``."""
    if len(poly) == 0:
        return poly
    normal = np.asarray(normal, dtype=float)
    s = poly @ normal - offset
    out = []
    n = len(poly)
    for k in range(n):
        a, b = poly[k], poly[(k + 1) % n]
        sa, sb = s[k], s[(k + 1) % n]
        if sa <= 0:
            out.append(a)
        if (sa < 0 < sb) or (sb < 0 < sa):
            t = sa / (sa - sb)
            out.append(a + t * (b - a))
    if len(out) < 3:
        return np.zeros((0, 2))
    return np.array(out)


def triangle_rule(a, b, c, q: int) -> QuadratureRule:
    """Collapsed (Duffy) Gauss rule, exact for polynomials of degree ``q``."""
    u, wu = gauss01(n_gauss(q + 1))
    v, wv = gauss01(n_gauss(q))
    U, V = np.meshgrid(u, v, indexing="ij")
    U, V = U.ravel(), V.ravel()
    a, b, c = (np.asarray(p, dtype=float) for p in (a, b, c))
    pts = a + U[:, None] * (b - a) + (U * V)[:, None] * (c - b)
    det = abs((b - a)[0] * (c - b)[1] - (b - a)[1] * (c - b)[0])
    w = np.outer(wu, wv).ravel() * U * det
    return QuadratureRule(pts, w)


def polygon_rule(poly: np.ndarray, q: int) -> QuadratureRule:
    if len(poly) < 3:
        return QuadratureRule.empty(2)
    tris = [triangle_rule(poly[0], poly[k], poly[k + 1], q) for k in range(1, len(poly) - 1)]
    return QuadratureRule.concat(tris, 2)


def _monomials(pts: np.ndarray, center, scale, q: int) -> np.ndarray:
    z = (pts - center) / scale
    cols = [z[:, 0] ** a * z[:, 1] ** b for a in range(q + 1) for b in range(q + 1 - a)]
    return np.array(cols)


def _ray_limits(poly: np.ndarray, c, theta: np.ndarray):
    """Entry and exit distances of rays from ``c`` through a convex CCW polygon."""
    e = np.column_stack([np.cos(theta), np.sin(theta)])
    rho_in = np.zeros(theta.size)
    rho_out = np.full(theta.size, np.inf)
    n = len(poly)
    for k in range(n):
        a, b = poly[k], poly[(k + 1) % n]
        nrm = np.array([b[1] - a[1], a[0] - b[0]])  # outward for CCW polygons
        nrm /= np.hypot(*nrm)
        d = nrm @ a - nrm @ c
        ne = e @ nrm
        with np.errstate(divide="ignore", invalid="ignore"):
            t = d / ne
        pos = ne > 1e-15
        neg = ne < -1e-15
        rho_out = np.where(pos, np.minimum(rho_out, t), rho_out)
        rho_in = np.where(neg, np.maximum(rho_in, t), rho_in)
        par = ~(pos | neg)
        rho_out = np.where(par & (d < 0), -np.inf, rho_out)
    return rho_in, rho_out


def _circle_segment_angles(a, b, c, r) -> list[float]:
    d = b - a
    f = a - c
    A, B, C = d @ d, 2 * f @ d, f @ f - r * r
    disc = B * B - 4 * A * C
    if disc < 0 or A == 0:
        return []
    out = []
    sq = math.sqrt(disc)
    for t in ((-B - sq) / (2 * A), (-B + sq) / (2 * A)):
        if -1e-14 <= t <= 1 + 1e-14:
            p = a + t * d - c
            out.append(math.atan2(p[1], p[0]))
    return out


def _point_in_convex(poly, c) -> bool:
    n = len(poly)
    for k in range(n):
        a, b = poly[k], poly[(k + 1) % n]
        if (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]) <= 0:
            return False
    return True


def _dist_point_polygon(poly, c) -> float:
    if _point_in_convex(poly, c):
        return 0.0
    best = np.inf
    n = len(poly)
    for k in range(n):
        a, b = poly[k], poly[(k + 1) % n]
        d = b - a
        t = np.clip((c - a) @ d / (d @ d), 0.0, 1.0)
        best = min(best, float(np.hypot(*(a + t * d - c))))
    return best


def polygon_minus_disk_rule(poly: np.ndarray, c, r: float, q: int) -> QuadratureRule:
    """Quadrature over a convex polygon with the open disk ``|x - c| < r`` removed."""
    if len(poly) < 3:
        return QuadratureRule.empty(2)
    c = np.asarray(c, dtype=float)
    if _dist_point_polygon(poly, c) >= r:
        return polygon_rule(poly, q)
    if np.all(np.hypot(*(poly - c).T) <= r):
        return QuadratureRule.empty(2)

    if _point_in_convex(poly, c):
        start, stop = 0.0, 2 * math.pi
        breaks = []
    else:
        verts = poly[np.hypot(*(poly - c).T) > 1e-14]
        ref = math.atan2(*(poly.mean(axis=0) - c)[::-1])
        ang = np.arctan2(*(verts - c).T[::-1])
        rel = (ang - ref + math.pi) % (2 * math.pi) - math.pi
        start, stop = ref + rel.min(), ref + rel.max()
        breaks = list(ref + rel)
    n = len(poly)
    for k in range(n):
        breaks += _circle_segment_angles(poly[k], poly[(k + 1) % n], c, r)
    if stop - start >= 2 * math.pi - 1e-15:
        breaks += list(np.arctan2(*(poly - c).T[::-1]))
    # map every breakpoint into [start, stop]
    cuts = sorted({start, stop, *[start + (b - start) % (2 * math.pi) for b in breaks
                                   if start < start + (b - start) % (2 * math.pi) < stop]})

    scale = max(np.ptp(poly[:, 0]), np.ptp(poly[:, 1]))
    center = poly.mean(axis=0)
    nth = q + 4
    nrho = n_gauss(q + 1)
    tg, tw = gauss01(nth)
    rg, rw = gauss01(nrho)

    def panel(t0, t1):
        theta = t0 + (t1 - t0) * tg
        rho_in, rho_out = _ray_limits(poly, c, theta)
        lower = np.maximum(rho_in, r)
        upper = rho_out
        keep = upper > lower
        if not np.any(keep):
            return np.zeros((0, 2)), np.zeros(0)
        theta, lower, upper, wt = theta[keep], lower[keep], upper[keep], tw[keep] * (t1 - t0)
        rho = lower[:, None] + (upper - lower)[:, None] * rg[None, :]
        w = wt[:, None] * (upper - lower)[:, None] * rw[None, :] * rho
        pts = np.stack([c[0] + rho * np.cos(theta)[:, None], c[1] + rho * np.sin(theta)[:, None]], axis=-1)
        return pts.reshape(-1, 2), w.ravel()

    def moments(pts, w):
        if w.size == 0:
            return np.zeros((q + 1) * (q + 2) // 2)
        return _monomials(pts, center, scale, q) @ w

    pts_all, w_all = [], []

    def refine(t0, t1, depth):
        p0, w0 = panel(t0, t1)
        tm = 0.5 * (t0 + t1)
        pa, wa = panel(t0, tm)
        pb, wb = panel(tm, t1)
        m0 = moments(p0, w0)
        m1 = moments(pa, wa) + moments(pb, wb)
        err = np.max(np.abs(m1 - m0))
        ref = max(np.max(np.abs(m1)), 1e-300)
        if err <= PANEL_TOL * ref or depth >= MAX_PANEL_DEPTH:
            pts_all.extend([pa, pb])
            w_all.extend([wa, wb])
        else:
            refine(t0, tm, depth + 1)
            refine(tm, t1, depth + 1)

    for t0, t1 in zip(cuts[:-1], cuts[1:]):
        if t1 - t0 > 1e-15:
            refine(t0, t1, 0)
    if not w_all:
        return QuadratureRule.empty(2)
    return QuadratureRule(np.concatenate(pts_all), np.concatenate(w_all))


def segment_rule(a, b, lo, hi, q: int, normal) -> QuadratureRule:
    """Gauss rule on the part of segment [a, b] inside the box [lo, hi]."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    d = b - a
    t0, t1 = 0.0, 1.0
    for k in range(2):
        if abs(d[k]) < 1e-300:
            if a[k] < lo[k] or a[k] > hi[k]:
                return QuadratureRule.empty(2, True)
            continue
        ta, tb = (lo[k] - a[k]) / d[k], (hi[k] - a[k]) / d[k]
        t0, t1 = max(t0, min(ta, tb)), min(t1, max(ta, tb))
    if t1 - t0 <= 1e-15:
        return QuadratureRule.empty(2, True)
    x, w = gauss01(n_gauss(q))
    t = t0 + (t1 - t0) * x
    length = (t1 - t0) * float(np.hypot(*d))
    pts = a + t[:, None] * d
    normals = np.tile(np.asarray(normal, dtype=float), (x.size, 1))
    return QuadratureRule(pts, w * length, normals)


def arc_rule(c, r: float, a0: float, a1: float, lo, hi, q: int, inward: bool = True) -> QuadratureRule:
    """Rule on the arc ``c + r(cos t, sin t)``, ``t in [a0, a1]``, clipped to a box.

    Normals point toward the circle center when ``inward`` is set (Omega lies
    outside the circle).
    """
    c = np.asarray(c, dtype=float)
    cuts = {a0, a1}
    for k in range(2):
        for v in (lo[k], hi[k]):
            s = (v - c[k]) / r
            if abs(s) <= 1:
                base = math.acos(s) if k == 0 else math.asin(s)
                cands = (base, -base) if k == 0 else (base, math.pi - base)
                for t in cands:
                    t = a0 + (t - a0) % (2 * math.pi)
                    if a0 < t < a1:
                        cuts.add(t)
    cuts = sorted(cuts)
    x, w = gauss01(n_gauss(q) + 4)
    pts, wts = [], []
    for t0, t1 in zip(cuts[:-1], cuts[1:]):
        tm = 0.5 * (t0 + t1)
        pm = c + r * np.array([math.cos(tm), math.sin(tm)])
        if np.all(pm >= lo - 1e-15) and np.all(pm <= hi + 1e-15):
            t = t0 + (t1 - t0) * x
            pts.append(np.column_stack([c[0] + r * np.cos(t), c[1] + r * np.sin(t)]))
            wts.append(w * (t1 - t0) * r)
    if not pts:
        return QuadratureRule.empty(2, True)
    pts = np.concatenate(pts)
    normals = (pts - c) / r
    if inward:
        normals = -normals
    return QuadratureRule(pts, np.concatenate(wts), normals)


_BOX_SIDE_DATA = {
    "left": ((0.0, 0.0), (0.0, 1.0), (-1.0, 0.0)),
    "right": ((1.0, 0.0), (1.0, 1.0), (1.0, 0.0)),
    "bottom": ((0.0, 0.0), (1.0, 0.0), (0.0, -1.0)),
    "top": ((0.0, 1.0), (1.0, 1.0), (0.0, 1.0)),
}


# -- trimmed domains ------------------------------------------------------------


@dataclass(frozen=True)
class TrimmedDomain:
    """Base class: a physical domain inside the unit interval or unit square."""

    eps: float = 0.0
    dim: int = field(default=2, init=False)

    #: fictitious-box sides that belong to the physical boundary
    box_sides: tuple[str, ...] = field(default=(), init=False)

    def contains(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        inside_box = np.all((x >= 0.0) & (x <= 1.0), axis=1)
        return inside_box & (self.signed_distance(x) > TRIM_TOL)

    def signed_distance(self, x) -> np.ndarray:  # positive inside
        raise NotImplementedError

    @property
    def measure(self) -> float:
        raise NotImplementedError

    def interior_rule(self, lo, hi, q: int, subdiv: int = 1) -> QuadratureRule:
        """Quadrature over ``T ∩ Omega`` for the box element ``T = [lo, hi]``."""
        lo, hi = np.atleast_1d(lo).astype(float), np.atleast_1d(hi).astype(float)
        if subdiv == 1:
            return self._interior(lo, hi, q)
        edges = [np.linspace(lo[k], hi[k], subdiv + 1) for k in range(self.dim)]
        rules = []
        for idx in np.ndindex(*(subdiv,) * self.dim):
            slo = np.array([edges[k][i] for k, i in enumerate(idx)])
            shi = np.array([edges[k][i + 1] for k, i in enumerate(idx)])
            rules.append(self._interior(slo, shi, q))
        return QuadratureRule.concat(rules, self.dim)

    def volume_fraction(self, lo, hi) -> float:
        lo, hi = np.atleast_1d(lo).astype(float), np.atleast_1d(hi).astype(float)
        return min(1.0, self.interior_rule(lo, hi, 2).total / float(np.prod(hi - lo)))

    def boundary_rule(self, lo, hi, q: int, box_sides=()) -> QuadratureRule:
        """Quadrature with outward normals over trim curves and chosen box sides in ``T``."""
        lo, hi = np.atleast_1d(lo).astype(float), np.atleast_1d(hi).astype(float)
        rules = [self._trim_boundary(lo, hi, q)]
        for side in box_sides:
            if side not in self.box_sides:
                raise ValueError(f"side {side!r} is not part of the physical boundary")
            rules.append(self._box_side_rule(side, lo, hi, q))
        return QuadratureRule.concat(rules, self.dim, with_normals=True)

    def _box_side_rule(self, side, lo, hi, q):
        a, b, nrm = _BOX_SIDE_DATA[side]
        return segment_rule(a, b, lo, hi, q, nrm)

    def _interior(self, lo, hi, q):
        raise NotImplementedError

    def _trim_boundary(self, lo, hi, q):
        raise NotImplementedError


@dataclass(frozen=True)
class Interval1D(TrimmedDomain):
    """``Omega = (0, x_end)`` inside ``(0, 1)``; ``x_end = 0.75 + eps`` by default."""

    x_end: float | None = None
    dim: int = field(default=1, init=False)

    def __post_init__(self):
        if self.x_end is None:
            object.__setattr__(self, "x_end", 0.75 + self.eps)
        if not 0 < self.x_end <= 1:
            raise ValueError("x_end must lie in (0, 1]")
        object.__setattr__(self, "box_sides", ("left",) if self.trimmed else ("left", "right"))

    @property
    def trimmed(self) -> bool:
        return self.x_end < 1.0

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        if not self.trimmed:
            return (x >= 0.0) & (x <= 1.0)
        return (x >= 0.0) & (self.x_end - x > TRIM_TOL)

    def signed_distance(self, x) -> np.ndarray:
        return self.x_end - np.asarray(x, dtype=float).reshape(-1)

    @property
    def measure(self) -> float:
        return self.x_end

    def _interior(self, lo, hi, q):
        b = min(hi[0], self.x_end)
        if b <= lo[0]:
            return QuadratureRule.empty(1)
        return box_rule(lo, np.array([b]), q)

    def _trim_boundary(self, lo, hi, q):
        if self.trimmed and lo[0] < self.x_end <= hi[0]:
            return QuadratureRule(np.array([[self.x_end]]), np.array([1.0]), np.array([[1.0]]))
        return QuadratureRule.empty(1, True)

    def _box_side_rule(self, side, lo, hi, q):
        # the end point belongs to the single element touching it
        if side == "left" and lo[0] == 0.0:
            return QuadratureRule(np.array([[0.0]]), np.array([1.0]), np.array([[-1.0]]))
        if side == "right" and hi[0] == 1.0:
            return QuadratureRule(np.array([[1.0]]), np.array([1.0]), np.array([[1.0]]))
        return QuadratureRule.empty(1, True)


@dataclass(frozen=True)
class UnitSquare(TrimmedDomain):
    """Untrimmed unit square."""

    def __post_init__(self):
        object.__setattr__(self, "box_sides", BOX_SIDES)

    def signed_distance(self, x) -> np.ndarray:
        x = np.atleast_2d(x)
        return np.min(np.minimum(x, 1 - x), axis=1) + 1.0

    @property
    def measure(self) -> float:
        return 1.0

    def _interior(self, lo, hi, q):
        return box_rule(lo, hi, q)

    def _trim_boundary(self, lo, hi, q):
        return QuadratureRule.empty(2, True)


@dataclass(frozen=True)
class RotatedSquare(TrimmedDomain):
    """Square of half side ``0.25 + eps`` rotated by ``angle`` and shifted to ``center``."""

    angle: float = 0.85
    center: tuple[float, float] = (0.5, 0.5)

    @property
    def half_side(self) -> float:
        return 0.25 + self.eps

    @functools.cached_property
    def rotation(self) -> np.ndarray:
        c, s = math.cos(self.angle), math.sin(self.angle)
        return np.array([[c, -s], [s, c]])

    def to_reference(self, x) -> np.ndarray:
        """Inverse of ``F(xh) = R xh + tau``."""
        return (np.atleast_2d(x) - np.asarray(self.center)) @ self.rotation

    def to_physical(self, xh) -> np.ndarray:
        return np.atleast_2d(xh) @ self.rotation.T + np.asarray(self.center)

    @functools.cached_property
    def corners(self) -> np.ndarray:
        s = self.half_side
        return self.to_physical(np.array([[-s, -s], [s, -s], [s, s], [-s, s]]))

    @functools.cached_property
    def half_planes(self) -> list[tuple[np.ndarray, float]]:
        out = []
        for k in range(4):
            a, b = self.corners[k], self.corners[(k + 1) % 4]
            nrm = np.array([b[1] - a[1], a[0] - b[0]])
            nrm /= np.hypot(*nrm)
            out.append((nrm, float(nrm @ a)))
        return out

    def signed_distance(self, x) -> np.ndarray:
        xh = self.to_reference(x)
        return self.half_side - np.max(np.abs(xh), axis=1)

    @property
    def measure(self) -> float:
        return (2 * self.half_side) ** 2

    def clipped_polygon(self, lo, hi) -> np.ndarray:
        poly = box_polygon(lo, hi)
        for nrm, d in self.half_planes:
            poly = clip_polygon(poly, nrm, d)
        return poly

    def _interior(self, lo, hi, q):
        poly = self.clipped_polygon(lo, hi)
        if len(poly) < 3:
            return QuadratureRule.empty(2)
        if abs(polygon_area(poly) - np.prod(hi - lo)) <= 1e-15 * np.prod(hi - lo):
            return box_rule(lo, hi, q)
        return polygon_rule(poly, q)

    def _trim_boundary(self, lo, hi, q):
        rules = []
        for k, (nrm, _) in enumerate(self.half_planes):
            rules.append(segment_rule(self.corners[k], self.corners[(k + 1) % 4], lo, hi, q, nrm))
        return QuadratureRule.concat(rules, 2, with_normals=True)


@dataclass(frozen=True)
class PerforatedPlate(TrimmedDomain):
    """Unit square with a centered hole of radius ``0.125 sqrt(2) + eps``."""

    center: tuple[float, float] = (0.5, 0.5)

    def __post_init__(self):
        object.__setattr__(self, "box_sides", BOX_SIDES)

    @property
    def radius(self) -> float:
        return 0.125 * math.sqrt(2) + self.eps

    def signed_distance(self, x) -> np.ndarray:
        x = np.atleast_2d(x)
        return np.hypot(*(x - np.asarray(self.center)).T) - self.radius

    @property
    def measure(self) -> float:
        return 1.0 - math.pi * self.radius ** 2

    def _interior(self, lo, hi, q):
        poly = box_polygon(lo, hi)
        c = np.asarray(self.center)
        if _dist_point_polygon(poly, c) >= self.radius:
            return box_rule(lo, hi, q)
        return polygon_minus_disk_rule(poly, c, self.radius, q)

    def _trim_boundary(self, lo, hi, q):
        return arc_rule(self.center, self.radius, 0.0, 2 * math.pi, lo, hi, q)


@dataclass(frozen=True)
class ExtrudedPlate(TrimmedDomain):
    """Unit square minus a stadium: arcs of radius ``0.125 - eps`` around ``c1``, ``c2``
    joined by vertical segments."""

    c1: tuple[float, float] = (0.5, 0.25)
    c2: tuple[float, float] = (0.5, 0.75)

    def __post_init__(self):
        object.__setattr__(self, "box_sides", BOX_SIDES)

    @property
    def radius(self) -> float:
        return 0.125 - self.eps

    def signed_distance(self, x) -> np.ndarray:
        x = np.atleast_2d(x)
        a, b = np.asarray(self.c1), np.asarray(self.c2)
        d = b - a
        t = np.clip((x - a) @ d / (d @ d), 0.0, 1.0)
        nearest = a + t[:, None] * d
        return np.hypot(*(x - nearest).T) - self.radius

    @property
    def measure(self) -> float:
        r = self.radius
        return 1.0 - math.pi * r ** 2 - 2 * r * (self.c2[1] - self.c1[1])

    def _interior(self, lo, hi, q):
        poly = box_polygon(lo, hi)
        if self._box_clear(lo, hi):
            return box_rule(lo, hi, q)
        y1, y2, r = self.c1[1], self.c2[1], self.radius
        xm = self.c1[0]
        bottom = clip_polygon(poly, (0.0, 1.0), y1)
        top = clip_polygon(poly, (0.0, -1.0), -y2)
        middle = clip_polygon(clip_polygon(poly, (0.0, -1.0), -y1), (0.0, 1.0), y2)
        rules = [polygon_minus_disk_rule(bottom, self.c1, r, q),
                 polygon_minus_disk_rule(top, self.c2, r, q),
                 polygon_rule(clip_polygon(middle, (1.0, 0.0), xm - r), q),
                 polygon_rule(clip_polygon(middle, (-1.0, 0.0), -(xm + r)), q)]
        return QuadratureRule.concat(rules, 2)

    def _box_clear(self, lo, hi) -> bool:
        # distance between the box and the stadium spine exceeds the radius
        a, b = np.asarray(self.c1), np.asarray(self.c2)
        dx = max(lo[0] - a[0], 0.0, a[0] - hi[0])
        dy = max(lo[1] - b[1], 0.0, a[1] - hi[1])
        return math.hypot(dx, dy) >= self.radius

    def _trim_boundary(self, lo, hi, q):
        r, xm = self.radius, self.c1[0]
        y1, y2 = self.c1[1], self.c2[1]
        rules = [
            arc_rule(self.c2, r, 0.0, math.pi, lo, hi, q),
            arc_rule(self.c1, r, math.pi, 2 * math.pi, lo, hi, q),
            segment_rule((xm - r, y1), (xm - r, y2), lo, hi, q, (1.0, 0.0)),
            segment_rule((xm + r, y1), (xm + r, y2), lo, hi, q, (-1.0, 0.0)),
        ]
        return QuadratureRule.concat(rules, 2, with_normals=True)


DOMAINS = {
    "interval": Interval1D,
    "rotated_square": RotatedSquare,
    "extruded_plate": ExtrudedPlate,
    "perforated_plate": PerforatedPlate,
    "unit_square": UnitSquare,
}


def make_domain(kind: str, eps: float, **kwargs) -> TrimmedDomain:
    try:
        cls = DOMAINS[kind]
    except KeyError:
        raise ValueError(f"unknown domain {kind!r}; expected one of {sorted(DOMAINS)}") from None
    return cls(eps=eps, **kwargs)
