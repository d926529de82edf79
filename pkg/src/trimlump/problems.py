"""Manufactured solutions ``u(x, t) = w(x) sin(n pi t)`` on the four test geometries."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import RotatedSquare, TrimmedDomain, make_domain, segment_rule


@dataclass(frozen=True)
class OscillatoryProfile:
    """``q(x) = C^((x/x_r)^a) x sin(pi / (x_l - x))`` with ``x_l = 1/w + x_r``."""

    x_r: float
    C: float = 8.0
    a: float = 8.0
    w: float = 15.0

    @property
    def x_l(self) -> float:
        return 1.0 / self.w + self.x_r

    def derivatives(self, x):
        """``(q, q', q'')`` at ``x``."""
        x = np.asarray(x, dtype=float)
        if np.any(x >= self.x_l - 1e-12):
            raise ValueError("profile evaluated beyond its singular point")
        lnC, a, xr = math.log(self.C), self.a, self.x_r
        phi = lnC * (x / xr) ** a
        dphi = a * lnC * x ** (a - 1) / xr ** a
        ddphi = a * (a - 1) * lnC * x ** (a - 2) / xr ** a
        E = np.exp(phi)
        dE = E * dphi
        ddE = E * (ddphi + dphi ** 2)
        d = self.x_l - x
        th = math.pi / d
        dth = math.pi / d ** 2
        ddth = 2 * math.pi / d ** 3
        S, Cs = np.sin(th), np.cos(th)
        dS = Cs * dth
        ddS = -S * dth ** 2 + Cs * ddth
        P, dP, ddP = x * S, S + x * dS, 2 * dS + x * ddS
        return E * P, dE * P + E * dP, ddE * P + 2 * dE * dP + E * ddP

    def __call__(self, x):
        return self.derivatives(x)[0]


@dataclass
class ManufacturedProblem:
    """Exact solution, forcing and boundary data of a wave problem with
    ``u(x, t) = w(x) sin(n pi t)``.

    ``profile``, ``gradient`` and ``laplacian`` act on points of shape ``(m, d)``.
    Interface line sources (jumps of the normal derivative inside the domain)
    are listed in ``interfaces`` as ``(a, b, normal, jump)`` with the jump
    of ``grad w . normal`` given as a callable of the points.
    """

    name: str
    domain: TrimmedDomain
    profile: callable
    gradient: callable
    laplacian: callable
    n: int = 3
    dirichlet_sides: tuple[str, ...] = ()
    neumann_sides: tuple[str, ...] = ()
    degree: int = 3
    continuity: int = 2
    n_el: int = 256
    params: dict = field(default_factory=dict)
    interfaces: list = field(default_factory=list)

    @property
    def omega(self) -> float:
        return self.n * math.pi

    def u(self, x, t):
        return self.profile(x) * math.sin(self.omega * t)

    def u_t(self, x, t):
        return self.omega * self.profile(x) * math.cos(self.omega * t)

    def u0(self, x):
        return 0.0 * self.profile(x)

    def v0(self, x):
        return self.omega * self.profile(x)

    def forcing_profile(self, x):
        """``g`` with ``f(x, t) = u_tt - Laplace u = g(x) sin(n pi t)``."""
        return -self.omega ** 2 * self.profile(x) - self.laplacian(x)

    def f(self, x, t):
        return self.forcing_profile(x) * math.sin(self.omega * t)

    def flux_profile(self, x, normals):
        return np.einsum("ij,ij->i", self.gradient(x), normals)

    def h(self, x, normals, t):
        return self.flux_profile(x, normals) * math.sin(self.omega * t)

    def spatial_load(self, space, stabilized: bool = False) -> np.ndarray:
        """``b`` such that the load vector is ``F(t) = sin(n pi t) b``."""
        from .assembly import element_tables, field_rule_params, spatial_load

        b = spatial_load(space, self.forcing_profile, self.flux_profile, stabilized)
        if self.interfaces:
            lookup = space.global_to_reduced(stabilized)
            q = field_rule_params(space)[0]
            for e, cell in sorted(space.cells.items()):
                for a, c, nrm, jump in self.interfaces:
                    # each line segment is integrated once, on the element whose
                    # half-open range along the normal contains it
                    k = int(np.argmax(np.abs(nrm)))
                    if not cell.lo[k] <= a[k] < cell.hi[k]:
                        continue
                    rule = segment_rule(a, c, cell.lo, cell.hi, q, nrm)
                    keep = space.domain.contains(rule.points) if len(rule) else []
                    if not np.any(keep):
                        continue
                    pts, w = rule.points[keep], rule.weights[keep]
                    conn, vals, _ = element_tables(space, e, type(rule)(pts, w), stabilized, deriv=False)
                    loc = lookup[conn]
                    m = loc >= 0
                    # -Laplace u carries -[dw/dn] on the interface
                    np.add.at(b, loc[m], (vals.T @ (w * -jump(pts)))[m])
        return b


def _q_pair(q: OscillatoryProfile, x):
    """``Q(x) = q(x) + q(-x)`` and its first two derivatives."""
    a0, a1, a2 = q.derivatives(x)
    b0, b1, b2 = q.derivatives(-x)
    return a0 + b0, a1 - b1, a2 + b2


def ex1d(eps: float = 1e-6, C: float = 8.0, a: float = 8.0, w: float = 15.0, n: int = 3) -> ManufacturedProblem:
    domain = make_domain("interval", eps)
    q = OscillatoryProfile(0.75 + eps, C, a, w)

    def profile(x):
        return q(np.asarray(x)[:, 0])

    def gradient(x):
        return q.derivatives(np.asarray(x)[:, 0])[1][:, None]

    def laplacian(x):
        return q.derivatives(np.asarray(x)[:, 0])[2]

    return ManufacturedProblem("ex1d", domain, profile, gradient, laplacian, n,
                               dirichlet_sides=("left",), neumann_sides=(),
                               degree=3, continuity=2, n_el=256,
                               params={"eps": eps, "x_r": q.x_r, "x_l": q.x_l, "C": C, "a": a, "w": w, "q": q})


def rot_square(eps: float = 1e-6, angle: float = 0.85, C: float = 8.0, a: float = 8.0, w: float = 10.0,
               n: int = 3) -> ManufacturedProblem:
    domain: RotatedSquare = make_domain("rotated_square", eps, angle=angle)
    s = domain.half_side
    q = OscillatoryProfile(s, C, a, w)
    R = domain.rotation

    def parts(x):
        xh = domain.to_reference(np.atleast_2d(x))
        return _q_pair(q, xh[:, 0]), _q_pair(q, xh[:, 1])

    def profile(x):
        (X, _, _), (Y, _, _) = parts(x)
        return X * Y

    def gradient(x):
        (X, dX, _), (Y, dY, _) = parts(x)
        return np.column_stack([dX * Y, X * dY]) @ R.T

    def laplacian(x):
        (X, _, ddX), (Y, _, ddY) = parts(x)
        return ddX * Y + X * ddY

    return ManufacturedProblem("rot_square", domain, profile, gradient, laplacian, n,
                               degree=3, continuity=2, n_el=128,
                               params={"eps": eps, "s": s, "angle": angle, "C": C, "a": a, "w": w, "q": q})


def plate(eps: float = 1e-7, m: float = 100.0, sigma: float = 0.05, n: int = 3) -> ManufacturedProblem:
    domain = make_domain("extruded_plate", eps)
    r = domain.radius
    xm = domain.c1[0]

    def radial(d):
        G = np.exp(-((d - r) / sigma) ** 2)
        dG = -2 * (d - r) / sigma ** 2 * G
        ddG = (-2 / sigma ** 2 + 4 * (d - r) ** 2 / sigma ** 4) * G
        S, Cs = np.sin(m * d), np.cos(m * d)
        return G * S, dG * S + m * G * Cs, ddG * S + 2 * m * dG * Cs - m * m * G * S

    def terms(x):
        x0 = np.atleast_2d(x)[:, 0]
        d = np.abs(x0 - xm)
        sg = np.sign(x0 - xm)
        H, dH, ddH = radial(d)
        P, dP = x0 * (x0 - 1), 2 * x0 - 1
        return P, dP, H, sg * dH, ddH

    def profile(x):
        P, _, H, _, _ = terms(x)
        return P * H

    def gradient(x):
        P, dP, H, dHx, _ = terms(x)
        return np.column_stack([dP * H + P * dHx, np.zeros_like(P)])

    def laplacian(x):
        P, dP, H, dHx, ddH = terms(x)
        return 2 * H + 2 * dP * dHx + P * ddH

    def jump(x):
        # [dw/dx] across x = xm: P(xm) * 2 * H'(0)
        P = np.atleast_2d(x)[:, 0] * (np.atleast_2d(x)[:, 0] - 1)
        return 2 * P * radial(np.zeros(1))[1][0]

    lower = ((xm, 0.0), (xm, domain.c1[1] - r), (1.0, 0.0), jump)
    upper = ((xm, domain.c2[1] + r), (xm, 1.0), (1.0, 0.0), jump)
    return ManufacturedProblem("plate", domain, profile, gradient, laplacian, n,
                               dirichlet_sides=("left", "right"), neumann_sides=("bottom", "top"),
                               degree=2, continuity=1, n_el=48,
                               params={"eps": eps, "r": r, "m": m, "sigma": sigma},
                               interfaces=[lower, upper])


def perforated(eps: float = 1e-6, sigma: float = 0.5, k: float = 10.0, eta2: float = 0.005,
               n: int = 3) -> ManufacturedProblem:
    domain = make_domain("perforated_plate", eps)
    c = np.asarray(domain.center, dtype=float)
    r = domain.radius
    eta = math.sqrt(eta2)

    def radial(rho):
        E = np.exp(-(rho / sigma) ** 2)
        dE = -2 * rho / sigma ** 2 * E
        ddE = (-2 / sigma ** 2 + 4 * rho ** 2 / sigma ** 4) * E
        z = rho - 0.9 * r
        g = k * np.exp(-(z / eta) ** 2)
        dg = -2 * z / eta ** 2 * g
        ddg = (-2 / eta ** 2 + 4 * z ** 2 / eta ** 4) * g
        S, Cs = np.sin(g), np.cos(g)
        dS = Cs * dg
        ddS = -S * dg ** 2 + Cs * ddg
        return E * S, dE * S + E * dS, ddE * S + 2 * dE * dS + E * ddS

    def terms(x):
        x = np.atleast_2d(x)
        dx = x - c
        rho = np.hypot(dx[:, 0], dx[:, 1])
        Rv, dR, ddR = radial(rho)
        P, dP = x[:, 0] * (x[:, 0] - 1), 2 * x[:, 0] - 1
        e = dx / rho[:, None]
        return P, dP, Rv, dR, ddR, rho, e

    def profile(x):
        P, _, Rv, *_ = terms(x)
        return P * Rv

    def gradient(x):
        P, dP, Rv, dR, _, _, e = terms(x)
        return (P * dR)[:, None] * e + np.column_stack([dP * Rv, np.zeros_like(P)])

    def laplacian(x):
        P, dP, Rv, dR, ddR, rho, e = terms(x)
        return 2 * Rv + 2 * dP * dR * e[:, 0] + P * (ddR + dR / rho)

    return ManufacturedProblem("perforated", domain, profile, gradient, laplacian, n,
                               dirichlet_sides=("left", "right"), neumann_sides=("bottom", "top"),
                               degree=3, continuity=2, n_el=56,
                               params={"eps": eps, "r": r, "sigma": sigma, "k": k, "eta2": eta2})


EXAMPLES = {"ex1d": ex1d, "rot_square": rot_square, "plate": plate, "perforated": perforated}
DEFAULT_EPS = {"ex1d": 1e-6, "rot_square": 1e-6, "plate": 1e-7, "perforated": 1e-6}


def make_problem(example: str, eps: float | None = None, **kw) -> ManufacturedProblem:
    try:
        factory = EXAMPLES[example]
    except KeyError:
        raise ValueError(f"unknown example {example!r}; expected one of {sorted(EXAMPLES)}") from None
    if eps is None:
        eps = DEFAULT_EPS[example]
    if not eps > 0:
        raise ValueError("eps must be positive")
    return factory(eps, **kw)


def exact_modes_1d(length: float, count: int):
    """Eigenvalues and L2-normalized eigenfunctions of ``-u''`` on ``(0, L)`` with
    ``u(0) = 0`` and ``u'(L) = 0``."""
    if not length > 0:
        raise ValueError("length must be positive")
    j = np.arange(1, count + 1)
    k = (2 * j - 1) * math.pi / (2 * length)
    lam = k ** 2
    amp = math.sqrt(2.0 / length)

    def modes(x, deriv: int = 0):
        x = np.asarray(x, dtype=float).reshape(-1, 1)
        if deriv == 0:
            return amp * np.sin(k * x)
        if deriv == 1:
            return amp * k * np.cos(k * x)
        raise ValueError("deriv must be 0 or 1")

    return lam, modes
