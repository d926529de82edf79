"""L2 errors on the physical domain and modal error bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize as so

from .assembly import Evaluator, field_evaluator
from .dynamics import Trajectory, scalar_ode_solution
from .eigen import EigenDecomposition

BOUND_SLACK = 1e-8
PANELS_PER_UNIT = 20


def l2_error(space, coeffs, exact, t: float | None = None, stabilized: bool = False,
             relative: bool = False, evaluator: Evaluator | None = None) -> float:
    """``||u_h - u||`` over Omega; ``exact(points, t)`` or ``exact(points)`` if ``t`` is None."""
    ev = evaluator if evaluator is not None else field_evaluator(space, stabilized)
    ref = exact(ev.points) if t is None else exact(ev.points, t)
    return _l2_diff(ev, ev(coeffs), ref, relative)


def _l2_diff(ev: Evaluator, uh, ref, relative):
    err = math.sqrt(max(float(ev.weights @ (uh - ref) ** 2), 0.0))
    if relative:
        nrm = math.sqrt(float(ev.weights @ ref ** 2))
        return err / nrm if nrm > 0 else err
    return err


@dataclass
class ErrorSeries:
    times: np.ndarray
    values: np.ndarray
    relative: bool = False

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if np.any(self.values < 0):
            raise ValueError("errors are nonnegative")

    @property
    def max(self) -> float:
        return float(self.values.max())

    def to_csv(self, path) -> None:
        np.savetxt(path, np.column_stack([self.times, self.values]), fmt="%.17g", delimiter=",",
                   header="t,l2_error", comments="")


def error_series(evaluator: Evaluator, trajectory: Trajectory, exact, relative: bool = False) -> ErrorSeries:
    vals = [_l2_diff(evaluator, evaluator(u), exact(evaluator.points, t), relative)
            for t, u in zip(trajectory.times, trajectory.u)]
    return ErrorSeries(trajectory.times, vals, relative)


# -- modal bounds -----------------------------------------------------------------------


@dataclass
class ModalPair:
    """Exact and discrete eigenpair ``j`` tabulated on a quadrature of Omega."""

    j: int
    lam: float
    lam_h: float
    exact: np.ndarray
    discrete: np.ndarray
    points: np.ndarray
    weights: np.ndarray

    @property
    def omega(self) -> float:
        return math.sqrt(self.lam)

    @property
    def omega_h(self) -> float:
        return math.sqrt(self.lam_h)

    @property
    def mode_error(self) -> float:
        return math.sqrt(float(self.weights @ (self.discrete - self.exact) ** 2))

    def inner(self, values: np.ndarray) -> tuple[float, float]:
        """``((g, u_j), (g, u_j^h))`` for tabulated ``g``."""
        wg = self.weights * values
        return float(wg @ self.exact), float(wg @ self.discrete)


def modal_pair(j: int, exact_values, exact_modes, decomposition: EigenDecomposition,
               evaluator: Evaluator) -> ModalPair:
    """Pair the ``j``-th (1-based) exact and discrete eigenpairs with aligned signs.

    ``exact_modes(points)`` returns all exact eigenfunctions as columns.
    """
    exact_values = np.asarray(exact_values)
    if not 1 <= j <= min(exact_values.size, decomposition.size):
        raise IndexError(f"mode {j} is not available")
    ue = np.asarray(exact_modes(evaluator.points))[:, j - 1]
    uh = evaluator(decomposition.vectors[:, j - 1])
    if evaluator.weights @ (ue * uh) < 0:
        uh = -uh
    return ModalPair(j, float(exact_values[j - 1]), float(decomposition.values[j - 1]), ue, uh,
                     evaluator.points, evaluator.weights)


@dataclass
class BoundResult:
    bound: float
    measured: float
    terms: tuple = ()
    info: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.measured <= self.bound * (1 + BOUND_SLACK) + 1e-300


def _time_panels(t: float):
    n = max(1, math.ceil(PANELS_PER_UNIT * t))
    x, w = np.polynomial.legendre.leggauss(10)
    edges = np.linspace(0.0, t, n + 1)
    a, b = edges[:-1, None], edges[1:, None]
    taus = (0.5 * (b - a) * x + 0.5 * (a + b)).ravel()
    wts = (0.5 * (b - a) * w).ravel()
    return taus, wts


def max_sine_gap(om_h: float, om: float, t: float) -> float:
    """``max_{0 <= tau <= t} |sin(om_h tau) - sin(om tau)|``."""
    if t <= 0:
        return 0.0
    g = lambda s: abs(math.sin(om_h * s) - math.sin(om * s))  # noqa: E731
    n = max(2000, int(50 * max(om, om_h) * t))
    grid = np.linspace(0.0, t, n + 1)
    vals = np.abs(np.sin(om_h * grid) - np.sin(om * grid))
    k = int(np.argmax(vals))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, n)]
    res = so.minimize_scalar(lambda s: -g(s), bounds=(lo, hi), method="bounded",
                             options={"xatol": 1e-14})
    return max(float(vals.max()), g(float(res.x)))


def modal_bound_hyperbolic(pair: ModalPair, u0, v0, f, t: float, f_time=None) -> BoundResult:
    """Three-term bound on ``||d_j^h(t) u_j^h - d_j(t) u_j||`` for a consistent mass.

    ``u0`` and ``v0`` act on points; ``f(points, tau)`` is the forcing (or None).
    With ``f_time`` given, the forcing is separable, ``f_time(tau) * f(points)``.
    Returns the bound together with the measured modal error.
    """
    pts, w = pair.points, pair.weights
    u0v, v0v = u0(pts), v0(pts)
    nu0, nv0 = math.sqrt(w @ u0v ** 2), math.sqrt(w @ v0v ** 2)
    om, omh = pair.omega, pair.omega_h
    de = pair.mode_error
    cu, cuh = pair.inner(u0v)
    cv, cvh = pair.inner(v0v)

    if f is None:
        fint = 0.0
        fj = fjh = None
    elif f_time is not None:
        gv = f(pts)
        gn = math.sqrt(w @ gv ** 2)
        gj, gjh = pair.inner(gv)
        taus, tw = _time_panels(t)
        fint = gn * float(tw @ np.abs([f_time(tk) for tk in taus])) if t > 0 else 0.0
        fj = lambda tau: f_time(tau) * gj  # noqa: E731
        fjh = lambda tau: f_time(tau) * gjh  # noqa: E731
    else:
        taus, tw = _time_panels(t)
        fint = float(sum(wk * math.sqrt(w @ f(pts, tk) ** 2) for tk, wk in zip(taus, tw))) if t > 0 else 0.0
        fj = lambda tau: pair.inner(f(pts, tau))[0]  # noqa: E731
        fjh = lambda tau: pair.inner(f(pts, tau))[1]  # noqa: E731

    rel = (omh - om) / om
    t1 = nu0 * (2 * de + abs(math.cos(omh * t) - math.cos(om * t)))
    t2 = nv0 / om * (rel + 2 * de + abs(math.sin(omh * t) - math.sin(om * t)))
    t3 = fint / om * (rel + 2 * de + max_sine_gap(omh, om, t))

    d = scalar_ode_solution(pair.lam, cu, cv, fj, t)
    dh = scalar_ode_solution(pair.lam_h, cuh, cvh, fjh, t)
    measured = math.sqrt(max(float(w @ (dh * pair.discrete - d * pair.exact) ** 2), 0.0))
    return BoundResult(t1 + t2 + t3, measured, (t1, t2, t3),
                       {"d": d, "d_h": dh, "mode_error": de, "forcing_integral": fint})


def modal_bound_elliptic(pair: ModalPair, f) -> BoundResult:
    """Bound on ``||(f_j^h / lam_j^h) u_j^h - (f_j / lam_j) u_j||`` for ``a(u, v) = (f, v)``."""
    fv = f(pair.points)
    nf = math.sqrt(pair.weights @ fv ** 2)
    fj, fjh = pair.inner(fv)
    de = pair.mode_error
    bound = nf / pair.lam * ((pair.lam_h - pair.lam) / pair.lam + 2 * de)
    e = fjh / pair.lam_h * pair.discrete - fj / pair.lam * pair.exact
    measured = math.sqrt(max(float(pair.weights @ e ** 2), 0.0))
    return BoundResult(bound, measured, (bound,), {"mode_error": de})
