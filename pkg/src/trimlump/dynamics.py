"""Time integration of ``M u'' + K u = f(t)`` and exact semi-discrete solutions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.integrate as si
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .eigen import EigenDecomposition, solve_gevp

BLOWUP = 1e12
SINC_SERIES = 1e-4


class StabilityError(RuntimeError):
    """Explicit integration diverged."""

    def __init__(self, message, step: int, time: float):
        super().__init__(message)
        self.step = step
        self.time = time


class ResonanceError(ValueError):
    pass


def sinc(x):
    """Unnormalized ``sin(x)/x`` with a series near zero."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < SINC_SERIES
    xs = x[small]
    x2 = xs * xs
    out[small] = 1.0 - x2 / 6.0 + x2 * x2 / 120.0
    xb = x[~small]
    out[~small] = np.sin(xb) / xb
    return out if out.ndim else float(out)


def critical_timestep(lam_max: float) -> float:
    """``2 / omega_max`` for the undamped central difference scheme."""
    if not lam_max > 0:
        raise ValueError("largest eigenvalue must be positive")
    return 2.0 / math.sqrt(lam_max)


@dataclass
class IntegratorConfig:
    scheme: str = "central_difference"  # or "newmark"
    dt: float = 1e-3
    T: float = 3.0
    safeguard: float = 0.85
    beta: float = 0.25
    gamma: float = 0.5
    stride: int | None = None
    dt_critical: float | None = None

    def __post_init__(self):
        if self.scheme not in ("central_difference", "newmark"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if not self.dt > 0 or not self.T > 0:
            raise ValueError("dt and T must be positive")
        if not 0 < self.safeguard <= 1:
            raise ValueError("safeguard must lie in (0, 1]")
        if self.stride is not None and self.stride < 1:
            raise ValueError("stride must be >= 1")

    @classmethod
    def from_cfl(cls, lam_max: float, T: float, safeguard: float = 0.85, **kw) -> IntegratorConfig:
        """Largest uniform step dividing ``T`` that satisfies ``dt <= safeguard * dt_c``."""
        dtc = critical_timestep(lam_max)
        n = math.ceil(T / (safeguard * dtc) * (1 - 1e-14))
        return cls(dt=T / n, T=T, safeguard=safeguard, dt_critical=dtc, **kw)

    @property
    def n_steps(self) -> int:
        return max(1, round(self.T / self.dt))

    @property
    def output_stride(self) -> int:
        return self.stride if self.stride is not None else max(1, self.n_steps // 100)


@dataclass
class Trajectory:
    times: np.ndarray
    u: np.ndarray  # (n_out, n)
    v: np.ndarray | None = None
    steps: int = 0
    info: dict = field(default_factory=dict)

    def to_csv(self, path) -> None:
        n = self.u.shape[1]
        header = ",".join(["t"] + [f"dof_{i}" for i in range(n)])
        np.savetxt(path, np.column_stack([self.times, self.u]), fmt="%.17g", delimiter=",",
                   header=header, comments="")


def _load_fn(load, n):
    if load is None:
        zero = np.zeros(n)
        return lambda t: zero
    return load


def central_difference(K, M, load, u0, v0, config: IntegratorConfig) -> Trajectory:
    """Explicit central difference with a lumped mass.

    Diagonal masses are inverted entrywise; block-diagonal lumped masses are
    factorized once.
    """
    K = sp.csr_matrix(K)
    Md = sp.csr_matrix(M)
    if (Md - sp.diags(Md.diagonal())).count_nonzero():
        lu_m = spla.splu(sp.csc_matrix(Md))
        mass_solve = lu_m.solve
    else:
        with np.errstate(divide="ignore"):
            minv = 1.0 / Md.diagonal()
        if np.any(~np.isfinite(minv)) or np.any(minv <= 0):
            raise ValueError("lumped mass must be positive")
        mass_solve = lambda r: minv * r  # noqa: E731
    if config.dt_critical is not None and config.dt > config.safeguard * config.dt_critical * (1 + 1e-12):
        raise ValueError("time step exceeds the safeguarded critical step")
    n = K.shape[0]
    f = _load_fn(load, n)
    dt, nsteps, stride = config.dt, config.n_steps, config.output_stride
    u = np.asarray(u0, dtype=float).copy()
    v0 = np.asarray(v0, dtype=float)
    scale = max(np.abs(u).max(initial=0.0), dt * np.abs(v0).max(initial=0.0))
    limit = BLOWUP * (scale if scale > 0 else 1.0)
    acc = mass_solve(f(0.0) - K @ u)
    u_prev = u - dt * v0 + 0.5 * dt * dt * acc
    times, us, vs = [0.0], [u.copy()], [v0.copy()]
    dt2 = dt * dt
    for k in range(nsteps):
        t = k * dt
        u_next = 2.0 * u - u_prev + dt2 * mass_solve(f(t) - K @ u)
        if not np.all(np.isfinite(u_next)) or np.abs(u_next).max(initial=0.0) > limit:
            raise StabilityError(f"central difference diverged at step {k + 1} (t={t + dt:.6g})",
                                 k + 1, t + dt)
        if (k + 1) % stride == 0 or k + 1 == nsteps:
            times.append((k + 1) * dt)
            us.append(u_next.copy())
            # velocity at t_{k+1} needs u_{k+2}; use the one-sided second-order formula
            vs.append((3.0 * u_next - 4.0 * u + u_prev) / (2.0 * dt))
        u_prev, u = u, u_next
    return Trajectory(np.array(times), np.array(us), np.array(vs), nsteps,
                      {"scheme": "central_difference", "dt": dt})


def newmark(K, M, load, u0, v0, config: IntegratorConfig, rtol: float = 1e-10) -> Trajectory:
    """Average-acceleration Newmark; one factorization of ``M + beta dt^2 K`` is reused."""
    K = sp.csc_matrix(K)
    M = sp.csc_matrix(M)
    n = K.shape[0]
    f = _load_fn(load, n)
    dt, nsteps, stride = config.dt, config.n_steps, config.output_stride
    beta, gam = config.beta, config.gamma
    S = sp.csc_matrix(M + beta * dt * dt * K)
    try:
        lu = spla.splu(S)
    except RuntimeError as exc:
        raise np.linalg.LinAlgError("Newmark system matrix is singular") from exc

    def solve(A, fact, b):
        x = fact.solve(b)
        nb = np.linalg.norm(b)
        for _ in range(3):
            r = b - A @ x
            if np.linalg.norm(r) <= rtol * nb or nb == 0.0:
                return x
            x += fact.solve(r)
        if np.linalg.norm(b - A @ x) > rtol * nb:
            raise np.linalg.LinAlgError("Newmark solve did not reach the residual tolerance")
        return x

    u = np.asarray(u0, dtype=float).copy()
    v = np.asarray(v0, dtype=float).copy()
    r0 = f(0.0) - K @ u
    a = solve(M, spla.splu(M), r0) if np.any(r0) else np.zeros(n)
    times, us, vs = [0.0], [u.copy()], [v.copy()]
    for k in range(nsteps):
        t1 = (k + 1) * dt
        pred_u = u + dt * v + (0.5 - beta) * dt * dt * a
        pred_v = v + (1.0 - gam) * dt * a
        a = solve(S, lu, f(t1) - K @ pred_u)
        u = pred_u + beta * dt * dt * a
        v = pred_v + gam * dt * a
        if (k + 1) % stride == 0 or k + 1 == nsteps:
            times.append(t1)
            us.append(u.copy())
            vs.append(v.copy())
    return Trajectory(np.array(times), np.array(us), np.array(vs), nsteps,
                      {"scheme": "newmark", "dt": dt})


def integrate(K, M, load, u0, v0, config: IntegratorConfig) -> Trajectory:
    if config.scheme == "central_difference":
        return central_difference(K, M, load, u0, v0, config)
    return newmark(K, M, load, u0, v0, config)


# -- exact semi-discrete solutions ------------------------------------------------------


@dataclass
class Rhs:
    """Right-hand side ``f(t) = b`` (constant) or ``sin(omega t) b`` (sinusoidal)."""

    kind: str = "zero"
    b: np.ndarray | None = None
    omega: float = 0.0

    def __post_init__(self):
        if self.kind not in ("zero", "constant", "sinusoidal"):
            raise ValueError(f"unknown rhs kind {self.kind!r}")
        if self.kind != "zero" and self.b is None:
            raise ValueError("constant/sinusoidal rhs needs a vector b")

    def __call__(self, t: float) -> np.ndarray:
        if self.kind == "zero":
            return 0.0 if self.b is None else np.zeros_like(self.b)
        if self.kind == "constant":
            return self.b
        return math.sin(self.omega * t) * self.b


def exact_semidiscrete(K, M, rhs: Rhs | None, u0, v0, t, decomposition: EigenDecomposition | None = None,
                       velocity: bool = False):
    """Exact solution of ``M u'' + K u = f(t)`` through the eigenbasis of (K, M).

    ``t`` may be a scalar or an array; the result has shape ``(n,)`` or
    ``(len(t), n)``.  With ``velocity=True`` the pair ``(u, u')`` is returned.
    """
    dec = decomposition if decomposition is not None else solve_gevp(K, M)
    rhs = rhs if rhs is not None else Rhs()
    U, lam = dec.vectors, dec.values
    Mm = dec.mass if dec.mass is not None else M
    c0 = U.T @ (Mm @ np.asarray(u0, dtype=float))
    cv = U.T @ (Mm @ np.asarray(v0, dtype=float))
    beta = U.T @ rhs.b if rhs.kind != "zero" else np.zeros_like(c0)
    if rhs.kind == "sinusoidal":
        w2 = rhs.omega ** 2
        close = np.abs(w2 - lam) <= 1e-10 * max(w2, np.abs(lam).max())
        if np.any(close):
            raise ResonanceError(f"forcing frequency^2 {w2:.6g} coincides with eigenvalue "
                                 f"{lam[close][0]:.6g}")
    scalar = np.ndim(t) == 0
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    om = np.sqrt(np.clip(lam, 0.0, None))
    out_u, out_v = [], []
    for tk in ts:
        cos_t = np.cos(om * tk)
        sc = sinc(om * tk)
        coef = cos_t * c0 + tk * sc * cv
        dcoef = -om * np.sin(om * tk) * c0 + cos_t * cv
        if rhs.kind == "constant":
            coef = coef + 0.5 * tk * tk * sinc(0.5 * om * tk) ** 2 * beta
            dcoef = dcoef + tk * sc * beta
        elif rhs.kind == "sinusoidal":
            w = rhs.omega
            denom = w * w - lam
            coef = coef + (w * tk * sc - math.sin(w * tk)) / denom * beta
            dcoef = dcoef + w * (cos_t - math.cos(w * tk)) / denom * beta
        out_u.append(U @ coef)
        out_v.append(U @ dcoef)
    u, v = np.array(out_u), np.array(out_v)
    if scalar:
        u, v = u[0], v[0]
    return (u, v) if velocity else u


def convolution_semidiscrete(decomposition: EigenDecomposition, f, u0, v0, t: float,
                             panels: int = 64, order: int = 12) -> np.ndarray:
    """Reference evaluation of the eigenbasis solution with the Duhamel integral
    computed by composite Gauss quadrature; ``f(tau)`` returns the load vector."""
    U, lam = decomposition.vectors, decomposition.values
    Mm = decomposition.mass
    om = np.sqrt(np.clip(lam, 0.0, None))
    c = np.cos(om * t) * (U.T @ (Mm @ u0)) + t * sinc(om * t) * (U.T @ (Mm @ v0))
    if t > 0:
        x, w = np.polynomial.legendre.leggauss(order)
        edges = np.linspace(0.0, t, panels + 1)
        for a, b in zip(edges[:-1], edges[1:]):
            taus = 0.5 * (b - a) * x + 0.5 * (a + b)
            for tau, wk in zip(taus, 0.5 * (b - a) * w):
                s = t - tau
                c = c + wk * s * sinc(om * s) * (U.T @ f(tau))
    return U @ c


def scalar_ode_solution(lam: float, u0: float, v0: float, f, t: float) -> float:
    """Solution of ``u'' + lam u = f(t)`` with adaptive quadrature for the forcing term."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    om = math.sqrt(lam)
    val = u0 * math.cos(om * t) + t * v0 * float(sinc(om * t))
    if f is not None and t != 0:
        integral, _ = si.quad(lambda tau: (t - tau) * float(sinc(om * (t - tau))) * f(tau), 0.0, t,
                              epsabs=1e-12, epsrel=1e-11, limit=500)
        val += integral
    return val
