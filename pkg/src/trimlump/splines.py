"""B-spline bases on uniform open knot vectors.

Univariate evaluation follows the classical Cox-de Boor triangle (The NURBS
Book, A2.2/A2.3).  Tensor-product spaces are built from one
:class:`KnotVector` per direction; the global numbering is lexicographic with
the first direction varying fastest.

The polynomial extension used by the stabilized assembly lives here as well:
the piece of a basis function on a source element is recovered by
interpolation at Chebyshev points of that element and can then be evaluated
anywhere.
"""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import chebyshev as cheb

MAX_DEGREE = 4


class DomainError(ValueError):
    """Evaluation point outside the fictitious domain."""


@dataclass(frozen=True)
class KnotVector:
    """Open knot vector with uniform breakpoints and uniform continuity.

    Interior breakpoints are repeated ``degree - continuity`` times, the end
    points ``degree + 1`` times.
    """

    degree: int
    continuity: int
    n_el: int
    a: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        if not 1 <= self.degree <= MAX_DEGREE:
            raise ValueError(f"degree must lie in [1, {MAX_DEGREE}], got {self.degree}")
        if not 0 <= self.continuity <= self.degree - 1:
            raise ValueError(f"continuity must lie in [0, {self.degree - 1}], got {self.continuity}")
        if self.n_el < 1:
            raise ValueError("need at least one element")
        if not self.b > self.a:
            raise ValueError("empty interval")

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.n_el

    @property
    def multiplicity(self) -> int:
        return self.degree - self.continuity

    @property
    def n_basis(self) -> int:
        return self.n_el * self.multiplicity + self.continuity + 1

    @functools.cached_property
    def breakpoints(self) -> np.ndarray:
        return np.linspace(self.a, self.b, self.n_el + 1)

    @functools.cached_property
    def knots(self) -> np.ndarray:
        p, m = self.degree, self.multiplicity
        bp = self.breakpoints
        parts = [np.full(p + 1, bp[0])]
        parts += [np.full(m, x) for x in bp[1:-1]]
        parts.append(np.full(p + 1, bp[-1]))
        return np.concatenate(parts)

    def element_bounds(self, e: int) -> tuple[float, float]:
        return self.a + e * self.h, self.a + (e + 1) * self.h

    def first_basis(self, e: int) -> int:
        """Index of the first of the ``degree + 1`` functions alive on element ``e``."""
        return e * self.multiplicity

    def span(self, e: int) -> int:
        return self.degree + e * self.multiplicity

    def find_element(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        e = np.floor((x - self.a) / self.h).astype(int)
        return np.clip(e, 0, self.n_el - 1)

    def element_values(self, e: int, x, deriv: int = 0) -> np.ndarray:
        """Values (or first derivatives) of the local functions of element ``e``.

        Returns an array of shape ``(len(x), degree + 1)``.  The recursion uses
        the knot span of ``e`` regardless of where ``x`` lies, so points outside
        the element receive the continuation of that polynomial piece.
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        p, U, s = self.degree, self.knots, self.span(e)
        if deriv == 0:
            return _cox_de_boor(U, p, s, x)
        if deriv != 1:
            raise ValueError("only deriv in {0, 1} is supported")
        low = _cox_de_boor(U, p - 1, s, x)  # functions s-p+1 .. s of degree p-1
        out = np.zeros((x.size, p + 1))
        for r in range(p + 1):
            i = s - p + r
            if r >= 1:
                den = U[i + p] - U[i]
                if den > 0:
                    out[:, r] += p * low[:, r - 1] / den
            if r <= p - 1:
                den = U[i + p + 1] - U[i + 1]
                if den > 0:
                    out[:, r] -= p * low[:, r] / den
        return out

    @functools.lru_cache(maxsize=None)
    def _chebyshev_coefficients(self, e: int) -> np.ndarray:
        p = self.degree
        xi = cheb.chebpts1(p + 1)
        lo, hi = self.element_bounds(e)
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        vals = self.element_values(e, mid + half * xi)
        coef = np.linalg.solve(cheb.chebvander(xi, p), vals)
        coef.setflags(write=False)
        return coef

    def extension_values(self, e: int, x, deriv: int = 0) -> np.ndarray:
        """Polynomial extension of the local pieces on element ``e`` evaluated at ``x``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        lo, hi = self.element_bounds(e)
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        coef = self._chebyshev_coefficients(e)
        if deriv == 1:
            coef = cheb.chebder(coef, axis=0) / half
        elif deriv != 0:
            raise ValueError("only deriv in {0, 1} is supported")
        deg = coef.shape[0] - 1
        return cheb.chebvander((x - mid) / half, deg) @ coef


def _cox_de_boor(U: np.ndarray, p: int, span: int, x: np.ndarray) -> np.ndarray:
    n = x.size
    N = np.zeros((n, p + 1))
    N[:, 0] = 1.0
    left = np.zeros((n, p + 1))
    right = np.zeros((n, p + 1))
    for j in range(1, p + 1):
        left[:, j] = x - U[span + 1 - j]
        right[:, j] = U[span + j] - x
        saved = np.zeros(n)
        for r in range(j):
            temp = N[:, r] / (right[:, r + 1] + left[:, j - r])
            N[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        N[:, j] = saved
    return N


@dataclass(frozen=True)
class SplineSpace:
    """Tensor product of univariate spaces over a box."""

    kvs: tuple[KnotVector, ...]

    def __post_init__(self):
        if len(self.kvs) not in (1, 2):
            raise ValueError("only 1D and 2D spaces are supported")

    @classmethod
    def uniform(cls, degree: int, continuity: int, n_el: int, dim: int = 1) -> "SplineSpace":
        kv = KnotVector(degree, continuity, n_el)
        return cls((kv,) * dim)

    @property
    def dim(self) -> int:
        return len(self.kvs)

    @property
    def degree(self) -> int:
        return self.kvs[0].degree

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(kv.n_basis for kv in self.kvs)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def mesh_shape(self) -> tuple[int, ...]:
        return tuple(kv.n_el for kv in self.kvs)

    @property
    def n_elements(self) -> int:
        return int(np.prod(self.mesh_shape))

    @property
    def n_local(self) -> int:
        return int(np.prod([kv.degree + 1 for kv in self.kvs]))

    @property
    def element_volume(self) -> float:
        return float(np.prod([kv.h for kv in self.kvs]))

    def lower(self) -> np.ndarray:
        return np.array([kv.a for kv in self.kvs])

    def upper(self) -> np.ndarray:
        return np.array([kv.b for kv in self.kvs])

    # -- element bookkeeping -------------------------------------------------

    def element_multi(self, e: int) -> tuple[int, ...]:
        return tuple(int(v) for v in np.unravel_index(e, self.mesh_shape, order="F"))

    def element_index(self, multi) -> int:
        return int(np.ravel_multi_index(tuple(multi), self.mesh_shape, order="F"))

    def element_bounds(self, e: int) -> tuple[np.ndarray, np.ndarray]:
        bounds = [kv.element_bounds(ed) for kv, ed in zip(self.kvs, self.element_multi(e))]
        return np.array([b[0] for b in bounds]), np.array([b[1] for b in bounds])

    def neighbors(self, e: int) -> list[int]:
        """Elements in the full 3^d - 1 neighborhood of ``e``."""
        multi = self.element_multi(e)
        out = []
        for shift in itertools.product((-1, 0, 1), repeat=self.dim):
            if not any(shift):
                continue
            cand = [m + s for m, s in zip(multi, shift)]
            if all(0 <= c < n for c, n in zip(cand, self.mesh_shape)):
                out.append(self.element_index(cand))
        return sorted(out)

    def connectivity(self, e: int) -> np.ndarray:
        """Global indices of the (p+1)^d functions alive on element ``e``."""
        local = [kv.first_basis(ed) + np.arange(kv.degree + 1)
                 for kv, ed in zip(self.kvs, self.element_multi(e))]
        if self.dim == 1:
            return local[0]
        ix, iy = np.meshgrid(local[0], local[1], indexing="ij")
        return (ix + self.shape[0] * iy).ravel(order="F")

    def basis_multi(self, i: int) -> tuple[int, ...]:
        return tuple(int(v) for v in np.unravel_index(i, self.shape, order="F"))

    def support_elements(self, i: int) -> list[int]:
        """Background elements on which basis function ``i`` does not vanish."""
        ranges = []
        for kv, ii in zip(self.kvs, self.basis_multi(i)):
            ranges.append([e for e in range(kv.n_el)
                           if kv.first_basis(e) <= ii <= kv.first_basis(e) + kv.degree])
        return sorted(self.element_index(c) for c in itertools.product(*ranges))

    # -- evaluation ------------------------------------------------------------

    def _tensor(self, factors, grads, deriv):
        """Combine per-direction (npts, p+1) tables into tensor tables."""
        if self.dim == 1:
            if deriv == 0:
                return factors[0]
            return grads[0][:, :, None]
        vx, vy = factors
        n = vx.shape[0]
        vals = (vx[:, :, None] * vy[:, None, :]).reshape(n, -1, order="F")
        if deriv == 0:
            return vals
        gx, gy = grads
        dx = (gx[:, :, None] * vy[:, None, :]).reshape(n, -1, order="F")
        dy = (vx[:, :, None] * gy[:, None, :]).reshape(n, -1, order="F")
        return np.stack([dx, dy], axis=-1)

    def element_basis(self, e: int, pts, deriv: int = 0, extend: bool = False) -> np.ndarray:
        """Local basis table of element ``e`` at points ``pts`` of shape (n, d).

        With ``extend=True`` the polynomial extension of the pieces living on
        ``e`` is used, so ``pts`` may lie outside the element.  Returns values of
        shape (n, n_local) or gradients of shape (n, n_local, d).
        """
        pts = np.asarray(pts, dtype=float).reshape(-1, self.dim)
        multi = self.element_multi(e)
        factors, grads = [], []
        for k, (kv, ed) in enumerate(zip(self.kvs, multi)):
            fn = kv.extension_values if extend else kv.element_values
            factors.append(fn(ed, pts[:, k], 0))
            if deriv:
                grads.append(fn(ed, pts[:, k], 1))
        return self._tensor(factors, grads, deriv)

    def _check_inside(self, x: np.ndarray):
        tol = 1e-14
        if np.any(x < self.lower() - tol) or np.any(x > self.upper() + tol):
            raise DomainError(f"point {x} outside the fictitious domain")

    def locate(self, x) -> int:
        x = np.asarray(x, dtype=float).reshape(self.dim)
        self._check_inside(x)
        return self.element_index([int(kv.find_element(xi)) for kv, xi in zip(self.kvs, x)])


def eval_basis(space: SplineSpace, x, deriv: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Indices and values (``deriv=0``) or gradients (``deriv=1``) at one point.

    Exactly (p+1)^d pairs are returned; the gradient array has shape
    ``(n_local, d)``.
    """
    if deriv not in (0, 1):
        raise ValueError("deriv must be 0 or 1")
    x = np.asarray(x, dtype=float).reshape(space.dim)
    e = space.locate(x)
    table = space.element_basis(e, x[None, :], deriv)[0]
    return space.connectivity(e), table


class LocalPolynomial:
    """Tensor polynomial agreeing with one basis function on a source element."""

    def __init__(self, space: SplineSpace, i: int, element: int):
        conn = space.connectivity(element)
        hits = np.flatnonzero(conn == i)
        if hits.size == 0:
            raise IndexError(f"basis function {i} is not alive on element {element}")
        self.space = space
        self.index = i
        self.element = element
        self._local = int(hits[0])
        multi = space.element_multi(element)
        bmulti = space.basis_multi(i)
        self.coefficients = tuple(
            kv._chebyshev_coefficients(ed)[:, bi - kv.first_basis(ed)]
            for kv, ed, bi in zip(space.kvs, multi, bmulti)
        )

    def __call__(self, x, deriv: int = 0) -> np.ndarray:
        pts = np.asarray(x, dtype=float).reshape(-1, self.space.dim)
        table = self.space.element_basis(self.element, pts, deriv, extend=True)
        return table[:, self._local]


def extract_extend(space: SplineSpace, i: int, source: int, x) -> float:
    """Value at ``x`` of the polynomial extension of ``B_i`` from element ``source``."""
    return float(LocalPolynomial(space, i, source)(x)[0])
