"""Galerkin assembly of stiffness/mass matrices, loads, lumping and L2 projection.

All matrices are returned over the *reduced* unknowns of a
:class:`~trimlump.space.DiscreteSpace`: active (or, when stabilized, large)
basis functions in ascending background order with Dirichlet functions
removed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .space import DiscreteSpace


class LumpingError(ValueError):
    """Row-sum lumping produced a nonpositive diagonal entry."""


def form_order(space: DiscreteSpace) -> int:
    """Quadrature order for the bilinear forms: 2p + 2."""
    return 2 * space.spline.degree + 2


def field_rule_params(space: DiscreteSpace) -> tuple[int, int]:
    """(order, subdivisions) used for loads, projections and error integrals."""
    p = space.spline.degree
    if space.spline.dim == 1:
        return 2 * p + 16, 4
    return 2 * p + 6, 2


def element_tables(space: DiscreteSpace, e: int, rule, stabilized: bool, deriv: bool = True):
    """Local basis tables of active element ``e`` on quadrature points ``rule``.

    Bad elements of a stabilized assembly use the extension of the functions
    living on their good neighbor.  Returns ``(conn, values, grads)``.
    """
    cell = space.cells[e]
    spline = space.spline
    if stabilized and not cell.good:
        src = cell.source
        vals = spline.element_basis(src, rule.points, 0, extend=True)
        grads = spline.element_basis(src, rule.points, 1, extend=True) if deriv else None
        return spline.connectivity(src), vals, grads
    vals = spline.element_basis(e, rule.points, 0)
    grads = spline.element_basis(e, rule.points, 1) if deriv else None
    return spline.connectivity(e), vals, grads


def _assemble(space: DiscreteSpace, stabilized: bool, q: int | None, dirichlet: bool):
    q = form_order(space) if q is None else q
    lookup = space.global_to_reduced(stabilized, dirichlet)
    n = int((lookup >= 0).sum())
    rows, cols, kvals, mvals = [], [], [], []
    for e in sorted(space.cells):
        rule = space.rule(e, q)
        if not len(rule):
            continue
        conn, vals, grads = element_tables(space, e, rule, stabilized)
        w = rule.weights
        Me = vals.T @ (w[:, None] * vals)
        Ke = np.einsum("qad,q,qbd->ab", grads, w, grads)
        loc = lookup[conn]
        keep = loc >= 0
        loc = loc[keep]
        if not loc.size:
            continue
        Me, Ke = Me[np.ix_(keep, keep)], Ke[np.ix_(keep, keep)]
        R, C = np.meshgrid(loc, loc, indexing="ij")
        rows.append(R.ravel())
        cols.append(C.ravel())
        kvals.append(Ke.ravel())
        mvals.append(Me.ravel())
    rows, cols = np.concatenate(rows), np.concatenate(cols)
    K = sp.csr_matrix((np.concatenate(kvals), (rows, cols)), shape=(n, n))
    M = sp.csr_matrix((np.concatenate(mvals), (rows, cols)), shape=(n, n))
    K.sum_duplicates()
    M.sum_duplicates()
    # exact symmetry
    K = ((K + K.T) * 0.5).tocsr()
    M = ((M + M.T) * 0.5).tocsr()
    return K, M


def assemble_consistent(space: DiscreteSpace, q: int | None = None, dirichlet: bool = True):
    """Stiffness and consistent mass over the active basis, integrating on ``T ∩ Omega``."""
    return _assemble(space, False, q, dirichlet)


def assemble_stabilized(space: DiscreteSpace, q: int | None = None, dirichlet: bool = True):
    """Stiffness and mass of the polynomial-extension stabilized space.

    Good elements are assembled as usual; a bad element ``T`` integrates the
    extensions of the functions of ``T' = S_h(T)`` over ``T ∩ Omega``.  Small
    DOFs never receive a contribution and are absent from the result.
    """
    return _assemble(space, True, q, dirichlet)


def assemble_load(space: DiscreteSpace, f=None, h=None, t: float = 0.0,
                  stabilized: bool = False) -> np.ndarray:
    """Load vector ``F_i = (f(t), B_i) + (h(t), B_i)_{Neumann}``.

    ``f(points, t)`` returns values at interior points, ``h(points, normals, t)``
    values at Neumann boundary points.
    """
    g = None if f is None else (lambda x: f(x, t))
    hn = None if h is None else (lambda x, nrm: h(x, nrm, t))
    return spatial_load(space, g, hn, stabilized)


def spatial_load(space: DiscreteSpace, g=None, hn=None, stabilized: bool = False) -> np.ndarray:
    """Time-independent load from an interior density ``g(x)`` and a Neumann flux ``hn(x, n)``."""
    lookup = space.global_to_reduced(stabilized)
    out = np.zeros(int((lookup >= 0).sum()))
    qf, sub = field_rule_params(space)
    qb = qf
    for e in sorted(space.cells):
        if g is not None:
            rule = space.rule(e, qf, sub)
            if len(rule):
                conn, vals, _ = element_tables(space, e, rule, stabilized, deriv=False)
                _scatter(out, lookup[conn], vals.T @ (rule.weights * g(rule.points)))
        if hn is not None:
            brule = space.boundary_rule(e, qb)
            if len(brule):
                conn, vals, _ = element_tables(space, e, brule, stabilized, deriv=False)
                _scatter(out, lookup[conn], vals.T @ (brule.weights * hn(brule.points, brule.normals)))
    return out


def _scatter(out, loc, vals):
    keep = loc >= 0
    np.add.at(out, loc[keep], vals[keep])


# -- lumping ------------------------------------------------------------------------


def lump(M, scheme: str = "rowsum", block_size: int = 4, space: DiscreteSpace | None = None,
         stabilized: bool = False):
    """Lumped approximation of a symmetric mass matrix.

    ``rowsum``: ``d_i = sum_j m_ij``; ``absrowsum``: ``d_i = sum_j |m_ij|``;
    ``block``: block-diagonal part of ``M`` over runs of ``block_size``
    consecutive unknowns along the first direction, each block symmetrically
    rescaled so that its row sums equal those of ``M``.  The block partition
    needs ``space`` to recover the tensor layout of the unknowns.
    """
    M = sp.csr_matrix(M)
    if scheme == "rowsum":
        d = np.asarray(M.sum(axis=1)).ravel()
        bad = np.flatnonzero(d <= 0)
        if bad.size:
            raise LumpingError(f"row-sum lumping gives nonpositive entries at {bad[:5].tolist()}; "
                               "use absrowsum")
        return sp.diags(d).tocsr()
    if scheme == "absrowsum":
        return sp.diags(np.asarray(abs(M).sum(axis=1)).ravel()).tocsr()
    if scheme == "block":
        return _block_lump(M, block_size, space, stabilized)
    raise ValueError(f"unknown lumping scheme {scheme!r}")


def block_partition(n: int, block_size: int, space: DiscreteSpace | None = None,
                    stabilized: bool = False) -> list[np.ndarray]:
    """Contiguous blocks of reduced unknowns that share their slow indices."""
    if space is None:
        return [np.arange(s, min(s + block_size, n)) for s in range(0, n, block_size)]
    dofs = space.dofs(stabilized)
    if dofs.size != n:
        raise ValueError("space does not match the matrix size")
    nx = space.spline.shape[0]
    ix, rest = dofs % nx, dofs // nx
    key = rest * nx + ix // block_size  # dofs are sorted, hence keys are nondecreasing
    bounds = np.flatnonzero(np.diff(key)) + 1
    return np.split(np.arange(n), bounds)


def _symmetric_scaling(B: np.ndarray, r: np.ndarray, tol: float = 1e-14, maxiter: int = 10000):
    s = np.sqrt(np.abs(r / np.diag(B)))
    for _ in range(maxiter):
        Bs = B @ s
        if np.any(Bs <= 0):
            raise LumpingError("block rescaling failed: nonpositive block row sums")
        s_new = np.sqrt(s * r / Bs)
        if np.max(np.abs(s_new - s)) <= tol * np.max(s_new):
            return s_new
        s = s_new
    return s


def _block_lump(M, block_size, space, stabilized):
    n = M.shape[0]
    r = np.asarray(M.sum(axis=1)).ravel()
    if np.any(r <= 0):
        raise LumpingError("block lumping needs positive row sums")
    blocks = []
    Md = M.tolil()
    for idx in block_partition(n, block_size, space, stabilized):
        B = Md[idx][:, idx].toarray()
        s = _symmetric_scaling(B, r[idx])
        blocks.append(s[:, None] * B * s[None, :])
    return sp.block_diag(blocks, format="csr")


# -- projection and helpers ------------------------------------------------------


def l2_project(space: DiscreteSpace, field, M=None, stabilized: bool = False) -> np.ndarray:
    """Coefficients of the L2 projection of ``field(points)`` onto the space."""
    if M is None:
        _, M = (assemble_stabilized if stabilized else assemble_consistent)(space)
    rhs = spatial_load(space, field, None, stabilized)
    lu = spla.splu(sp.csc_matrix(M))
    c = lu.solve(rhs)
    res = np.linalg.norm(M @ c - rhs)
    if res > 1e-10 * max(np.linalg.norm(rhs), 1e-300):
        c += lu.solve(rhs - M @ c)
    return c


def sparsity(A) -> set[tuple[int, int]]:
    A = sp.coo_matrix(A)
    nz = A.data != 0
    return set(zip(A.row[nz].tolist(), A.col[nz].tolist()))


def embed_pattern(A, dofs: np.ndarray) -> set[tuple[int, int]]:
    """Sparsity of ``A`` (over unknowns ``dofs``) expressed in background indices."""
    return {(int(dofs[i]), int(dofs[j])) for i, j in sparsity(A)}


def write_coo(path, A) -> None:
    """Coordinate dump: ``row col value`` per line, 1-based, ``%.17g``."""
    A = sp.coo_matrix(A)
    order = np.lexsort((A.col, A.row))
    with open(path, "w", encoding="utf-8") as fh:
        for k in order:
            fh.write(f"{A.row[k] + 1} {A.col[k] + 1} {A.data[k]:.17g}\n")


def read_coo(path, n: int | None = None):
    data = np.loadtxt(path, ndmin=2)
    rows, cols = data[:, 0].astype(int) - 1, data[:, 1].astype(int) - 1
    n = n if n is not None else int(max(rows.max(), cols.max()) + 1)
    return sp.csr_matrix((data[:, 2], (rows, cols)), shape=(n, n))


@dataclass
class Evaluator:
    """Sparse map from reduced coefficients to values at field quadrature points."""

    points: np.ndarray
    weights: np.ndarray
    matrix: sp.csr_matrix

    def __call__(self, coeffs: np.ndarray) -> np.ndarray:
        return self.matrix @ coeffs


def field_evaluator(space: DiscreteSpace, stabilized: bool = False) -> Evaluator:
    """Quadrature points over Omega with the table evaluating a discrete function there.

    On bad elements of a stabilized space the function is the combination of
    extended basis functions, matching the stabilized Galerkin space.
    """
    lookup = space.global_to_reduced(stabilized)
    n = int((lookup >= 0).sum())
    qf, sub = field_rule_params(space)
    pts, wts, rows, cols, vals_all = [], [], [], [], []
    offset = 0
    for e in sorted(space.cells):
        rule = space.rule(e, qf, sub)
        if not len(rule):
            continue
        conn, vals, _ = element_tables(space, e, rule, stabilized, deriv=False)
        loc = lookup[conn]
        keep = loc >= 0
        npts = len(rule)
        R, C = np.meshgrid(np.arange(offset, offset + npts), loc[keep], indexing="ij")
        rows.append(R.ravel())
        cols.append(C.ravel())
        vals_all.append(vals[:, keep].ravel())
        pts.append(rule.points)
        wts.append(rule.weights)
        offset += npts
    mat = sp.csr_matrix((np.concatenate(vals_all), (np.concatenate(rows), np.concatenate(cols))),
                        shape=(offset, n))
    return Evaluator(np.concatenate(pts), np.concatenate(wts), mat)
