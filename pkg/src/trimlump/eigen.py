"""Generalized eigenanalysis of (K, M): full decompositions, extreme eigenvalues,
pairing against exact spectra and eigenbasis projections."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

SPURIOUS_TOL = 0.5


class DecompositionError(np.linalg.LinAlgError):
    pass


class ConvergenceError(RuntimeError):
    pass


@dataclass
class EigenDecomposition:
    """Ascending eigenvalues and M-orthonormal eigenvectors (columns) of (K, M)."""

    values: np.ndarray
    vectors: np.ndarray
    mass: np.ndarray | sp.spmatrix | None = None

    @property
    def frequencies(self) -> np.ndarray:
        return np.sqrt(np.clip(self.values, 0.0, None))

    @property
    def size(self) -> int:
        return self.values.size

    def __len__(self):
        return self.values.size


def _dense(A) -> np.ndarray:
    return A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)


def solve_gevp(K, M, method: str = "lapack") -> EigenDecomposition:
    """Full decomposition ``K U = M U D`` with ``U^T M U = I``.

    Both matrices are first scaled symmetrically by ``diag(M)^{-1/2}``; this
    keeps the factorization of ``M`` well behaved when trimmed cells give
    diagonal entries many orders of magnitude below the rest.
    """
    Kd, Md = _dense(K), _dense(M)
    if Kd.shape != Md.shape or Kd.shape[0] != Kd.shape[1]:
        raise ValueError("K and M must be square and of equal size")
    diag = np.diag(Md)
    if np.any(diag <= 0):
        raise DecompositionError("mass matrix is not positive definite (nonpositive diagonal)")
    s = 1.0 / np.sqrt(diag)
    Ks = s[:, None] * Kd * s[None, :]
    Ms = s[:, None] * Md * s[None, :]
    Ks = 0.5 * (Ks + Ks.T)
    Ms = 0.5 * (Ms + Ms.T)
    try:
        L = la.cholesky(Ms, lower=True)
    except la.LinAlgError as exc:
        raise DecompositionError("mass matrix is not positive definite") from exc
    # standard form C = L^{-1} Ks L^{-T}
    C = la.solve_triangular(L, la.solve_triangular(L, Ks, lower=True).T, lower=True)
    C = 0.5 * (C + C.T)
    if method == "lapack":
        lam, W = la.eigh(C)
    elif method == "ql":
        lam, W = symmetric_eig_ql(C)
    else:
        raise ValueError(f"unknown eigensolver {method!r}")
    V = la.solve_triangular(L.T, W, lower=False)
    return EigenDecomposition(lam, s[:, None] * V, M)


def eigenvalues(K, M) -> np.ndarray:
    return solve_gevp(K, M).values


# -- in-repo dense symmetric eigensolver ------------------------------------------------


def tridiagonalize(A: np.ndarray):
    """Householder reduction ``A = Q T Q^T``; returns (diag, offdiag, Q)."""
    A = np.array(A, dtype=float)
    n = A.shape[0]
    Q = np.eye(n)
    for k in range(n - 2):
        x = A[k + 1:, k]
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        v = x.copy()
        v[0] += np.copysign(alpha, x[0])
        v /= np.linalg.norm(v)
        # A <- H A H with H = I - 2 v v^T acting on rows/cols k+1:
        sub = A[k + 1:, k:]
        sub -= 2.0 * np.outer(v, v @ sub)
        sub = A[k:, k + 1:]
        sub -= 2.0 * np.outer(sub @ v, v)
        Q[:, k + 1:] -= 2.0 * np.outer(Q[:, k + 1:] @ v, v)
    return np.diag(A).copy(), np.diag(A, -1).copy(), Q


def tridiagonal_ql(d: np.ndarray, e: np.ndarray, Z: np.ndarray, maxiter: int = 60):
    """Implicit QL iteration with Wilkinson-type shifts on a symmetric tridiagonal matrix.

    ``d`` diagonal, ``e`` subdiagonal; rotations are accumulated into ``Z``.
    """
    d = d.astype(float).copy()
    n = d.size
    e = np.append(e.astype(float), 0.0)
    Z = Z.copy()
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= np.finfo(float).eps * dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > maxiter:
                raise ConvergenceError("QL iteration did not converge")
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = np.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + np.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = np.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s, c = f / r, g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                zi1 = Z[:, i + 1].copy()
                Z[:, i + 1] = s * Z[:, i] + c * zi1
                Z[:, i] = c * Z[:, i] - s * zi1
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    order = np.argsort(d)
    return d[order], Z[:, order]


def symmetric_eig_ql(A: np.ndarray):
    """Eigen-decomposition of a dense symmetric matrix by tridiagonalization and QL."""
    d, e, Q = tridiagonalize(A)
    return tridiagonal_ql(d, e, Q)


# -- extreme eigenvalue -----------------------------------------------------------------


def max_eigenvalue(K, M, tol: float = 1e-10, maxiter: int = 100_000, seed: int = 0,
                  block: int = 12) -> float:
    """Largest eigenvalue of (K, M) by power iteration with Rayleigh-Ritz restarts.

    Each cycle applies the operator ``block - 1`` times to the current
    iterate and extracts the top Ritz pair from the resulting Krylov block;
    this keeps clustered top eigenvalues (common on symmetric trimmed
    geometries) from stalling plain power iteration.  A diagonal ``M`` is
    handled through ``M^{-1/2} K M^{-1/2}``, otherwise a factorization of
    ``M`` is applied.
    """
    K = sp.csr_matrix(K)
    Ms = sp.csr_matrix(M)
    n = K.shape[0]
    if n <= block:
        return float(la.eigh(_dense(K), _dense(Ms), eigvals_only=True)[-1])
    rng = np.random.default_rng(seed)
    if (Ms - sp.diags(Ms.diagonal())).count_nonzero() == 0:
        dm = Ms.diagonal()
        if np.any(dm <= 0):
            raise DecompositionError("lumped mass has nonpositive entries")
        s = 1.0 / np.sqrt(dm)
        A = (sp.diags(s) @ K @ sp.diags(s)).tocsr()
        apply, op_k, op_m = (lambda v: A @ v), (lambda V: A @ V), (lambda V: V)
    else:
        lu = spla.splu(sp.csc_matrix(Ms))
        apply, op_k, op_m = (lambda v: lu.solve(K @ v)), (lambda V: K @ V), (lambda V: Ms @ V)
    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)
    theta_old = None
    its = 0
    while its < maxiter:
        cols = [x]
        for _ in range(block - 1):
            y = apply(cols[-1])
            nrm = np.linalg.norm(y)
            if nrm == 0.0:
                return 0.0
            cols.append(y / nrm)
        its += block - 1
        V, _ = np.linalg.qr(np.column_stack(cols))
        Kp = V.T @ op_k(V)
        Mp = V.T @ op_m(V)
        try:
            vals, W = la.eigh(0.5 * (Kp + Kp.T), 0.5 * (Mp + Mp.T))
            theta, w = float(vals[-1]), W[:, -1]
        except la.LinAlgError:
            # projected mass lost definiteness (M with eigenvalues near roundoff):
            # project M^{-1} K itself onto the orthonormal Krylov basis instead
            vals, W = la.eig(V.T @ apply(V))
            k = int(np.argmax(vals.real))
            theta, w = float(vals[k].real), W[:, k].real
        x = V @ w
        x /= np.linalg.norm(x)
        if theta_old is not None and abs(theta - theta_old) <= tol * abs(theta):
            return theta
        theta_old = theta
    raise ConvergenceError(f"power iteration did not converge in {maxiter} iterations")


# -- pairing ------------------------------------------------------------------------------


@dataclass
class SpectrumReport:
    computed: np.ndarray
    exact: np.ndarray
    ratios: np.ndarray  # computed[i] / exact[i]
    pairing: np.ndarray  # index into exact of the nearest exact eigenvalue
    spurious: np.ndarray  # boolean flags

    @property
    def paired_exact(self) -> np.ndarray:
        return self.exact[self.pairing]

    @property
    def spurious_values(self) -> np.ndarray:
        return self.computed[self.spurious]


def normalize_and_pair(computed, exact, tol: float = SPURIOUS_TOL) -> SpectrumReport:
    """Ratios by index, nearest-exact labeling in log scale and spurious flags.

    A computed value is flagged when its relative error against its paired
    exact value exceeds ``tol``, or when it shares its exact partner with a
    better approximation.
    """
    computed = np.asarray(computed, dtype=float)
    exact = np.asarray(exact, dtype=float)
    if exact.size < computed.size:
        raise ValueError("need at least as many exact as computed eigenvalues")
    ratios = computed / exact[: computed.size]
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.where(computed > 0, computed, np.finfo(float).tiny)
        dist = np.abs(np.log(c[:, None] / exact[None, :]))
    pairing = np.argmin(dist, axis=1)
    relerr = np.abs(computed - exact[pairing]) / exact[pairing]
    spurious = relerr > tol
    for j in np.unique(pairing):
        partners = np.flatnonzero(pairing == j)
        if partners.size >= 2:
            best = partners[np.argmin(relerr[partners])]
            spurious[partners[partners != best]] = True
    return SpectrumReport(computed, exact, ratios, pairing, spurious)


def eigen_project(x, decomposition: EigenDecomposition) -> np.ndarray:
    """Coefficients ``U^T M x`` of ``x`` in the M-orthonormal eigenbasis."""
    x = np.asarray(x, dtype=float)
    U = decomposition.vectors
    if x.shape[0] != U.shape[0]:
        raise ValueError(f"vector of size {x.shape[0]} does not match decomposition of size {U.shape[0]}")
    if decomposition.mass is None:
        raise ValueError("decomposition carries no mass matrix")
    return U.T @ (decomposition.mass @ x)
