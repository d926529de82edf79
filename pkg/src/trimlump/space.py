"""Active mesh and basis over a trimmed domain, good/bad element partition."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import TrimmedDomain
from .splines import SplineSpace


class NeighborError(RuntimeError):
    """A bad element has no good element in its neighborhood."""


@dataclass
class Cell:
    index: int
    lo: np.ndarray
    hi: np.ndarray
    fraction: float
    good: bool = True
    source: int | None = None  # S_h(T) for bad elements


@dataclass
class DiscreteSpace:
    """Trimmed spline space with the bookkeeping needed for stabilized assembly.

    ``cells`` maps background element index to :class:`Cell` for every active
    element (``|T ∩ Omega| > 0``).  Basis indices refer to the background
    numbering of :attr:`spline`.
    """

    spline: SplineSpace
    domain: TrimmedDomain
    gamma: float
    cells: dict[int, Cell]
    active: np.ndarray
    large: np.ndarray
    small: np.ndarray
    dirichlet: np.ndarray
    dirichlet_sides: tuple[str, ...] = ()
    neumann_sides: tuple[str, ...] = ()
    _rules: dict = field(default_factory=dict, repr=False)
    _brules: dict = field(default_factory=dict, repr=False)

    @property
    def good_elements(self) -> list[int]:
        return [e for e, c in self.cells.items() if c.good]

    @property
    def bad_elements(self) -> list[int]:
        return [e for e, c in self.cells.items() if not c.good]

    def neighbor(self, e: int) -> int:
        cell = self.cells[e]
        if cell.good:
            raise ValueError(f"element {e} is good; the neighbor map is only defined on bad elements")
        return cell.source

    def connectivity(self, e: int) -> np.ndarray:
        return self.spline.connectivity(e)

    def dofs(self, stabilized: bool) -> np.ndarray:
        """Background indices of the unknowns, ascending (Dirichlet DOFs removed)."""
        base = self.large if stabilized else self.active
        return np.setdiff1d(base, self.dirichlet)

    def global_to_reduced(self, stabilized: bool, dirichlet: bool = True) -> np.ndarray:
        """Array mapping background index to reduced index (-1 if eliminated)."""
        dofs = self.dofs(stabilized) if dirichlet else (self.large if stabilized else self.active)
        lookup = np.full(self.spline.size, -1)
        lookup[dofs] = np.arange(dofs.size)
        return lookup

    def rule(self, e: int, q: int, subdiv: int = 1):
        """Cached interior quadrature of active element ``e``."""
        key = (e, q, subdiv)
        if key not in self._rules:
            cell = self.cells[e]
            self._rules[key] = self.domain.interior_rule(cell.lo, cell.hi, q, subdiv)
        return self._rules[key]

    def boundary_rule(self, e: int, q: int):
        key = (e, q)
        if key not in self._brules:
            cell = self.cells[e]
            self._brules[key] = self.domain.boundary_rule(cell.lo, cell.hi, q, self.neumann_sides)
        return self._brules[key]


def neighbor_choice(spline: SplineSpace, cells: dict[int, Cell], e: int) -> int:
    """Good neighbor of largest ``|T' ∩ Omega|``; ties go to the smaller index."""
    best, best_frac = None, -1.0
    for n in spline.neighbors(e):
        cell = cells.get(n)
        if cell is None or not cell.good:
            continue
        if cell.fraction > best_frac:
            best, best_frac = n, cell.fraction
    if best is None:
        raise NeighborError(f"bad element {e} {spline.element_multi(e)} has no good neighbor; "
                            "refine the mesh or lower gamma")
    return best


def dirichlet_indices(spline: SplineSpace, sides) -> np.ndarray:
    """Basis functions equal to one somewhere on the given fictitious-box sides."""
    out = []
    idx = np.arange(spline.size)
    multi = np.unravel_index(idx, spline.shape, order="F")
    axis_of = {"left": (0, 0), "right": (0, -1), "bottom": (1, 0), "top": (1, -1)}
    for side in sides:
        axis, end = axis_of[side]
        if axis >= spline.dim:
            raise ValueError(f"side {side!r} does not exist in {spline.dim}D")
        target = 0 if end == 0 else spline.shape[axis] - 1
        out.append(idx[multi[axis] == target])
    if not out:
        return np.zeros(0, dtype=int)
    return np.unique(np.concatenate(out))


def build_space(spline: SplineSpace, domain: TrimmedDomain, gamma: float = 0.0,
                dirichlet_sides=(), neumann_sides=()) -> DiscreteSpace:
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    if spline.dim != domain.dim:
        raise ValueError("spline space and domain dimensions differ")
    cells: dict[int, Cell] = {}
    for e in range(spline.n_elements):
        lo, hi = spline.element_bounds(e)
        frac = domain.volume_fraction(lo, hi)
        if frac > 0.0:
            cells[e] = Cell(e, lo, hi, frac, good=frac >= gamma)
    for e, cell in cells.items():
        if not cell.good:
            cell.source = neighbor_choice(spline, cells, e)

    active = np.unique(np.concatenate([spline.connectivity(e) for e in cells]))
    good = [e for e, c in cells.items() if c.good]
    large = np.unique(np.concatenate([spline.connectivity(e) for e in good])) if good else np.zeros(0, int)
    small = np.setdiff1d(active, large)
    return DiscreteSpace(spline, domain, gamma, cells, active, large, small,
                         dirichlet_indices(spline, dirichlet_sides),
                         tuple(dirichlet_sides), tuple(neumann_sides))
