"""Structured tensor-product space-time mesh on [0, T] x prod_a [0, L_a].

Two lattices live on the mesh:

* the quadrature lattice: k Gauss-Legendre points per cell and axis, carrying all
  discontinuous (physical) fields as point values;
* the continuous lattice: the global Gauss-Lobatto node grid (k * n + 1 nodes per
  axis) carrying the multipliers. A node shared by neighbouring cells has one
  global index, which is what makes the space H1-conforming.

Global orderings are C-order over the per-axis indices: time first, then
x, y, z. Homogeneous Neumann conditions are natural in the weak forms used here,
so no boundary assembly exists anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import product

import numpy as np

from .errors import InvalidArgument, ResourceLimitError
from .quadrature import gauss_legendre_rule, legendre_basis, lobatto_basis

MAX_POINTS = 200_000_000


@dataclass(frozen=True)
class MeshSpec:
    d: int
    n_cells: tuple[int, ...]
    lengths: tuple[float, ...]
    n_t: int
    T: float = 1.0
    k: int = 1

    def __post_init__(self):
        object.__setattr__(self, "n_cells", tuple(int(n) for n in self.n_cells))
        object.__setattr__(self, "lengths", tuple(float(x) for x in self.lengths))
        if self.d not in (1, 2, 3):
            raise InvalidArgument(f"spatial dimension must be 1, 2 or 3, got {self.d}")
        if len(self.n_cells) != self.d or len(self.lengths) != self.d:
            raise InvalidArgument("n_cells and lengths need one entry per spatial axis")
        if min(self.n_cells) < 1 or self.n_t < 1:
            raise InvalidArgument("cell counts must be >= 1")
        if min(self.lengths) <= 0 or self.T <= 0:
            raise InvalidArgument("lengths and T must be positive")
        if self.k < 1:
            raise InvalidArgument(f"polynomial degree must be >= 1, got {self.k}")


@dataclass(frozen=True, eq=False)
class Axis1D:
    """One axis of the tensor mesh: n uniform cells on [0, length], degree k."""

    n: int
    length: float
    k: int

    @property
    def h(self) -> float:
        return self.length / self.n

    @cached_property
    def qpts(self) -> np.ndarray:
        r = gauss_legendre_rule(self.k)
        return ((np.arange(self.n)[:, None] + r.points[None, :]) * self.h).ravel()

    @cached_property
    def qweights(self) -> np.ndarray:
        r = gauss_legendre_rule(self.k)
        return np.tile(r.weights * self.h, self.n)

    @cached_property
    def nodes(self) -> np.ndarray:
        z = lobatto_basis(self.k).nodes
        x = np.empty(self.n * self.k + 1)
        for c in range(self.n):
            x[c * self.k : (c + 1) * self.k + 1] = (c + z) * self.h
        return x

    @property
    def n_q(self) -> int:
        return self.n * self.k

    @property
    def n_nodes(self) -> int:
        return self.n * self.k + 1

    def _scatter(self, local: np.ndarray, rows_per_cell: int) -> np.ndarray:
        out = np.zeros((self.n * rows_per_cell, self.n_nodes))
        for c in range(self.n):
            out[c * rows_per_cell : (c + 1) * rows_per_cell, c * self.k : (c + 1) * self.k + 1] = local
        return out

    @cached_property
    def value_matrix(self) -> np.ndarray:
        """Lobatto-lattice coefficients -> values at quadrature points."""
        r = gauss_legendre_rule(self.k)
        return self._scatter(lobatto_basis(self.k).eval_matrix(r.points), self.k)

    @cached_property
    def deriv_matrix(self) -> np.ndarray:
        r = gauss_legendre_rule(self.k)
        return self._scatter(lobatto_basis(self.k).deriv_matrix(r.points) / self.h, self.k)

    def _exact_form(self, deriv: bool) -> np.ndarray:
        # k + 1 points integrate products of degree-k polynomials exactly
        r = gauss_legendre_rule(self.k + 1)
        b = lobatto_basis(self.k)
        B = b.deriv_matrix(r.points) / self.h if deriv else b.eval_matrix(r.points)
        local = B.T @ (r.weights[:, None] * self.h * B)
        out = np.zeros((self.n_nodes, self.n_nodes))
        for c in range(self.n):
            sl = slice(c * self.k, (c + 1) * self.k + 1)
            out[sl, sl] += local
        return out

    @cached_property
    def mass(self) -> np.ndarray:
        return self._exact_form(deriv=False)

    @cached_property
    def stiffness(self) -> np.ndarray:
        return self._exact_form(deriv=True)

    def cell_of(self, x: np.ndarray) -> np.ndarray:
        """Index of the cell containing x; points on an interface go to the right cell."""
        c = np.floor(np.asarray(x, dtype=float) / self.h + 1e-12).astype(int)
        return np.clip(c, 0, self.n - 1)

    def dg_eval_matrix(self, x) -> np.ndarray:
        """Evaluate a per-cell degree k - 1 field (given at quadrature points) at ``x``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        cells = self.cell_of(x)
        basis = legendre_basis(self.k)
        out = np.zeros((len(x), self.n_q))
        for i, (xi, c) in enumerate(zip(x, cells)):
            out[i, c * self.k : (c + 1) * self.k] = basis.eval_matrix([xi / self.h - c])[0]
        return out

    def cg_eval_matrix(self, x) -> np.ndarray:
        """Evaluate a continuous degree-k field (Lobatto coefficients) at ``x``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        cells = self.cell_of(x)
        basis = lobatto_basis(self.k)
        out = np.zeros((len(x), self.n_nodes))
        for i, (xi, c) in enumerate(zip(x, cells)):
            out[i, c * self.k : (c + 1) * self.k + 1] = basis.eval_matrix([xi / self.h - c])[0]
        return out


@dataclass(eq=False)
class SpaceTimeMesh:
    spec: MeshSpec
    time: Axis1D
    space: tuple[Axis1D, ...]
    space_coords: np.ndarray = field(repr=False)
    space_weights: np.ndarray = field(repr=False)

    @property
    def d(self) -> int:
        return self.spec.d

    @property
    def k(self) -> int:
        return self.spec.k

    @property
    def T(self) -> float:
        return self.spec.T

    @property
    def time_qpts(self) -> np.ndarray:
        return self.time.qpts

    @property
    def time_weights(self) -> np.ndarray:
        return self.time.qweights

    @property
    def space_q_shape(self) -> tuple[int, ...]:
        return tuple(a.n_q for a in self.space)

    @property
    def cg_shape(self) -> tuple[int, ...]:
        return (self.time.n_nodes,) + tuple(a.n_nodes for a in self.space)

    @property
    def n_tq(self) -> int:
        return self.time.n_q

    @property
    def n_sq(self) -> int:
        return int(np.prod(self.space_q_shape))

    @property
    def volume(self) -> float:
        return float(np.prod(self.spec.lengths))

    def element_nodes(self, et: int, es: tuple[int, ...]) -> np.ndarray:
        """Global continuous-lattice indices of the (k + 1)^(d + 1) nodes of one element.

        Local ordering is C-order over (time, x, y, z) local node indices.
        """
        k = self.k
        ranges = [range(et * k, et * k + k + 1)] + [range(c * k, c * k + k + 1) for c in es]
        idx = np.array(list(product(*ranges)))
        return np.ravel_multi_index(tuple(idx.T), self.cg_shape)

    def elements(self):
        """Iterate (time cell, spatial cell tuple) in deterministic order."""
        for et in range(self.time.n):
            for es in product(*(range(a.n) for a in self.space)):
                yield et, es


def build_mesh(spec: MeshSpec) -> SpaceTimeMesh:
    k = spec.k
    n_cg = (k * spec.n_t + 1) * int(np.prod([k * n + 1 for n in spec.n_cells]))
    n_dg = k * spec.n_t * k**spec.d * int(np.prod(spec.n_cells))
    if n_cg > MAX_POINTS or n_dg > MAX_POINTS:
        raise ResourceLimitError(f"mesh too large: {n_cg} continuous dofs, {n_dg} quadrature points")
    time = Axis1D(spec.n_t, spec.T, k)
    space = tuple(Axis1D(n, L, k) for n, L in zip(spec.n_cells, spec.lengths))
    grids = np.meshgrid(*(a.qpts for a in space), indexing="ij")
    coords = np.stack([g.ravel() for g in grids], axis=1)
    wgrids = np.meshgrid(*(a.qweights for a in space), indexing="ij")
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    return SpaceTimeMesh(spec, time, space, coords, weights)


def dg_point_count(mesh: SpaceTimeMesh) -> tuple[int, int]:
    return mesh.n_tq, mesh.n_sq


def cg_dof_count(mesh: SpaceTimeMesh) -> int:
    return int(np.prod(mesh.cg_shape))


def spatial_quad_coords(mesh: SpaceTimeMesh) -> np.ndarray:
    """(n_space_pts, d) coordinates of the spatial quadrature lattice."""
    return mesh.space_coords


def temporal_quad_coords(mesh: SpaceTimeMesh) -> np.ndarray:
    return mesh.time_qpts
