"""The space-time elliptic problem solved once per species in every dual step.

Bilinear form on the continuous lattice:

    a(u, v) = (d_t u, d_t v) + (grad u, grad v) + c (u, v) + tau <u, v>_{t=T}

with tau = 1 when the terminal density is a variable (barycenter runs) and 0 for
fixed-endpoint runs. The forms are integrated exactly (k + 1 Gauss points per cell
and axis): the k-point rule of the physical variables leaves hourglass modes in
the kernel for k = 1, while the exact forms dominate it and stay positive definite.

On a tensor mesh the operator is a sum of Kronecker products of 1D matrices, so it
is applied matrix-free and admits an exact fast-diagonalization inverse, used as
the default preconditioner (PCG then converges in a single step).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, reduce

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import InvalidArgument, ResourceLimitError, ShapeError
from .fields import apply_axes
from .mesh import SpaceTimeMesh

DENSE_LIMIT = 2000


@dataclass(eq=False)
class EllipticOperator:
    mesh: SpaceTimeMesh
    c: float
    terminal: float = 1.0

    def __post_init__(self):
        if self.c <= 0:
            raise InvalidArgument(f"mass coefficient must be positive, got {self.c}")
        t = self.mesh.time
        E = np.zeros_like(t.mass)
        E[-1, -1] = 1.0
        self.time_form = t.stiffness + self.c * t.mass + self.terminal * E
        self.time_mass = t.mass
        self.space_mass = [a.mass for a in self.mesh.space]
        self.space_stiff = [a.stiffness for a in self.mesh.space]

    @property
    def shape(self) -> tuple[int, ...]:
        return self.mesh.cg_shape

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def _terms(self):
        """(time matrix, spatial matrices) for each Kronecker term."""
        yield self.time_form, self.space_mass
        for a in range(self.mesh.d):
            yield self.time_mass, [self.space_stiff[b] if b == a else self.space_mass[b] for b in range(self.mesh.d)]

    def matvec(self, u: np.ndarray) -> np.ndarray:
        if u.size != self.size:
            raise ShapeError(f"vector of size {u.size} for operator of size {self.size}")
        u = u.reshape(self.shape)
        out = np.zeros(self.shape)
        # both term families share the spatial mass on all but one axis
        for tm, sm in self._terms():
            out += apply_axes(u, [tm] + sm)
        return out

    def mass_apply(self, u: np.ndarray) -> np.ndarray:
        """Space-time mass form (u, .) on the continuous lattice."""
        return apply_axes(u.reshape(self.shape), [self.time_mass] + self.space_mass)

    def terminal_apply(self, u: np.ndarray) -> np.ndarray:
        """Terminal-trace form <u, .>_{t=T}."""
        u = u.reshape(self.shape)
        out = np.zeros(self.shape)
        out[-1] = apply_axes(u[-1], self.space_mass)
        return out

    @cached_property
    def diagonal(self) -> np.ndarray:
        out = np.zeros(self.shape)
        for tm, sm in self._terms():
            out += reduce(np.multiply.outer, [np.diag(tm)] + [np.diag(m) for m in sm])
        return out

    def to_sparse(self) -> sp.csr_matrix:
        total = None
        for tm, sm in self._terms():
            term = reduce(sp.kron, [sp.csr_matrix(tm)] + [sp.csr_matrix(m) for m in sm])
            total = term if total is None else total + term
        return total.tocsr()

    def to_dense(self) -> np.ndarray:
        if self.size > DENSE_LIMIT:
            raise ResourceLimitError(f"dense operator limited to {DENSE_LIMIT} dofs, have {self.size}")
        return self.to_sparse().toarray()

    @cached_property
    def _fdm(self):
        # generalized eigenbases: V^T M V = I, V^T K V = diag(lam)
        mu, W = sla.eigh(self.time_form, self.time_mass)
        vecs, lams = [W], [mu]
        for K, M in zip(self.space_stiff, self.space_mass):
            lam, V = sla.eigh(K, M)
            vecs.append(V)
            lams.append(np.maximum(lam, 0.0))
        denom = reduce(np.add.outer, lams)
        return vecs, denom

    def fdm_solve(self, r: np.ndarray) -> np.ndarray:
        """Exact inverse via fast diagonalization."""
        vecs, denom = self._fdm
        z = apply_axes(r.reshape(self.shape), [V.T for V in vecs])
        z /= denom
        return apply_axes(z, vecs)


def assemble_operator(mesh: SpaceTimeMesh, c: float, terminal: bool = True) -> EllipticOperator:
    return EllipticOperator(mesh, float(c), 1.0 if terminal else 0.0)


@dataclass
class PCGInfo:
    iterations: int
    converged: bool
    rel_residual: float
    history: list = field(default_factory=list, repr=False)


def pcg_solve(
    op: EllipticOperator,
    rhs: np.ndarray,
    tol: float = 1e-10,
    max_iter: int = 5000,
    precond: str | None = "jacobi",
    x0: np.ndarray | None = None,
    callback=None,
) -> tuple[np.ndarray, PCGInfo]:
    """Preconditioned conjugate gradients; returns ``(x, info)``.

    ``precond`` is "jacobi", "fdm" (fast diagonalization) or None. Stops when
    ||A x - rhs|| <= tol * ||rhs||; non-convergence is reported in ``info``.
    """
    b = np.asarray(rhs, dtype=float).reshape(op.shape)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(op.shape), PCGInfo(0, True, 0.0)
    if precond == "jacobi":
        dinv = 1.0 / op.diagonal
        apply_M = lambda r: dinv * r
    elif precond == "fdm":
        apply_M = op.fdm_solve
    elif precond is None:
        apply_M = lambda r: r
    else:
        raise InvalidArgument(f"unknown preconditioner {precond!r}")

    x = np.zeros(op.shape) if x0 is None else np.array(x0, dtype=float).reshape(op.shape)
    r = b - op.matvec(x) if x0 is not None else b.copy()
    res = np.linalg.norm(r) / bnorm
    info = PCGInfo(0, res <= tol, res)
    if info.converged:
        return x, info
    z = apply_M(r)
    p = z.copy()
    rz = np.vdot(r, z)
    for it in range(1, max_iter + 1):
        Ap = op.matvec(p)
        alpha = rz / np.vdot(p, Ap)
        x += alpha * p
        r -= alpha * Ap
        res = np.linalg.norm(r) / bnorm
        info.iterations = it
        info.rel_residual = res
        info.history.append(res)
        if callback is not None:
            callback(x)
        if res <= tol:
            info.converged = True
            break
        z = apply_M(r)
        rz_new = np.vdot(r, z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, info


def dense_solve_oracle(op: EllipticOperator, rhs: np.ndarray) -> np.ndarray:
    """Direct LU solve of the assembled dense operator (small meshes only)."""
    A = op.to_dense()
    lu = sla.lu_factor(A)
    return sla.lu_solve(lu, np.asarray(rhs, dtype=float).ravel()).reshape(op.shape)
