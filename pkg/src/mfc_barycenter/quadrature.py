"""One-dimensional Gauss rules and nodal Lagrange bases on the reference interval [0, 1].

Nodes and weights are computed by Newton iteration on Legendre polynomials, so any
order is available; tensorization is handled by :mod:`mfc_barycenter.mesh`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidArgument

_NEWTON_TOL = 1e-15
_NEWTON_MAXIT = 100


@dataclass(frozen=True)
class Rule1D:
    points: np.ndarray
    weights: np.ndarray

    def integrate(self, f) -> float:
        return float(np.dot(self.weights, f(self.points)))


def _legendre(n: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """P_n(x) and P_n'(x) on [-1, 1] by the three-term recurrence."""
    p0 = np.ones_like(x)
    if n == 0:
        return p0, np.zeros_like(x)
    p1 = x.copy()
    for m in range(2, n + 1):
        p0, p1 = p1, ((2 * m - 1) * x * p1 - (m - 1) * p0) / m
    # derivative from P_{n-1}, P_n; valid away from x = +-1
    dp = n * (x * p1 - p0) / (x * x - 1.0)
    return p1, dp


@lru_cache(maxsize=None)
def _gauss_legendre_ref(n: int) -> tuple[np.ndarray, np.ndarray]:
    x = np.cos(np.pi * (np.arange(n) + 0.75) / (n + 0.5))
    for _ in range(_NEWTON_MAXIT):
        p, dp = _legendre(n, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < _NEWTON_TOL:
            break
    _, dp = _legendre(n, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    order = np.argsort(x)
    return x[order], w[order]


def gauss_legendre_rule(n: int) -> Rule1D:
    """n-point Gauss-Legendre rule on [0, 1], exact up to degree 2n - 1."""
    if n < 1:
        raise InvalidArgument(f"number of Gauss-Legendre points must be >= 1, got {n}")
    x, w = _gauss_legendre_ref(int(n))
    pts = 0.5 * (x + 1.0)
    wts = 0.5 * w
    pts.setflags(write=False)
    wts.setflags(write=False)
    return Rule1D(pts, wts)


@lru_cache(maxsize=None)
def _lobatto_ref(k: int) -> np.ndarray:
    if k == 1:
        return np.array([-1.0, 1.0])
    # interior nodes are the roots of P_k'; Newton with P_k'' from Legendre's ODE
    x = -np.cos(np.pi * np.arange(1, k) / k)
    for _ in range(_NEWTON_MAXIT):
        p, dp = _legendre(k, x)
        d2p = (2.0 * x * dp - k * (k + 1) * p) / (1.0 - x * x)
        dx = dp / d2p
        x = x - dx
        if np.max(np.abs(dx)) < _NEWTON_TOL:
            break
    return np.concatenate(([-1.0], np.sort(x), [1.0]))


def gauss_lobatto_nodes(k: int) -> np.ndarray:
    """The k + 1 Gauss-Lobatto nodes on [0, 1] (endpoints included)."""
    if k < 1:
        raise InvalidArgument(f"Lobatto degree must be >= 1, got {k}")
    x = 0.5 * (_lobatto_ref(int(k)) + 1.0)
    # enforce exact endpoints and symmetry about 1/2
    x = 0.5 * (x + (1.0 - x[::-1]))
    x[0], x[-1] = 0.0, 1.0
    return x


@dataclass(frozen=True)
class NodalBasis1D:
    """Lagrange basis interpolating at ``nodes``; ``degree == len(nodes) - 1``."""

    nodes: np.ndarray

    @property
    def degree(self) -> int:
        return len(self.nodes) - 1

    def _check(self, j: int) -> None:
        if not 0 <= j <= self.degree:
            raise InvalidArgument(f"basis index {j} outside 0..{self.degree}")

    def eval_matrix(self, x) -> np.ndarray:
        """Values of every basis function at ``x``; shape (len(x), degree + 1)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        z = self.nodes
        n = len(z)
        out = np.ones((len(x), n))
        for j in range(n):
            for m in range(n):
                if m != j:
                    out[:, j] *= (x - z[m]) / (z[j] - z[m])
        return out

    def deriv_matrix(self, x) -> np.ndarray:
        """Derivatives of every basis function at ``x``; shape (len(x), degree + 1)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        z = self.nodes
        n = len(z)
        out = np.zeros((len(x), n))
        for j in range(n):
            for m in range(n):
                if m == j:
                    continue
                term = np.full(len(x), 1.0 / (z[j] - z[m]))
                for l in range(n):
                    if l != j and l != m:
                        term *= (x - z[l]) / (z[j] - z[l])
                out[:, j] += term
        return out


def lagrange_eval(basis: NodalBasis1D, j: int, x: float) -> float:
    basis._check(j)
    return float(basis.eval_matrix([x])[0, j])


def lagrange_deriv(basis: NodalBasis1D, j: int, x: float) -> float:
    basis._check(j)
    return float(basis.deriv_matrix([x])[0, j])


def lobatto_basis(k: int) -> NodalBasis1D:
    return NodalBasis1D(gauss_lobatto_nodes(k))


def legendre_basis(n: int) -> NodalBasis1D:
    """Degree n - 1 basis interpolating at the n Gauss-Legendre points."""
    return NodalBasis1D(np.array(gauss_legendre_rule(n).points))
