"""Independent reference implementations used only by the test-suite."""

import numpy as np

from mfc_barycenter.mesh import SpaceTimeMesh


def _gl(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1), 0.5 * w


def _lagrange(nodes, x):
    """Values and derivatives of the nodal basis on ``nodes`` at points ``x``."""
    n = len(nodes)
    V = np.vander(nodes, n, increasing=True)
    C = np.linalg.inv(V)  # column j: monomial coefficients of basis j
    P = np.vander(x, n, increasing=True)
    dP = np.zeros_like(P)
    dP[:, 1:] = P[:, :-1] * np.arange(1, n)
    return P @ C, dP @ C


def dense_elliptic_1d(mesh: SpaceTimeMesh, c: float, tau: float) -> np.ndarray:
    """Element-by-element assembly of the 1+1D space-time form with a generous quadrature.

    a(u, v) = (u_t, v_t) + (u_x, v_x) + c (u, v) + tau <u(T), v(T)>.
    """
    assert mesh.d == 1
    k = mesh.k
    zt, zx = mesh.time.nodes[: k + 1] / mesh.time.h, mesh.space[0].nodes[: k + 1] / mesh.space[0].h
    q, w = _gl(k + 3)
    Bt, dBt = _lagrange(zt, q)
    Bx, dBx = _lagrange(zx, q)
    ht, hx = mesh.time.h, mesh.space[0].h
    n = int(np.prod(mesh.cg_shape))
    A = np.zeros((n, n))
    for et in range(mesh.spec.n_t):
        for ex in range(mesh.spec.n_cells[0]):
            idx = mesh.element_nodes(et, (ex,))
            # local basis index (a, b) -> phi_a(t) psi_b(x); C-order matches element_nodes
            vals = np.einsum("qa,rb->qrab", Bt, Bx).reshape(len(q), len(q), -1)
            dt = np.einsum("qa,rb->qrab", dBt / ht, Bx).reshape(len(q), len(q), -1)
            dx = np.einsum("qa,rb->qrab", Bt, dBx / hx).reshape(len(q), len(q), -1)
            W = np.outer(w, w) * ht * hx
            Ke = (
                np.einsum("qr,qri,qrj->ij", W, dt, dt)
                + np.einsum("qr,qri,qrj->ij", W, dx, dx)
                + c * np.einsum("qr,qri,qrj->ij", W, vals, vals)
            )
            A[np.ix_(idx, idx)] += Ke
    if tau:
        nx = mesh.cg_shape[1]
        for ex in range(mesh.spec.n_cells[0]):
            Me = np.einsum("r,ra,rb->ab", w * hx, Bx, Bx)
            gidx = (mesh.cg_shape[0] - 1) * nx + ex * k + np.arange(k + 1)
            A[np.ix_(gidx, gidx)] += tau * Me
    return A


def w2_1d(x: np.ndarray, w0: np.ndarray, w1: np.ndarray, n: int = 200_000) -> float:
    """Quantile-function W2 distance between two discrete 1D measures on points ``x``."""
    F0 = np.cumsum(w0) / w0.sum()
    F1 = np.cumsum(w1) / w1.sum()
    u = (np.arange(n) + 0.5) / n
    q0 = x[np.minimum(np.searchsorted(F0, u), len(x) - 1)]
    q1 = x[np.minimum(np.searchsorted(F1, u), len(x) - 1)]
    return float(np.sqrt(np.mean((q0 - q1) ** 2)))


def coordinate_slice(x, i, rho, m2, rbar, sbar, pairs, alpha, beta, sigma=1.0):
    """Species-i dependent part of the density objective, vectorized over trial values x."""
    x = np.asarray(x, dtype=float)
    f = m2[i] / (2 * (sigma + x)) + (x - rbar[i]) ** 2 / (2 * sigma) + beta[i] * x * np.log(x)
    if alpha > 0:
        for p, (a, b) in enumerate(pairs):
            if i not in (a, b):
                continue
            other = rho[b] if a == i else rho[a]
            la, lb = np.log(x), np.log(other)
            with np.errstate(invalid="ignore", divide="ignore"):
                lm = np.where(np.abs(la - lb) < 1e-10, 0.5 * (x + other), (x - other) / (la - lb))
            f = f + sbar[p] ** 2 / (2 * (sigma + alpha * lm))
    return f
