"""Discrete fields and the space-time operators linking multipliers to quadrature data.

Conventions (plain numpy arrays, no wrapper classes):

* DG field: point values on the quadrature lattice, shape ``(n_tq, n_sq)``; vector
  fields carry a leading axis of length d, per-species fields a leading axis of N.
* CG field: nodal coefficients on the Lobatto lattice, shape ``mesh.cg_shape``.
* Terminal field: values at spatial quadrature points, shape ``(n_sq,)``.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError
from .mesh import SpaceTimeMesh


def apply_axes(arr: np.ndarray, mats) -> np.ndarray:
    """Contract axis ``a`` of ``arr`` with ``mats[a]`` (skipped where None)."""
    for ax, M in enumerate(mats):
        if M is not None:
            arr = np.moveaxis(np.tensordot(M, arr, axes=([1], [ax])), 0, ax)
    return arr


def _check_cg(mesh: SpaceTimeMesh, phi: np.ndarray) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    if phi.size != np.prod(mesh.cg_shape):
        raise ShapeError(f"CG field has {phi.size} entries, mesh has {np.prod(mesh.cg_shape)}")
    return phi.reshape(mesh.cg_shape)


def _check_dg(mesh: SpaceTimeMesh, a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.shape[-2:] != (mesh.n_tq, mesh.n_sq):
        raise ShapeError(f"DG field shape {a.shape} does not end in {(mesh.n_tq, mesh.n_sq)}")
    return a


def _flat(mesh: SpaceTimeMesh, arr: np.ndarray) -> np.ndarray:
    return arr.reshape(mesh.n_tq, mesh.n_sq)


def _tensor(mesh: SpaceTimeMesh, a: np.ndarray) -> np.ndarray:
    return a.reshape((mesh.n_tq,) + mesh.space_q_shape)


def eval_values(mesh: SpaceTimeMesh, phi: np.ndarray) -> np.ndarray:
    phi = _check_cg(mesh, phi)
    mats = [mesh.time.value_matrix] + [a.value_matrix for a in mesh.space]
    return _flat(mesh, apply_axes(phi, mats))


def eval_D(mesh: SpaceTimeMesh, phi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Time derivative and spatial gradient of a CG field at every quadrature point.

    Returns ``(dt, grad)`` with shapes ``(n_tq, n_sq)`` and ``(d, n_tq, n_sq)``.
    """
    phi = _check_cg(mesh, phi)
    vals = [a.value_matrix for a in mesh.space]
    # contract the spatial axes once with values, reuse for the time derivative
    space_vals = apply_axes(phi, [None] + vals)
    dt = apply_axes(space_vals, [mesh.time.deriv_matrix])
    time_vals = apply_axes(phi, [mesh.time.value_matrix])
    grad = []
    for a, axis in enumerate(mesh.space):
        mats = [None] + [axis.deriv_matrix if b == a else v for b, v in enumerate(vals)]
        grad.append(_flat(mesh, apply_axes(time_vals, mats)))
    return _flat(mesh, dt), np.stack(grad)


def adjoint_D(
    mesh: SpaceTimeMesh,
    dt_data: np.ndarray | None = None,
    grad_data: np.ndarray | None = None,
    val_data: np.ndarray | None = None,
) -> np.ndarray:
    """Weak pairing with every CG basis function psi.

    Returns the CG-shaped vector with entries
    ``(dt_data, d_t psi)_h + sum_a (grad_data[a], d_a psi)_h + (val_data, psi)_h``.
    This is the transpose (in the quadrature inner product) of :func:`eval_D`.
    """
    w = mesh.time_weights[:, None] * mesh.space_weights[None, :]
    valsT = [a.value_matrix.T for a in mesh.space]
    out = np.zeros(mesh.cg_shape)
    # time-valued contributions share the spatial transposed values
    time_part = None
    if dt_data is not None:
        f = _tensor(mesh, _check_dg(mesh, dt_data) * w)
        time_part = apply_axes(f, [mesh.time.deriv_matrix.T])
    if val_data is not None:
        f = _tensor(mesh, _check_dg(mesh, val_data) * w)
        g = apply_axes(f, [mesh.time.value_matrix.T])
        time_part = g if time_part is None else time_part + g
    if time_part is not None:
        out += apply_axes(time_part, [None] + valsT)
    if grad_data is not None:
        grad_data = _check_dg(mesh, grad_data)
        for a, axis in enumerate(mesh.space):
            f = _tensor(mesh, grad_data[a] * w)
            f = apply_axes(f, [mesh.time.value_matrix.T])
            mats = [None] + [axis.deriv_matrix.T if b == a else v for b, v in enumerate(valsT)]
            out += apply_axes(f, mats)
    return out


def apply_gamma_T(vals: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """Reaction-slot data: output p equals sum_i gamma[i, p] * vals[i] pointwise."""
    vals = np.asarray(vals, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    if gamma.ndim != 2 or vals.shape[0] != gamma.shape[0]:
        raise ShapeError(f"{vals.shape[0]} species but gamma has shape {gamma.shape}")
    return np.tensordot(gamma.T, vals, axes=([1], [0]))


def apply_gamma(vals: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """Per-species net source: output i equals sum_p gamma[i, p] * vals[p]."""
    gamma = np.asarray(gamma, dtype=float)
    if vals.shape[0] != gamma.shape[1]:
        raise ShapeError(f"{vals.shape[0]} reactions but gamma has shape {gamma.shape}")
    return np.tensordot(gamma, vals, axes=([1], [0]))


def inner_dg(mesh: SpaceTimeMesh, a: np.ndarray, b: np.ndarray) -> float:
    """Space-time quadrature inner product; leading axes (components, species) are summed."""
    a = _check_dg(mesh, a)
    b = _check_dg(mesh, b)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    w = mesh.time_weights[:, None] * mesh.space_weights[None, :]
    return float(np.sum(a * b * w))


def trace_at_time(mesh: SpaceTimeMesh, phi: np.ndarray, which: str) -> np.ndarray:
    """Values of a CG field at t = 0 or t = T on the spatial quadrature lattice."""
    phi = _check_cg(mesh, phi)
    if which in ("0", 0, "initial"):
        slab = phi[0]
    elif which in ("T", "terminal"):
        slab = phi[-1]
    else:
        raise ValueError(f"trace time must be '0' or 'T', got {which!r}")
    return apply_axes(slab, [a.value_matrix for a in mesh.space]).ravel()


def trace_adjoint(mesh: SpaceTimeMesh, a: np.ndarray, which: str) -> np.ndarray:
    """CG vector of <a, psi>_{t} over all basis functions psi (t = 0 or T)."""
    a = np.asarray(a, dtype=float)
    if a.shape != (mesh.n_sq,):
        raise ShapeError(f"terminal field shape {a.shape}, expected {(mesh.n_sq,)}")
    f = (a * mesh.space_weights).reshape(mesh.space_q_shape)
    slab = apply_axes(f, [ax.value_matrix.T for ax in mesh.space])
    out = np.zeros(mesh.cg_shape)
    if which in ("0", 0, "initial"):
        out[0] = slab
    elif which in ("T", "terminal"):
        out[-1] = slab
    else:
        raise ValueError(f"trace time must be '0' or 'T', got {which!r}")
    return out


def spatial_inner(mesh: SpaceTimeMesh, a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != (mesh.n_sq,) or b.shape != (mesh.n_sq,):
        raise ShapeError(f"terminal fields must have shape {(mesh.n_sq,)}")
    return float(np.dot(mesh.space_weights, a * b))


def _summed_trace(mesh, phis, which):
    phis = np.asarray(phis, dtype=float)
    if phis.size == np.prod(mesh.cg_shape):
        return trace_at_time(mesh, phis, which)
    return sum(trace_at_time(mesh, p, which) for p in phis)


def terminal_inner(mesh: SpaceTimeMesh, a: np.ndarray, phis: np.ndarray) -> float:
    """<a, phi . 1>_{t=T,h}; ``phis`` is one CG field or a stack of them (summed)."""
    return spatial_inner(mesh, a, _summed_trace(mesh, phis, "T"))


def initial_inner(mesh: SpaceTimeMesh, a: np.ndarray, phis: np.ndarray) -> float:
    return spatial_inner(mesh, a, _summed_trace(mesh, phis, "0"))


def l1_norm_spatial(mesh: SpaceTimeMesh, a: np.ndarray) -> float:
    return float(np.dot(mesh.space_weights, np.abs(a)))


def spatial_integral(mesh: SpaceTimeMesh, a: np.ndarray) -> np.ndarray:
    """Integral over space along the last axis (works for (n_sq,) and (..., n_tq, n_sq))."""
    return np.asarray(a) @ mesh.space_weights


def interpolate_cg(mesh: SpaceTimeMesh, phi: np.ndarray, t, x) -> np.ndarray:
    """Evaluate a CG field at arbitrary times ``t`` and per-axis coordinates ``x``."""
    phi = _check_cg(mesh, phi)
    mats = [mesh.time.cg_eval_matrix(t)] + [ax.cg_eval_matrix(xa) for ax, xa in zip(mesh.space, x)]
    return apply_axes(phi, mats)


def interpolate_dg(mesh: SpaceTimeMesh, a: np.ndarray, t, x) -> np.ndarray:
    """Evaluate a DG field at time(s) ``t`` and per-axis coordinates ``x`` (tensor grid)."""
    a = _tensor(mesh, _check_dg(mesh, a))
    mats = [mesh.time.dg_eval_matrix(t)] + [ax.dg_eval_matrix(xa) for ax, xa in zip(mesh.space, x)]
    return apply_axes(a, mats)


def interpolate_terminal(mesh: SpaceTimeMesh, a: np.ndarray, x) -> np.ndarray:
    a = np.asarray(a, dtype=float).reshape(mesh.space_q_shape)
    return apply_axes(a, [ax.dg_eval_matrix(xa) for ax, xa in zip(mesh.space, x)])
