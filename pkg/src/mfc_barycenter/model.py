"""Pointwise model pieces: reactions, mobilities, entropy potential and the density prox.

Mobilities are V1(rho_i) = rho_i for transport and alpha * logmean(rho_a, rho_b) for
reaction p, where reaction p pairs species (p, p + 1 mod N). That pairing is only
meaningful when there is one reaction per species (the cyclic network, or a single
species with gamma = [[1]]); any other reaction matrix must use alpha = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np
from numba import prange

from .brent import DEFAULT_MAXITER, DEFAULT_TOL, brent_jit, brent_minimize
from .errors import DomainError, InvalidArgument, NumericalError, ShapeError
from .fields import apply_gamma_T, eval_D, eval_values

LOGMEAN_EPS = 1e-10


def gamma_cyclic(N: int) -> np.ndarray:
    """Cyclic reversible network: gamma[i, i] = 1, gamma[i, i - 1] = -1."""
    if N < 2:
        raise InvalidArgument(f"cyclic reaction network needs N >= 2, got {N}")
    g = np.eye(N)
    for i in range(N):
        g[i, (i - 1) % N] = -1.0
    return g


@dataclass
class ModelParams:
    N: int
    gamma: np.ndarray
    alpha: float = 0.0
    beta: np.ndarray | float = 0.0
    rho_min: float = 1e-6
    rho_max: float = 40.0
    sigma_u: float = 1.0
    sigma_phi: float = 1.0
    prox_sweeps: int = 1
    brent_tol: float = DEFAULT_TOL
    brent_maxiter: int = DEFAULT_MAXITER
    pairs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.gamma = np.atleast_2d(np.asarray(self.gamma, dtype=float))
        self.beta = np.broadcast_to(np.asarray(self.beta, dtype=float), (self.N,)).copy()
        if self.gamma.shape[0] != self.N:
            raise InvalidArgument(f"gamma has {self.gamma.shape[0]} rows for N={self.N} species")
        if self.alpha < 0:
            raise InvalidArgument("alpha must be >= 0")
        if np.any(self.beta < 0):
            raise InvalidArgument("beta must be >= 0")
        if not 0 < self.rho_min < self.rho_max:
            raise InvalidArgument("need 0 < rho_min < rho_max")
        if self.sigma_u <= 0 or self.sigma_phi <= 0:
            raise InvalidArgument("step sizes must be positive")
        if self.prox_sweeps < 1:
            raise InvalidArgument("prox_sweeps must be >= 1")
        if self.R == self.N:
            self.pairs = np.array([(p, (p + 1) % self.N) for p in range(self.R)], dtype=np.int64)
        elif self.alpha == 0:
            self.pairs = np.zeros((self.R, 2), dtype=np.int64)
        else:
            raise InvalidArgument("reaction mobility is only defined for one reaction per species; use alpha = 0")

    @property
    def R(self) -> int:
        return self.gamma.shape[1]

    @property
    def mass_coefficient(self) -> np.ndarray:
        """Diagonal of gamma gamma^T (2 for every species of the cyclic network)."""
        return np.einsum("ip,ip->i", self.gamma, self.gamma)


def log_mean(a: float, b: float) -> float:
    if a <= 0 or b <= 0:
        raise DomainError(f"log-mean needs positive arguments, got ({a}, {b})")
    la, lb = math.log(a), math.log(b)
    if abs(la - lb) < LOGMEAN_EPS:
        return 0.5 * (a + b)
    return (a - b) / (la - lb)


def log_mean_array(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a <= 0) or np.any(b <= 0):
        raise DomainError("log-mean needs positive arguments")
    la, lb = np.log(a), np.log(b)
    diff = la - lb
    near = np.abs(diff) < LOGMEAN_EPS
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(near, 0.5 * (a + b), (a - b) / np.where(near, 1.0, diff))
    return out


def mobilities(rho: np.ndarray, params: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """(V1, V2) for species densities ``rho`` of shape (N, ...)."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise DomainError("densities must be positive")
    V1 = rho
    if params.alpha == 0:
        V2 = np.zeros((params.R,) + rho.shape[1:])
    else:
        pa, pb = params.pairs[:, 0], params.pairs[:, 1]
        V2 = params.alpha * log_mean_array(rho[pa], rho[pb])
    return V1, V2


@dataclass
class PointBars:
    """Shifted iterates u^k + sigma_u * D(phi~) at one or many quadrature points.

    ``rho_bar`` (N, ...), ``m_bar`` (N, d, ...), ``s_bar`` (R, ...), ``rho_prev`` (N, ...).
    """

    rho_bar: np.ndarray
    m_bar: np.ndarray
    s_bar: np.ndarray
    rho_prev: np.ndarray

    @property
    def m2(self) -> np.ndarray:
        return np.sum(np.asarray(self.m_bar, dtype=float) ** 2, axis=1)


def recover_flux_source(rho: np.ndarray, bars: PointBars, params: ModelParams):
    """Closed-form flux and source minimizers given the densities."""
    V1, V2 = mobilities(rho, params)
    sig = params.sigma_u
    V1 = np.asarray(V1, dtype=float)
    m_bar = np.asarray(bars.m_bar, dtype=float)
    m = (V1 / (sig + V1))[:, None] * m_bar
    s = V2 / (sig + V2) * np.asarray(bars.s_bar, dtype=float)
    return m, s


def _entropy(rho):
    return rho * np.log(rho)


def pointwise_objective(rho: np.ndarray, bars: PointBars, params: ModelParams):
    """Density objective left after eliminating fluxes and sources (vectorized over points)."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < params.rho_min) or np.any(rho > params.rho_max):
        raise DomainError("density outside [rho_min, rho_max]")
    sig = params.sigma_u
    V1, V2 = mobilities(rho, params)
    beta = params.beta.reshape((-1,) + (1,) * (rho.ndim - 1))
    per_species = (
        bars.m2 / (2.0 * (sig + V1))
        + (rho - np.asarray(bars.rho_bar)) ** 2 / (2.0 * sig)
        + beta * _entropy(rho)
    )
    per_reaction = np.asarray(bars.s_bar, dtype=float) ** 2 / (2.0 * (sig + V2))
    return np.sum(per_species, axis=0) + np.sum(per_reaction, axis=0)


def objective_gradient(rho: np.ndarray, bars: PointBars, params: ModelParams) -> np.ndarray:
    """Analytic d/d rho_i of :func:`pointwise_objective` at a single point."""
    rho = np.asarray(rho, dtype=float)
    sig = params.sigma_u
    g = -bars.m2 / (2.0 * (sig + rho) ** 2) + (rho - bars.rho_bar) / sig + params.beta * (np.log(rho) + 1.0)
    if params.alpha > 0:
        _, V2 = mobilities(rho, params)
        for p, (a, b) in enumerate(params.pairs):
            coef = -bars.s_bar[p] ** 2 / (2.0 * (sig + V2[p]) ** 2) * params.alpha
            da, db = _log_mean_partials(rho[a], rho[b])
            if a == b:
                g[a] += coef * 1.0
            else:
                g[a] += coef * da
                g[b] += coef * db
    return g


def _log_mean_partials(a: float, b: float) -> tuple[float, float]:
    la, lb = math.log(a), math.log(b)
    if abs(la - lb) < 1e-6:
        return 0.5, 0.5
    L = (a - b) / (la - lb)
    return (1.0 - L / a) / (la - lb), (L / b - 1.0) / (la - lb)


# -- single-coordinate objective shared by the Python and jitted prox paths --------


def _coord_objective(x, args):
    """Terms of the density objective that depend on species ``i`` (set to x)."""
    i, r, m2, rbar, sbar, pa, pb, beta, alpha, sig = args
    val = m2[i] / (2.0 * (sig + x)) + (x - rbar[i]) ** 2 / (2.0 * sig)
    if beta[i] > 0.0:
        val += beta[i] * x * math.log(x)
    if alpha > 0.0:
        for p in range(len(pa)):
            a = pa[p]
            b = pb[p]
            if a != i and b != i:
                continue
            ra = x if a == i else r[a]
            rb = x if b == i else r[b]
            la = math.log(ra)
            lb = math.log(rb)
            if abs(la - lb) < LOGMEAN_EPS:
                lm = 0.5 * (ra + rb)
            else:
                lm = (ra - rb) / (la - lb)
            val += sbar[p] ** 2 / (2.0 * (sig + alpha * lm))
    return val


_coord_objective_jit = numba.njit(_coord_objective)


def _args(i, r, bars: PointBars, params: ModelParams):
    return (
        i,
        r,
        np.asarray(bars.m2, dtype=float),
        np.asarray(bars.rho_bar, dtype=float),
        np.asarray(bars.s_bar, dtype=float),
        params.pairs[:, 0],
        params.pairs[:, 1],
        params.beta,
        float(params.alpha),
        float(params.sigma_u),
    )


def coordinate_objective(i: int, rho: np.ndarray, bars: PointBars, params: ModelParams):
    """Callable x -> species-i slice of the objective, other species fixed at ``rho``."""
    args = _args(i, np.array(rho, dtype=float), bars, params)
    return lambda x: _coord_objective(x, args)


def prox_density_sweep(rho_prev: np.ndarray, bars: PointBars, params: ModelParams, check_descent=False):
    """Coordinate-descent density solve at one point (reference Python path).

    Species are updated in order 0..N-1, each by Brent on [rho_min, rho_max], for
    ``params.prox_sweeps`` passes. ``rho_bar`` stays fixed during a pass.
    """
    r = np.clip(np.array(rho_prev, dtype=float), params.rho_min, params.rho_max)
    for _ in range(params.prox_sweeps):
        for i in range(params.N):
            f = coordinate_objective(i, r, bars, params)
            before = pointwise_objective(r, bars, params) if check_descent else None
            x, fx = brent_minimize(f, params.rho_min, params.rho_max, params.brent_tol, params.brent_maxiter)
            if f(r[i]) <= fx:
                x = r[i]
            r[i] = x
            if check_descent:
                after = pointwise_objective(r, bars, params)
                assert after <= before + 1e-14 * max(1.0, abs(before)), (before, after)
    return r


@numba.njit(parallel=True)
def _prox_kernel(rho, m2, rbar, sbar, pa, pb, beta, alpha, sig, lo, hi, tol, maxiter, sweeps):
    # arrays are point-major: rho (P, N), sbar (P, R)
    P, N = rho.shape
    out = np.empty_like(rho)
    bad = np.zeros(P, dtype=np.bool_)
    for j in prange(P):
        r = rho[j].copy()
        for _ in range(sweeps):
            for i in range(N):
                args = (i, r, m2[j], rbar[j], sbar[j], pa, pb, beta, alpha, sig)
                x, fx, _, ok = brent_jit(_coord_objective_jit, args, lo, hi, tol, maxiter)
                if not ok:
                    bad[j] = True
                    continue
                for xe in (lo, hi, r[i]):
                    fe = _coord_objective_jit(xe, args)
                    if fe <= fx:
                        x = xe
                        fx = fe
                r[i] = x
        out[j] = r
    return out, bad


def prox_density_field(rho_prev: np.ndarray, bars: PointBars, params: ModelParams) -> np.ndarray:
    """Vectorized :func:`prox_density_sweep` over all points; arrays have shape (N, ...)."""
    shape = np.shape(rho_prev)
    N = shape[0]
    P = int(np.prod(shape[1:]))

    def pm(a, lead):
        return np.ascontiguousarray(np.asarray(a, dtype=float).reshape(lead, P).T)

    rho0 = np.clip(pm(rho_prev, N), params.rho_min, params.rho_max)
    out, bad = _prox_kernel(
        rho0,
        pm(bars.m2, N),
        pm(bars.rho_bar, N),
        pm(bars.s_bar, params.R),
        params.pairs[:, 0].copy(),
        params.pairs[:, 1].copy(),
        params.beta,
        float(params.alpha),
        float(params.sigma_u),
        float(params.rho_min),
        float(params.rho_max),
        float(params.brent_tol),
        int(params.brent_maxiter),
        int(params.prox_sweeps),
    )
    if bad.any():
        raise NumericalError(f"non-finite density objective at {int(bad.sum())} points")
    return np.ascontiguousarray(out.T).reshape(shape)


def compute_ubar(rho, m, s, phi_tilde, mesh, params: ModelParams) -> PointBars:
    """Shift the primal iterate by sigma_u * D(phi~) at every quadrature point."""
    N = params.N
    if len(phi_tilde) != N or rho.shape[0] != N:
        raise ShapeError("per-species arrays must have N entries")
    sig = params.sigma_u
    dts, grads, vals = [], [], []
    for i in range(N):
        dt, grad = eval_D(mesh, phi_tilde[i])
        dts.append(dt)
        grads.append(grad)
        vals.append(eval_values(mesh, phi_tilde[i]))
    rho_bar = rho + sig * np.stack(dts)
    m_bar = m + sig * np.stack(grads)
    s_bar = s + sig * apply_gamma_T(np.stack(vals), params.gamma)
    return PointBars(rho_bar, m_bar, s_bar, rho)
