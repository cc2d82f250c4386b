"""Primal-dual hybrid gradient iteration for the multi-species barycenter saddle point.

One iteration:

1. dual ascent: one elliptic solve per species for the multiplier increment, with the
   cross-species couplings split Gauss-Seidel style (updated increments for earlier
   species, previous-iteration increments for later ones);
2. extrapolation phi~ = 2 phi^{k+1} - phi^k;
3. primal descent: pointwise terminal-density update, then per-point density prox
   (coordinate-wise Brent) followed by closed-form flux/source recovery.

Two run modes share the loop. ``barycenter``: the common terminal density is a
variable. ``geodesic``: each species has a fixed terminal target, which turns the
problem into the two-endpoint (reactive) transport distance.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .elliptic import EllipticOperator, assemble_operator, pcg_solve
from .errors import InvalidArgument, NumericalError, ShapeError
from .fields import (
    adjoint_D,
    apply_gamma,
    apply_gamma_T,
    eval_D,
    eval_values,
    inner_dg,
    l1_norm_spatial,
    spatial_inner,
    spatial_integral,
    trace_adjoint,
    trace_at_time,
)
from .mesh import SpaceTimeMesh
from .model import ModelParams, compute_ubar, mobilities, prox_density_field, recover_flux_source

log = logging.getLogger(__name__)

MODES = ("barycenter", "geodesic")


@dataclass
class PDHGConfig:
    tol: float = 1e-5
    max_iter: int = 20000
    diagnostics_every: int = 10
    mode: str = "barycenter"
    clamp_varrho: bool = False
    linear_tol: float = 1e-10
    linear_max_iter: int = 5000
    preconditioner: str = "fdm"

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidArgument(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.tol > 0:
            raise InvalidArgument("tol must be > 0")
        if self.max_iter < 1:
            raise InvalidArgument("max_iter must be >= 1")
        if self.diagnostics_every < 1:
            raise InvalidArgument("diagnostics_every must be >= 1")


@dataclass
class Record:
    iter: int
    err: float
    objective: float = math.nan
    kkt_m: float = math.nan
    kkt_s: float = math.nan
    mass_drift: float = math.nan
    phi_T_sum: float = math.nan
    kkt_cont: float = math.nan
    linear_ok: bool = True


@dataclass
class SolverState:
    rho: np.ndarray  # (N, n_tq, n_sq)
    m: np.ndarray  # (N, d, n_tq, n_sq)
    s: np.ndarray  # (R, n_tq, n_sq)
    phi: np.ndarray  # (N, *cg_shape)
    phi_prev: np.ndarray
    phi_tilde: np.ndarray
    varrho: np.ndarray | None  # (n_sq,), barycenter mode only
    iteration: int = 0
    err: float = math.inf
    converged: bool = False
    history: list[Record] = field(default_factory=list)
    wall_time: float = 0.0


@dataclass
class Problem:
    mesh: SpaceTimeMesh
    params: ModelParams
    rho0: np.ndarray  # (N, n_sq)
    rho1: np.ndarray | None = None  # (N, n_sq), geodesic targets

    def __post_init__(self):
        p = self.params
        ns = self.mesh.n_sq
        self.rho0 = np.clip(np.asarray(self.rho0, dtype=float), p.rho_min, None)
        if self.rho0.shape != (p.N, ns):
            raise ShapeError(f"initial densities have shape {self.rho0.shape}, expected {(p.N, ns)}")
        if self.rho1 is not None:
            self.rho1 = np.clip(np.asarray(self.rho1, dtype=float), p.rho_min, None)
            if self.rho1.shape != (p.N, ns):
                raise ShapeError(f"terminal targets have shape {self.rho1.shape}, expected {(p.N, ns)}")


class PDHGSolver:
    """Holds the problem, the (once-assembled) elliptic operators and the loop."""

    def __init__(self, problem: Problem, config: PDHGConfig | None = None):
        self.problem = problem
        self.config = config or PDHGConfig()
        self.mesh = problem.mesh
        self.params = problem.params
        p = self.params
        if self.barycenter:
            if not np.allclose(p.gamma.sum(axis=0), 0.0):
                raise InvalidArgument("barycenter mode needs reaction columns summing to zero (mass conservation)")
        elif problem.rho1 is None:
            raise InvalidArgument("geodesic mode needs terminal targets")
        self.coupling = p.gamma @ p.gamma.T
        self.ops: dict[float, EllipticOperator] = {}
        for c in p.mass_coefficient:
            c = float(c)
            if c not in self.ops:
                self.ops[c] = assemble_operator(self.mesh, c, terminal=self.barycenter)

    @property
    def barycenter(self) -> bool:
        return self.config.mode == "barycenter"

    def operator(self, i: int) -> EllipticOperator:
        return self.ops[float(self.params.mass_coefficient[i])]

    # -- initialization ------------------------------------------------------------

    def initialize(self) -> SolverState:
        mesh, p = self.mesh, self.params
        nt, ns = mesh.n_tq, mesh.n_sq
        rho0 = np.clip(self.problem.rho0, p.rho_min, p.rho_max)
        rho = np.repeat(rho0[:, None, :], nt, axis=1)
        zeros_phi = np.zeros((p.N,) + mesh.cg_shape)
        return SolverState(
            rho=rho,
            m=np.zeros((p.N, mesh.d, nt, ns)),
            s=np.zeros((p.R, nt, ns)),
            phi=zeros_phi,
            phi_prev=zeros_phi.copy(),
            phi_tilde=zeros_phi.copy(),
            varrho=self.problem.rho0.mean(axis=0) if self.barycenter else None,
        )

    # -- step 1 --------------------------------------------------------------------

    def assemble_rhs(self, i: int, state: SolverState, deltas, sigma_phi: float | None = None) -> np.ndarray:
        """Right-hand side of the species-i elliptic solve.

        ``deltas[j]`` is the latest available increment of species j (zero arrays are
        fine); entry i is ignored.
        """
        mesh, p = self.mesh, self.params
        sig = p.sigma_phi if sigma_phi is None else sigma_phi
        source = apply_gamma(state.s, p.gamma)[i]
        b = -sig * adjoint_D(mesh, state.rho[i], state.m[i], source)
        target = state.varrho if self.barycenter else self.problem.rho1[i]
        b += sig * trace_adjoint(mesh, target, "T")
        b -= sig * trace_adjoint(mesh, self.problem.rho0[i], "0")
        op = self.operator(i)
        others = [j for j in range(p.N) if j != i]
        if others:
            cross = -sum(self.coupling[i, j] * deltas[j] for j in others)
            if np.any(cross):
                b += op.mass_apply(cross)
            if self.barycenter:
                b -= op.terminal_apply(sum(deltas[j] for j in others))
        return b

    def step_phi(self, state: SolverState) -> bool:
        """Dual ascent plus extrapolation; returns False if a linear solve stalled."""
        p, cfg = self.params, self.config
        prev = state.phi - state.phi_prev
        new = []
        ok = True
        for i in range(p.N):
            latest = [new[j] if j < i else prev[j] for j in range(p.N)]
            b = self.assemble_rhs(i, state, latest)
            x, info = pcg_solve(self.operator(i), b, cfg.linear_tol, cfg.linear_max_iter, cfg.preconditioner)
            if not info.converged:
                ok = False
                log.warning("species %d: linear solve stopped at residual %.3e", i, info.rel_residual)
            new.append(x)
        delta = np.stack(new)
        state.phi_prev = state.phi
        state.phi = state.phi + delta
        state.phi_tilde = state.phi + delta
        return ok

    # -- step 3 --------------------------------------------------------------------

    def step_primal(self, state: SolverState) -> None:
        mesh, p = self.mesh, self.params
        if self.barycenter:
            total = sum(trace_at_time(mesh, ph, "T") for ph in state.phi_tilde)
            state.varrho = state.varrho - p.sigma_u * total
            if self.config.clamp_varrho:
                state.varrho = np.maximum(state.varrho, 0.0)
        bars = compute_ubar(state.rho, state.m, state.s, state.phi_tilde, mesh, p)
        rho = prox_density_field(state.rho, bars, p)
        if rho.min() < p.rho_min or rho.max() > p.rho_max:
            raise NumericalError("density left [rho_min, rho_max] after the prox step")
        state.m, state.s = recover_flux_source(rho, bars, p)
        state.rho = rho

    # -- diagnostics ---------------------------------------------------------------

    def kinetic_energy(self, state: SolverState) -> float:
        """Transport and reaction action sum |m|^2 / (2 V1) + |s|^2 / (2 V2)."""
        mesh, p = self.mesh, self.params
        V1, V2 = mobilities(state.rho, p)
        m2 = np.sum(state.m**2, axis=1)
        ones = np.ones_like(state.rho[0])
        total = inner_dg(mesh, m2 / (2.0 * V1), np.broadcast_to(ones, m2.shape))
        if p.alpha > 0:
            total += inner_dg(mesh, state.s**2 / (2.0 * V2), np.broadcast_to(ones, state.s.shape))
        return total

    def objective(self, state: SolverState) -> float:
        mesh, p = self.mesh, self.params
        ent = state.rho * np.log(state.rho) * p.beta[:, None, None]
        return self.kinetic_energy(state) + inner_dg(mesh, ent, np.ones_like(ent))

    def distance(self, state: SolverState) -> float:
        """Two-endpoint distance estimate sqrt(2 * action); meaningful in geodesic mode with beta = 0."""
        return math.sqrt(max(2.0 * self.kinetic_energy(state), 0.0))

    def diagnostics(self, state: SolverState) -> dict:
        mesh, p = self.mesh, self.params
        V1, V2 = mobilities(state.rho, p)
        res_m = 0.0
        vals = []
        for i in range(p.N):
            _, grad = eval_D(mesh, state.phi[i])
            diff = state.m[i] / V1[i] - grad
            res_m += inner_dg(mesh, diff, diff)
            vals.append(eval_values(mesh, state.phi[i]))
        if p.alpha > 0:
            diff = state.s / V2 - apply_gamma_T(np.stack(vals), p.gamma)
            kkt_s = math.sqrt(inner_dg(mesh, diff, diff))
        else:
            kkt_s = math.nan
        mass = spatial_integral(mesh, state.rho.sum(axis=0))
        mass0 = float(spatial_integral(mesh, self.problem.rho0.sum(axis=0)))
        if self.barycenter:
            tsum = sum(trace_at_time(mesh, ph, "T") for ph in state.phi)
            phi_T = math.sqrt(spatial_inner(mesh, tsum, tsum))
        else:
            phi_T = math.nan
        zero = [np.zeros(mesh.cg_shape)] * p.N
        cont = sum(np.sum(self.assemble_rhs(i, state, zero, sigma_phi=1.0) ** 2) for i in range(p.N))
        return dict(
            objective=self.objective(state),
            kkt_m=math.sqrt(res_m),
            kkt_s=kkt_s,
            mass_drift=float(np.max(np.abs(mass - mass0))),
            phi_T_sum=phi_T,
            kkt_cont=math.sqrt(cont),
        )

    # -- loop ----------------------------------------------------------------------

    def _change(self, state: SolverState, old_varrho, old_rho) -> float:
        if self.barycenter:
            return l1_norm_spatial(self.mesh, state.varrho - old_varrho)
        diff = np.abs(state.rho - old_rho)
        return inner_dg(self.mesh, diff, np.ones_like(diff))

    def iterate(self, state: SolverState, callback=None) -> SolverState:
        """Run until the terminal-density change drops below tol or max_iter is hit."""
        cfg = self.config
        t0 = time.perf_counter()
        while state.iteration < cfg.max_iter:
            old_varrho = None if state.varrho is None else state.varrho.copy()
            old_rho = state.rho
            linear_ok = self.step_phi(state)
            self.step_primal(state)
            state.iteration += 1
            state.err = self._change(state, old_varrho, old_rho)
            rec = Record(state.iteration, state.err, linear_ok=linear_ok)
            done = state.err < cfg.tol
            last = done or state.iteration >= cfg.max_iter
            if state.iteration == 1 or state.iteration % cfg.diagnostics_every == 0 or last:
                for key, val in self.diagnostics(state).items():
                    setattr(rec, key, val)
            state.history.append(rec)
            if callback is not None:
                callback(state, rec)
            if not np.isfinite(state.err):
                raise NumericalError(f"iteration {state.iteration}: non-finite change")
            if done:
                state.converged = True
                break
        state.wall_time += time.perf_counter() - t0
        return state

    def solve(self, callback=None) -> SolverState:
        return self.iterate(self.initialize(), callback)


def history_as_dicts(history: list[Record]) -> list[dict]:
    return [asdict(r) for r in history]
