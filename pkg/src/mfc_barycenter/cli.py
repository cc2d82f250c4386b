"""Command line entry point: ``mfc-barycenter run config.ini [overrides]``."""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from .config import MODES, RunConfig, parse_config
from .errors import ConfigError
from .export import gaussian_density, read_voxel_density, snapshot_fields, write_convergence_csv, write_vtk_snapshot
from .mesh import MeshSpec, build_mesh
from .model import ModelParams, gamma_cyclic
from .pdhg import PDHGConfig, PDHGSolver, Problem

EXIT_CONVERGED, EXIT_ERROR, EXIT_MAX_ITER = 0, 1, 2


def _densities(specs, mesh, rho_min):
    out = []
    for s in specs:
        if s.kind == "gaussian":
            out.append(gaussian_density(s.center, s.sharpness, s.amplitude, mesh, rho_min))
        else:
            out.append(read_voxel_density(s.path, mesh, s.normalize, rho_min))
    return np.stack(out)


def build_solver(cfg: RunConfig) -> PDHGSolver:
    mesh = build_mesh(MeshSpec(cfg.d, cfg.n_cells, cfg.lengths, cfg.n_t, cfg.T, cfg.k))
    gamma = gamma_cyclic(cfg.N) if cfg.N >= 2 else np.ones((1, 1))
    params = ModelParams(
        cfg.N,
        gamma,
        alpha=cfg.alpha,
        beta=np.array(cfg.beta),
        rho_min=cfg.rho_min,
        rho_max=cfg.rho_max,
        sigma_u=cfg.sigma_u,
        sigma_phi=cfg.sigma_phi,
        prox_sweeps=cfg.prox_sweeps,
    )
    rho0 = _densities(cfg.densities, mesh, cfg.rho_min)
    rho1 = _densities(cfg.targets, mesh, cfg.rho_min) if cfg.mode == "geodesic" else None
    pcfg = PDHGConfig(
        tol=cfg.tol,
        max_iter=cfg.max_iter,
        diagnostics_every=cfg.diagnostics_every,
        mode=cfg.mode,
        clamp_varrho=cfg.clamp_varrho,
        preconditioner=None if cfg.preconditioner == "none" else cfg.preconditioner,
    )
    return PDHGSolver(Problem(mesh, params, rho0, rho1), pcfg)


def run(cfg: RunConfig, stream=None) -> int:
    """Solve, export and print a one-line summary; returns the exit status."""
    solver = build_solver(cfg)
    state = solver.solve()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if "csv" in cfg.formats:
        write_convergence_csv(state.history, out / "convergence.csv")
    if "vtk" in cfg.formats:
        for j, t in enumerate(cfg.snapshots):
            fields = snapshot_fields(state, solver.mesh, t)
            write_vtk_snapshot(fields, solver.mesh, out / f"snapshot_{j:03d}.vtk", title=f"t = {t:#.9g}")
    obj = solver.objective(state)
    print(
        f"{'converged' if state.converged else 'max_iter reached'}: iterations={state.iteration} "
        f"err={state.err:.3e} objective={obj:.9g} wall_time={state.wall_time:.2f}s",
        file=stream or sys.stdout,
    )
    return EXIT_CONVERGED if state.converged else EXIT_MAX_ITER


def _times(raw: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in raw.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad snapshot list {raw!r}") from None


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mfc-barycenter", description="Reaction-diffusion Wasserstein barycenters.")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="solve the problem described by a config file")
    r.add_argument("config")
    r.add_argument("--tol", type=float)
    r.add_argument("--max-iter", type=int, dest="max_iter")
    r.add_argument("--out", dest="out_dir")
    r.add_argument("--snapshots", type=_times, help="comma separated times, e.g. 0,0.5,1")
    r.add_argument("--mode", choices=MODES)
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
        overrides = {k: getattr(args, k) for k in ("tol", "max_iter", "out_dir", "snapshots", "mode")}
        cfg = dataclasses.replace(cfg, **{k: v for k, v in overrides.items() if v is not None}).validate()
        return run(cfg)
    except (ConfigError, ValueError, ArithmeticError, MemoryError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
