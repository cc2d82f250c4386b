"""1D two-indicator barycenter for several reaction strengths.

Prints the mass of species 1 that has appeared on species 2's initial support at a
chosen time, and saves the species-1 profiles to an .npz file.
"""

import argparse

import numpy as np

from mfc_barycenter.fields import interpolate_dg
from mfc_barycenter.mesh import MeshSpec, build_mesh
from mfc_barycenter.model import ModelParams, gamma_cyclic
from mfc_barycenter.pdhg import PDHGConfig, PDHGSolver, Problem


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--alphas", default="0,10,50,100")
    ap.add_argument("--time", type=float, default=0.2)
    ap.add_argument("--cells", type=int, default=32)
    ap.add_argument("--tol", type=float, default=1e-5)
    ap.add_argument("--out", default="reaction_strength_1d.npz")
    args = ap.parse_args()

    mesh = build_mesh(MeshSpec(1, (args.cells,), (1.0,), n_t=4, T=1.0, k=2))
    x = mesh.space_coords[:, 0]
    sup1, sup2 = (0.35, 0.45), (0.55, 0.65)
    rho0 = np.stack([5.0 * ((x > a) & (x < b)) for a, b in (sup1, sup2)])
    xs = np.linspace(0, 1, 801)
    inside = (xs > sup2[0]) & (xs < sup2[1])
    profiles = {}
    for alpha in (float(a) for a in args.alphas.split(",")):
        st = PDHGSolver(Problem(mesh, ModelParams(2, gamma_cyclic(2), alpha=alpha), rho0), PDHGConfig(tol=args.tol)).solve()
        prof = interpolate_dg(mesh, st.rho[0], np.array([args.time]), [xs])[0]
        profiles[f"alpha_{alpha:g}"] = prof
        mass = prof[inside].mean() * (sup2[1] - sup2[0])
        print(f"alpha {alpha:6g}: {st.iteration:5d} iterations, species-1 mass on species-2 support {mass:.4e}")
    np.savez(args.out, x=xs, **profiles)


if __name__ == "__main__":
    main()
