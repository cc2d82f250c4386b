"""Initial densities (Gaussians, voxel files) and result files (VTK snapshots, CSV logs)."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .errors import ConfigError, InvalidArgument, ShapeError
from .fields import interpolate_dg, interpolate_terminal
from .mesh import SpaceTimeMesh

CSV_COLUMNS = ("iter", "err", "objective", "kkt_m", "kkt_s", "mass_drift", "phi_T_sum")


def gaussian_density(center, sharpness: float, amplitude: float, mesh: SpaceTimeMesh, rho_min: float = 1e-6):
    """amplitude * exp(-sharpness |x - center|^2) at the spatial quadrature points."""
    if sharpness <= 0:
        raise InvalidArgument("sharpness must be > 0")
    center = np.asarray(center, dtype=float)
    if center.shape != (mesh.d,):
        raise ShapeError(f"center must have {mesh.d} coordinates")
    r2 = np.sum((mesh.space_coords - center) ** 2, axis=1)
    return np.maximum(amplitude * np.exp(-sharpness * r2), rho_min)


# -- voxel files ------------------------------------------------------------------


def _read_voxels(path) -> np.ndarray:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read voxel file {path}: {exc.strerror}") from None
    head, _, body = text.partition("\n")
    parts = head.split()
    if len(parts) != 4 or parts[0] != "VOXEL":
        raise ConfigError(f"{path}: malformed header {head.strip()!r}, expected 'VOXEL nx ny nz'")
    try:
        nx, ny, nz = (int(p) for p in parts[1:])
    except ValueError:
        raise ConfigError(f"{path}: malformed header {head.strip()!r}") from None
    if min(nx, ny, nz) < 1:
        raise ConfigError(f"{path}: voxel counts must be positive")
    try:
        vals = np.array(body.split(), dtype=float)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if vals.size != nx * ny * nz:
        raise ConfigError(f"{path}: header promises {nx * ny * nz} values, found {vals.size}")
    if not np.all(np.isfinite(vals)):
        raise ConfigError(f"{path}: non-finite voxel values")
    # x runs fastest
    return vals.reshape((nz, ny, nx)).transpose(2, 1, 0)


def _scale_to_unit_mass(v: np.ndarray, w: np.ndarray, rho_min: float) -> np.ndarray:
    """Scale s so that sum w * max(s v, rho_min) = 1 (exact active-set iteration)."""
    floor = rho_min * w.sum()
    if floor >= 1.0 or not np.any(v > 0):
        raise InvalidArgument("cannot normalize: field has no positive mass above rho_min")
    s = 1.0 / float(np.dot(w, np.maximum(v, 0)))
    for _ in range(100):
        active = s * v > rho_min
        s_new = (1.0 - rho_min * w[~active].sum()) / float(np.dot(w[active], v[active]))
        if np.array_equal(active, s_new * v > rho_min):
            return np.maximum(s_new * v, rho_min)
        s = s_new
    return np.maximum(s * v, rho_min)


def read_voxel_density(path, mesh: SpaceTimeMesh, normalize: bool = True, rho_min: float = 1e-6) -> np.ndarray:
    """Nearest-voxel sampling of a ``VOXEL nx ny nz`` file at the spatial quadrature points.

    The voxel block covers the domain box (each axis rescaled to [0, 1]). With
    ``normalize`` the field is scaled so that, after clipping at ``rho_min``, its
    quadrature integral is 1.
    """
    if mesh.d != 3:
        raise InvalidArgument("voxel densities need a 3D mesh")
    vox = _read_voxels(path)
    idx = []
    for a, n in enumerate(vox.shape):
        u = mesh.space_coords[:, a] / mesh.spec.lengths[a]
        idx.append(np.clip(np.floor(u * n).astype(int), 0, n - 1))
    v = vox[tuple(idx)]
    if normalize:
        return _scale_to_unit_mass(v, mesh.space_weights, rho_min)
    return np.maximum(v, rho_min)


# -- VTK snapshots ----------------------------------------------------------------


def vertex_axes(mesh: SpaceTimeMesh) -> list[np.ndarray]:
    return [np.linspace(0.0, ax.length, ax.n + 1) for ax in mesh.space]


def snapshot_fields(state, mesh: SpaceTimeMesh, t: float) -> dict[str, np.ndarray]:
    """Species densities at time t (plus the terminal density) on the vertex grid."""
    xs = vertex_axes(mesh)
    out = {f"rho_{i + 1}": interpolate_dg(mesh, r, np.array([t]), xs)[0] for i, r in enumerate(state.rho)}
    if state.varrho is not None:
        out["varrho"] = interpolate_terminal(mesh, state.varrho, xs)
    return out


def write_vtk_snapshot(fields: dict[str, np.ndarray], mesh: SpaceTimeMesh, path, title: str = "snapshot") -> None:
    """Legacy ASCII STRUCTURED_POINTS file; arrays are indexed (x, y, z) on the vertex grid."""
    dims = [ax.n + 1 for ax in mesh.space] + [1] * (3 - mesh.d)
    spacing = [ax.h for ax in mesh.space] + [1.0] * (3 - mesh.d)
    npts = int(np.prod(dims))
    lines = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        "DIMENSIONS " + " ".join(str(n) for n in dims),
        "ORIGIN 0 0 0",
        "SPACING " + " ".join(f"{h:#.9g}" for h in spacing),
        f"POINT_DATA {npts}",
    ]
    for name, arr in fields.items():
        arr = np.asarray(arr, dtype=float)
        if arr.size != npts:
            raise ShapeError(f"field {name!r} has {arr.size} values, grid has {npts}")
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [f"{v:#.9g}" for v in arr.ravel(order="F")]
    Path(path).write_text("\n".join(lines) + "\n")


def read_vtk_snapshot(path) -> tuple[tuple[int, ...], dict[str, np.ndarray]]:
    """Inverse of :func:`write_vtk_snapshot`: (dimensions, {name: array indexed (x, y, z)})."""
    lines = Path(path).read_text().splitlines()
    dims = tuple(int(v) for v in lines[4].split()[1:])
    npts = int(np.prod(dims))
    fields = {}
    i = 8
    while i < len(lines):
        name = lines[i].split()[1]
        vals = np.array(lines[i + 2 : i + 2 + npts], dtype=float)
        fields[name] = vals.reshape(dims, order="F")
        i += 2 + npts
    return dims, fields


# -- convergence log --------------------------------------------------------------


def _num(v) -> str:
    return "nan" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{v:.9g}"


def write_convergence_csv(history, path) -> None:
    if not history:
        raise InvalidArgument("empty history")
    rows = sorted(history, key=lambda r: r.iter)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow([r.iter, f"{r.err:.6e}"] + [_num(getattr(r, c)) for c in CSV_COLUMNS[2:]])
