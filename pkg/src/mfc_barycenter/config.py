"""Run configuration: an INI-style ``key = value`` file with ``[section]`` headers.

Example::

    [mesh]
    d = 1
    n_cells = 32
    lengths = 1.0
    n_t = 8
    T = 1.0
    k = 2

    [model]
    N = 2
    alpha = 0
    beta = 0.001

    [pdhg]
    tol = 1e-5
    max_iter = 20000

    [density.1]
    type = gaussian
    center = 0.3
    sharpness = 50

    [density.2]
    type = voxel
    path = shape.vox
    normalize = true

    [output]
    dir = out
    snapshots = 0, 0.5, 1
    formats = vtk, csv

``[target.i]`` sections (same keys as ``[density.i]``) give the terminal densities
of geodesic runs. Every key is checked; anything unknown is rejected.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

MODES = ("barycenter", "geodesic")
FORMATS = ("vtk", "csv")
PRECONDITIONERS = ("fdm", "jacobi", "none")


@dataclass
class DensitySpec:
    kind: str  # "gaussian" or "voxel"
    center: tuple[float, ...] = ()
    sharpness: float = 1.0
    amplitude: float = 1.0
    path: str = ""
    normalize: bool = True


@dataclass
class RunConfig:
    # mesh
    d: int
    n_cells: tuple[int, ...]
    lengths: tuple[float, ...]
    n_t: int
    T: float = 1.0
    k: int = 1
    # model
    N: int = 1
    alpha: float = 0.0
    beta: tuple[float, ...] = (0.0,)
    mode: str = "barycenter"
    rho_min: float = 1e-6
    rho_max: float = 40.0
    # pdhg
    tol: float = 1e-5
    max_iter: int = 20000
    sigma_u: float = 1.0
    sigma_phi: float = 1.0
    clamp_varrho: bool = False
    prox_sweeps: int = 1
    diagnostics_every: int = 10
    preconditioner: str = "fdm"
    # data
    densities: list[DensitySpec] = field(default_factory=list)
    targets: list[DensitySpec] = field(default_factory=list)
    # output
    out_dir: str = "out"
    snapshots: tuple[float, ...] = ()
    formats: tuple[str, ...] = FORMATS

    def validate(self) -> "RunConfig":
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(self.d in (1, 2, 3), "d must be 1, 2 or 3")
        need(len(self.n_cells) == self.d, "n_cells must have d entries")
        need(all(n >= 1 for n in self.n_cells), "n_cells must be >= 1")
        need(len(self.lengths) == self.d, "lengths must have d entries")
        need(all(L > 0 for L in self.lengths), "lengths must be > 0")
        need(self.n_t >= 1, "n_t must be >= 1")
        need(self.T > 0, "T must be > 0")
        need(self.k >= 1, "k must be >= 1")
        need(self.N >= 1, "N must be >= 1")
        need(self.alpha >= 0, "alpha must be ≥ 0")
        need(len(self.beta) in (1, self.N), "beta must have 1 or N entries")
        need(all(b >= 0 for b in self.beta), "beta must be ≥ 0")
        need(self.mode in MODES, f"mode must be one of {MODES}")
        need(0 < self.rho_min < self.rho_max, "need 0 < rho_min < rho_max")
        need(self.tol > 0, "tol must be > 0")
        need(self.max_iter >= 1, "max_iter must be >= 1")
        need(self.sigma_u > 0 and self.sigma_phi > 0, "sigma_u and sigma_phi must be > 0")
        need(self.prox_sweeps >= 1, "prox_sweeps must be >= 1")
        need(self.diagnostics_every >= 1, "diagnostics_every must be >= 1")
        need(self.preconditioner in PRECONDITIONERS, f"preconditioner must be one of {PRECONDITIONERS}")
        need(len(self.densities) == self.N, f"N = {self.N} but {len(self.densities)} density sections given")
        if self.mode == "geodesic":
            need(len(self.targets) == self.N, f"geodesic mode needs {self.N} target sections")
        for spec in self.densities + self.targets:
            if spec.kind == "gaussian":
                need(len(spec.center) == self.d, "gaussian center must have d entries")
                need(spec.sharpness > 0, "sharpness must be > 0")
            else:
                need(self.d == 3, "voxel densities need d = 3")
                need(bool(spec.path), "voxel density needs a path")
        need(all(0 <= t <= self.T for t in self.snapshots), "snapshot times must lie in [0, T]")
        need(all(f in FORMATS for f in self.formats), f"formats must be among {FORMATS}")
        return self


# -- parsing ----------------------------------------------------------------------

_KEYS = {
    "mesh": {"d": int, "n_cells": "ints", "lengths": "floats", "n_t": int, "T": float, "k": int},
    "model": {"N": int, "alpha": float, "beta": "floats", "mode": str, "rho_min": float, "rho_max": float},
    "pdhg": {
        "tol": float,
        "max_iter": int,
        "sigma_u": float,
        "sigma_phi": float,
        "clamp_varrho": bool,
        "prox_sweeps": int,
        "diagnostics_every": int,
        "preconditioner": str,
    },
    "output": {"dir": str, "snapshots": "floats", "formats": "strs"},
}
_DENSITY_KEYS = {
    "type": str,
    "center": "floats",
    "sharpness": float,
    "amplitude": float,
    "path": str,
    "normalize": bool,
}
_SECTION_RE = re.compile(r"^(density|target)\.(\d+)$")


def _list(raw: str) -> list[str]:
    return [p for p in re.split(r"[,\s]+", raw.strip()) if p]


def _convert(section: str, key: str, raw: str, kind):
    try:
        if kind == "ints":
            return tuple(int(v) for v in _list(raw))
        if kind == "floats":
            return tuple(float(v) for v in _list(raw))
        if kind == "strs":
            return tuple(_list(raw))
        if kind is bool:
            low = raw.strip().lower()
            if low not in configparser.ConfigParser.BOOLEAN_STATES:
                raise ValueError(raw)
            return configparser.ConfigParser.BOOLEAN_STATES[low]
        return kind(raw.strip())
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from None


def _section_values(parser, section: str, schema: dict) -> dict:
    out = {}
    for key, raw in parser.items(section):
        if key not in schema:
            raise ConfigError(f"unknown key {key!r} in section [{section}]")
        out[key] = _convert(section, key, raw, schema[key])
    return out


def _density(values: dict, section: str) -> DensitySpec:
    kind = values.pop("type", "gaussian")
    if kind not in ("gaussian", "voxel"):
        raise ConfigError(f"[{section}] type must be gaussian or voxel, got {kind!r}")
    return DensitySpec(kind=kind, **values)


def parse_config_string(text: str, source: str = "<string>") -> RunConfig:
    parser = configparser.ConfigParser(
        interpolation=None, default_section="__none__", inline_comment_prefixes=("#", ";")
    )
    parser.optionxform = str  # keys are case sensitive ("T", "N")
    try:
        parser.read_string(text, source=source)
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigError(f"{source}: parse error at line {lineno}: {line.strip()!r}") from None
    except configparser.Error as exc:
        lineno = getattr(exc, "lineno", "?")
        raise ConfigError(f"{source}: parse error at line {lineno}: {exc.message}") from None

    kw: dict = {}
    dens: dict[int, DensitySpec] = {}
    targ: dict[int, DensitySpec] = {}
    for section in parser.sections():
        if section in _KEYS:
            vals = _section_values(parser, section, _KEYS[section])
            if section == "output":
                if "dir" in vals:
                    kw["out_dir"] = vals.pop("dir")
            kw.update(vals)
            continue
        m = _SECTION_RE.match(section)
        if not m:
            raise ConfigError(f"unknown section [{section}]")
        spec = _density(_section_values(parser, section, _DENSITY_KEYS), section)
        (dens if m.group(1) == "density" else targ)[int(m.group(2))] = spec
    for name in ("d", "n_cells", "lengths", "n_t"):
        if name not in kw:
            raise ConfigError(f"[mesh] {name} is required")
    kw["densities"] = [dens[i] for i in sorted(dens)]
    kw["targets"] = [targ[i] for i in sorted(targ)]
    return RunConfig(**kw).validate()


def parse_config(path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc.strerror}") from None
    return parse_config_string(text, source=str(p))


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ", ".join(_fmt(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def format_config(cfg: RunConfig) -> str:
    """Serialize to the text format; parsing the result gives back ``cfg``."""
    lines = []
    for section, schema in _KEYS.items():
        lines.append(f"[{section}]")
        for key in schema:
            attr = "out_dir" if (section, key) == ("output", "dir") else key
            lines.append(f"{key} = {_fmt(getattr(cfg, attr))}")
        lines.append("")
    for prefix, specs in (("density", cfg.densities), ("target", cfg.targets)):
        for i, s in enumerate(specs, 1):
            lines.append(f"[{prefix}.{i}]")
            lines.append(f"type = {s.kind}")
            if s.kind == "gaussian":
                lines += [f"center = {_fmt(s.center)}", f"sharpness = {s.sharpness!r}", f"amplitude = {s.amplitude!r}"]
            else:
                lines += [f"path = {s.path}", f"normalize = {_fmt(s.normalize)}"]
            lines.append("")
    return "\n".join(lines)
