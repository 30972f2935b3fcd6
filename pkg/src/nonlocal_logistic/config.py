"""Run configuration: a strict INI document with flat sections.

Grammar (``configparser`` syntax, ``key = value``; ``#`` starts a comment)::

    [run]          seed = 0, output_dir = out
    [domain]       dim (required), n (required, comma list per axis),
                   extent = 1.0, mask_file =
    [model]        p (required), mode = nonlocal | local, r = 1.0, K = 1.0
    [coefficient]  kind = constant | gaussian-bump | linear-ramp | tabulated,
                   amplitude = 1.0, center = 0.5, width = 0.1, start = 1.0,
                   end = 1.0, file =, strict = false, c0 = 0.0
    [initial]      kind = sine-mode | gaussian-bump | tent | random-smoothed
                   | tabulated, mode = 1, tilt = 0.0, center = 0.5,
                   width = 0.1, smoothing = 20, file =
    [solver]       t_end (required), dt = 1e-4, renormalize = true,
                   scheme = imex | rk4, linear_tol = 1e-10, output_every = 1,
                   snapshot_every = 0, nan_abort = true
    [picard]       enabled = false, tol = 1e-10, max_iter = 50
    [steady]       steady_tol = 1e-9, t_max = 20.0
    [stability]    eps = 0.01, t_end = 2.0
    [perturbation] same keys as [initial]; default gaussian-bump at 0.3
    [convergence]  space_levels = 31,63,127, time_levels = 4e-4,2e-4,1e-4,
                   t_compare = (solver t_end)
    [oracle]       t_end = 0.01, dt = 1e-5, oracle_dt = 1e-6, threshold = 1e-6

Unknown sections or keys are errors. ``dump_config`` writes the effective
configuration in the same grammar and round-trips through ``parse_config``.
"""
from __future__ import annotations

import configparser
import io
import os
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .evolve import PicardConfig, SolverConfig
from .fields import (
    CoefficientSpec,
    InitialSpec,
    build_coefficient,
    build_initial,
    load_table,
    make_params,
)
from .grid import DomainSpec, build_grid

__all__ = ["ConfigError", "RunConfig", "parse_config", "load_config", "dump_config"]


class ConfigError(ValueError):
    pass


_INITIAL_KEYS = {
    "kind": str,
    "mode": int,
    "tilt": float,
    "center": "floats",
    "width": float,
    "smoothing": int,
    "file": str,
}

SCHEMA = {
    "run": {"seed": int, "output_dir": str},
    "domain": {"dim": int, "n": "ints", "extent": "floats", "mask_file": str},
    "model": {"p": float, "mode": str, "r": float, "K": float},
    "coefficient": {
        "kind": str,
        "amplitude": float,
        "center": "floats",
        "width": float,
        "start": float,
        "end": float,
        "file": str,
        "strict": bool,
        "c0": float,
    },
    "initial": _INITIAL_KEYS,
    "solver": {
        "t_end": float,
        "dt": float,
        "renormalize": bool,
        "scheme": str,
        "linear_tol": float,
        "output_every": int,
        "snapshot_every": int,
        "nan_abort": bool,
    },
    "picard": {"enabled": bool, "tol": float, "max_iter": int},
    "steady": {"steady_tol": float, "t_max": float},
    "stability": {"eps": float, "t_end": float},
    "perturbation": _INITIAL_KEYS,
    "convergence": {"space_levels": "ints", "time_levels": "floats", "t_compare": float},
    "oracle": {"t_end": float, "dt": float, "oracle_dt": float, "threshold": float},
}

REQUIRED = (("domain", "dim"), ("domain", "n"), ("model", "p"), ("solver", "t_end"))


@dataclass(frozen=True)
class RunConfig:
    domain: DomainSpec
    p: float
    solver: SolverConfig
    mode: str = "nonlocal"
    r: float = 1.0
    K: float = 1.0
    coefficient: CoefficientSpec = field(default_factory=CoefficientSpec)
    initial: InitialSpec = field(default_factory=InitialSpec)
    snapshot_every: int = 0
    steady_tol: float = 1e-9
    t_max: float = 20.0
    eps: float = 1e-2
    stability_t_end: float = 2.0
    perturbation: InitialSpec = field(
        default_factory=lambda: InitialSpec(kind="gaussian-bump", center=(0.3,), width=0.1)
    )
    space_levels: tuple = (31, 63, 127)
    time_levels: tuple = (4e-4, 2e-4, 1e-4)
    t_compare: Optional[float] = None
    oracle_t_end: float = 0.01
    oracle_imex_dt: float = 1e-5
    oracle_dt: float = 1e-6
    oracle_threshold: float = 1e-6
    seed: int = 0
    output_dir: str = "out"
    mask_file: str = ""
    coefficient_file: str = ""
    initial_file: str = ""
    perturbation_file: str = ""

    def build(self, n=None):
        """Return ``(grid, params, g)``; ``n`` overrides the node count per axis."""
        domain = self.domain if n is None else DomainSpec(
            self.domain.dim, self.domain.extent, n, self.domain.mask
        )
        grid = build_grid(domain)
        a = build_coefficient(self.coefficient, grid)
        params = make_params(grid, self.p, a, self.mode, self.r, self.K)
        g = build_initial(replace(self.initial, seed=self.seed), grid)
        return grid, params, g

    def build_perturbation(self, grid):
        return build_initial(replace(self.perturbation, seed=self.seed + 1), grid)


def _convert(section, key, raw, kind):
    where = f"[{section}] {key}"
    raw = raw.strip()
    try:
        if kind is bool:
            low = raw.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError(raw)
        if kind == "ints":
            return tuple(int(v) for v in raw.split(","))
        if kind == "floats":
            return tuple(float(v) for v in raw.split(","))
        return kind(raw)
    except ValueError:
        want = {"ints": "comma list of integers", "floats": "comma list of numbers"}
        raise ConfigError(
            f"{where}: cannot read {raw!r} as {want.get(kind, getattr(kind, '__name__', kind))}"
        ) from None


def _read(text):
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#",), strict=True
    )
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    values = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            values[section, key] = _convert(section, key, raw, SCHEMA[section][key])
    for sec, key in REQUIRED:
        if (sec, key) not in values:
            raise ConfigError(f"missing required key [{sec}] {key}")
    return values


def _check(cond, key, constraint):
    if not cond:
        raise ConfigError(f"{key}: must satisfy {constraint}")


def _table(path, base_dir):
    if not path:
        return None
    full = path if os.path.isabs(path) else os.path.join(base_dir, path)
    try:
        return load_table(full)
    except OSError as exc:
        raise ConfigError(f"cannot read table {path!r}: {exc}") from None


def _initial_spec(v, section, defaults, base_dir):
    def get(key):
        return v.get((section, key), getattr(defaults, key))

    kind = get("kind")
    path = v.get((section, "file"), "")
    if kind == "tabulated" and not path:
        raise ConfigError(f"[{section}] file: required for kind=tabulated")
    try:
        spec = InitialSpec(
            kind=kind,
            mode=get("mode"),
            tilt=get("tilt"),
            center=tuple(get("center")),
            width=get("width"),
            smoothing=get("smoothing"),
            values=_table(path, base_dir),
        )
    except ValueError as exc:
        raise ConfigError(f"[{section}] kind: {exc}") from None
    _check(spec.width > 0, f"[{section}] width", "width>0")
    _check(spec.mode >= 1, f"[{section}] mode", "mode>=1")
    _check(spec.smoothing >= 0, f"[{section}] smoothing", "smoothing>=0")
    return spec, path


def parse_config(text: str, base_dir: str = ".") -> RunConfig:
    """Parse and validate a config document; relative table paths resolve against ``base_dir``."""
    v = _read(text)
    d = RunConfig.__dataclass_fields__

    def get(section, key, default):
        return v.get((section, key), default)

    dim = v["domain", "dim"]
    _check(dim in (1, 2), "[domain] dim", "dim in {1, 2}")
    n = v["domain", "n"]
    _check(all(k >= 3 for k in n), "[domain] n", "n>=3 per axis")
    _check(len(n) in (1, dim), "[domain] n", "one entry or one per axis")
    extent = get("domain", "extent", (1.0,))
    _check(all(e > 0 for e in extent), "[domain] extent", "extent>0")
    _check(len(extent) in (1, dim), "[domain] extent", "one entry or one per axis")
    mask_file = get("domain", "mask_file", "")
    mask = None
    if mask_file:
        _check(dim == 2, "[domain] mask_file", "dim=2")
        full = mask_file if os.path.isabs(mask_file) else os.path.join(base_dir, mask_file)
        try:
            mask = np.loadtxt(full, dtype=int, ndmin=2).astype(bool)
        except OSError as exc:
            raise ConfigError(f"cannot read mask {mask_file!r}: {exc}") from None
    ext = extent if len(extent) == dim else extent * dim
    nn = n if len(n) == dim else n * dim
    try:
        domain = DomainSpec(dim, ext, nn, mask)
    except ValueError as exc:
        raise ConfigError(f"[domain]: {exc}") from None

    p = v["model", "p"]
    mode = get("model", "mode", "nonlocal")
    _check(mode in ("nonlocal", "local"), "[model] mode", "mode in {nonlocal, local}")
    _check(p > 1 or mode == "local", "[model] p", "p>1")
    K = get("model", "K", 1.0)
    _check(K > 0, "[model] K", "K>0")

    cd = CoefficientSpec()
    ckind = get("coefficient", "kind", cd.kind)
    cfile = get("coefficient", "file", "")
    if ckind == "tabulated" and not cfile:
        raise ConfigError("[coefficient] file: required for kind=tabulated")
    try:
        coefficient = CoefficientSpec(
            kind=ckind,
            amplitude=get("coefficient", "amplitude", cd.amplitude),
            center=tuple(get("coefficient", "center", cd.center)),
            width=get("coefficient", "width", cd.width),
            start=get("coefficient", "start", cd.start),
            end=get("coefficient", "end", cd.end),
            values=_table(cfile, base_dir),
            strict=get("coefficient", "strict", cd.strict),
            c0=get("coefficient", "c0", cd.c0),
        )
    except ValueError as exc:
        raise ConfigError(f"[coefficient] kind: {exc}") from None
    _check(coefficient.width > 0, "[coefficient] width", "width>0")

    initial, ifile = _initial_spec(v, "initial", InitialSpec(), base_dir)
    perturbation, pfile = _initial_spec(
        v, "perturbation", d["perturbation"].default_factory(), base_dir
    )

    t_end = v["solver", "t_end"]
    _check(t_end >= 0, "[solver] t_end", "t_end>=0")
    dt = get("solver", "dt", 1e-4)
    _check(dt > 0, "[solver] dt", "dt>0")
    scheme = get("solver", "scheme", "imex")
    _check(scheme in ("imex", "rk4"), "[solver] scheme", "scheme in {imex, rk4}")
    linear_tol = get("solver", "linear_tol", 1e-10)
    _check(linear_tol > 0, "[solver] linear_tol", "linear_tol>0")
    output_every = get("solver", "output_every", 1)
    _check(output_every >= 1, "[solver] output_every", "output_every>=1")
    snapshot_every = get("solver", "snapshot_every", 0)
    _check(snapshot_every >= 0, "[solver] snapshot_every", "snapshot_every>=0")
    ptol = get("picard", "tol", 1e-10)
    _check(ptol > 0, "[picard] tol", "tol>0")
    pmax = get("picard", "max_iter", 50)
    _check(pmax >= 1, "[picard] max_iter", "max_iter>=1")
    solver = SolverConfig(
        dt=dt,
        t_end=t_end,
        renormalize=get("solver", "renormalize", True),
        picard=PicardConfig(get("picard", "enabled", False), ptol, pmax),
        linear_tol=linear_tol,
        output_every=output_every,
        nan_abort=get("solver", "nan_abort", True),
        scheme=scheme,
    )

    steady_tol = get("steady", "steady_tol", 1e-9)
    _check(steady_tol > 0, "[steady] steady_tol", "steady_tol>0")
    t_max = get("steady", "t_max", 20.0)
    _check(t_max > 0, "[steady] t_max", "t_max>0")
    eps = get("stability", "eps", 1e-2)
    _check(eps >= 0, "[stability] eps", "eps>=0")
    st_end = get("stability", "t_end", 2.0)
    _check(st_end > 0, "[stability] t_end", "t_end>0")
    space_levels = get("convergence", "space_levels", d["space_levels"].default)
    time_levels = get("convergence", "time_levels", d["time_levels"].default)
    _check(len(space_levels) >= 3, "[convergence] space_levels", "at least 3 levels")
    _check(len(time_levels) >= 3, "[convergence] time_levels", "at least 3 levels")
    _check(all(k >= 3 for k in space_levels), "[convergence] space_levels", "n>=3")
    _check(all(x > 0 for x in time_levels), "[convergence] time_levels", "dt>0")
    t_compare = get("convergence", "t_compare", None)
    _check(t_compare is None or t_compare > 0, "[convergence] t_compare", "t_compare>0")
    o = {k: get("oracle", k, dflt) for k, dflt in
         (("t_end", 0.01), ("dt", 1e-5), ("oracle_dt", 1e-6), ("threshold", 1e-6))}
    for k, val in o.items():
        _check(val > 0, f"[oracle] {k}", f"{k}>0")
    seed = get("run", "seed", 0)
    _check(seed >= 0, "[run] seed", "seed>=0")

    return RunConfig(
        domain=domain,
        p=p,
        solver=solver,
        mode=mode,
        r=get("model", "r", 1.0),
        K=K,
        coefficient=coefficient,
        initial=initial,
        snapshot_every=snapshot_every,
        steady_tol=steady_tol,
        t_max=t_max,
        eps=eps,
        stability_t_end=st_end,
        perturbation=perturbation,
        space_levels=tuple(space_levels),
        time_levels=tuple(time_levels),
        t_compare=t_compare,
        oracle_t_end=o["t_end"],
        oracle_imex_dt=o["dt"],
        oracle_dt=o["oracle_dt"],
        oracle_threshold=o["threshold"],
        seed=seed,
        output_dir=get("run", "output_dir", "out"),
        mask_file=mask_file,
        coefficient_file=cfile,
        initial_file=ifile,
        perturbation_file=pfile,
    )


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_config(text, base_dir=os.path.dirname(os.path.abspath(path)))


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_fmt(x) for x in value)
    return str(value)


def _initial_items(spec, path):
    items = [
        ("kind", spec.kind),
        ("mode", spec.mode),
        ("tilt", spec.tilt),
        ("center", tuple(spec.center)),
        ("width", spec.width),
        ("smoothing", spec.smoothing),
    ]
    if path:
        items.append(("file", path))
    return items


def dump_config(cfg: RunConfig) -> str:
    """Effective configuration in the parse_config grammar."""
    s = cfg.solver
    c = cfg.coefficient
    sections = [
        ("run", [("seed", cfg.seed), ("output_dir", cfg.output_dir)]),
        ("domain", [("dim", cfg.domain.dim), ("n", cfg.domain.n),
                    ("extent", cfg.domain.extent)]
         + ([("mask_file", cfg.mask_file)] if cfg.mask_file else [])),
        ("model", [("p", cfg.p), ("mode", cfg.mode), ("r", cfg.r), ("K", cfg.K)]),
        ("coefficient", [("kind", c.kind), ("amplitude", c.amplitude),
                         ("center", tuple(c.center)), ("width", c.width),
                         ("start", c.start), ("end", c.end), ("strict", c.strict),
                         ("c0", c.c0)]
         + ([("file", cfg.coefficient_file)] if cfg.coefficient_file else [])),
        ("initial", _initial_items(cfg.initial, cfg.initial_file)),
        ("solver", [("t_end", s.t_end), ("dt", s.dt), ("renormalize", s.renormalize),
                    ("scheme", s.scheme), ("linear_tol", s.linear_tol),
                    ("output_every", s.output_every),
                    ("snapshot_every", cfg.snapshot_every), ("nan_abort", s.nan_abort)]),
        ("picard", [("enabled", s.picard.enabled), ("tol", s.picard.tol),
                    ("max_iter", s.picard.max_iter)]),
        ("steady", [("steady_tol", cfg.steady_tol), ("t_max", cfg.t_max)]),
        ("stability", [("eps", cfg.eps), ("t_end", cfg.stability_t_end)]),
        ("perturbation", _initial_items(cfg.perturbation, cfg.perturbation_file)),
        ("convergence", [("space_levels", cfg.space_levels),
                         ("time_levels", cfg.time_levels)]
         + ([("t_compare", cfg.t_compare)] if cfg.t_compare is not None else [])),
        ("oracle", [("t_end", cfg.oracle_t_end), ("dt", cfg.oracle_imex_dt),
                    ("oracle_dt", cfg.oracle_dt), ("threshold", cfg.oracle_threshold)]),
    ]
    out = io.StringIO()
    for name, items in sections:
        out.write(f"[{name}]\n")
        for key, value in items:
            out.write(f"{key} = {_fmt(value)}\n")
        out.write("\n")
    return out.getvalue()
