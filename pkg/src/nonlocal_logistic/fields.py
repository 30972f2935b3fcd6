"""Coefficient fields, initial data and the model parameter bundle."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .grid import Grid, inner

__all__ = [
    "CoefficientSpec",
    "InitialSpec",
    "ModelParams",
    "build_coefficient",
    "build_initial",
    "normalize",
    "make_params",
    "discrete_c1_norm",
    "load_table",
]

COEFFICIENT_KINDS = ("constant", "gaussian-bump", "linear-ramp", "tabulated")
INITIAL_KINDS = ("sine-mode", "gaussian-bump", "tent", "random-smoothed", "tabulated")


@dataclass(frozen=True)
class CoefficientSpec:
    """Profile of ``a(x)``.

    ``constant``: ``amplitude``. ``gaussian-bump``:
    ``amplitude * exp(-|x - center|^2 / (2 width^2))``. ``linear-ramp``:
    ``start + (end - start) * x / extent`` along the first axis.
    ``tabulated``: ``values`` in node order.
    """

    kind: str = "constant"
    amplitude: float = 1.0
    center: tuple = (0.5,)
    width: float = 0.1
    start: float = 1.0
    end: float = 1.0
    values: Optional[Sequence[float]] = field(default=None, compare=False)
    strict: bool = False
    c0: float = 0.0

    def __post_init__(self):
        if self.kind not in COEFFICIENT_KINDS:
            raise ValueError(f"unknown coefficient kind {self.kind!r}")


@dataclass(frozen=True)
class InitialSpec:
    """Profile of the initial datum ``g`` before normalization.

    ``sine-mode`` is ``sin(mode pi x / L)`` (product over axes) times the
    ramp ``1 + tilt x / L`` along the first axis. ``smoothing`` is the
    number of explicit heat steps applied to the ``random-smoothed`` kind.
    """

    kind: str = "sine-mode"
    mode: int = 1
    tilt: float = 0.0
    center: tuple = (0.5,)
    width: float = 0.1
    seed: int = 0
    smoothing: int = 20
    values: Optional[Sequence[float]] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in INITIAL_KINDS:
            raise ValueError(f"unknown initial kind {self.kind!r}")


@dataclass(frozen=True, eq=False)
class ModelParams:
    p: float
    a: np.ndarray
    mode: str = "nonlocal"
    r: float = 1.0
    K: float = 1.0
    a_min: float = 0.0
    M_disc: float = 0.0


def load_table(path) -> np.ndarray:
    """Read one node value per line (blank lines and ``#`` comments skipped)."""
    return np.loadtxt(path, dtype=float, comments="#", ndmin=1)


def _center(center, grid):
    c = np.atleast_1d(np.asarray(center, dtype=float))
    if c.size == 1:
        c = np.repeat(c, grid.dim)
    if c.size != grid.dim:
        raise ValueError(f"center {tuple(c)} does not match dim={grid.dim}")
    return c


def _gaussian(grid, center, width):
    d2 = np.sum((grid.nodes - _center(center, grid)) ** 2, axis=1)
    return np.exp(-d2 / (2.0 * width**2))


def _tabulated(values, grid):
    if values is None:
        raise ValueError("tabulated profile needs values")
    values = np.asarray(values, dtype=float).ravel()
    if values.size != grid.size:
        raise ValueError(
            f"tabulated profile has {values.size} values, grid has {grid.size} nodes"
        )
    return values.copy()


def build_coefficient(spec: CoefficientSpec, grid: Grid) -> np.ndarray:
    if spec.kind == "constant":
        a = np.full(grid.size, float(spec.amplitude))
    elif spec.kind == "gaussian-bump":
        a = spec.amplitude * _gaussian(grid, spec.center, spec.width)
    elif spec.kind == "linear-ramp":
        s = grid.nodes[:, 0] / grid.spec.extent[0]
        a = spec.start + (spec.end - spec.start) * s
    else:
        a = _tabulated(spec.values, grid)

    if not np.all(np.isfinite(a)):
        raise ValueError("coefficient has non-finite values")
    if spec.strict:
        bound = max(spec.c0, 0.0)
        bad = np.flatnonzero((a <= 0) | (a < bound))
        if bad.size:
            i = int(bad[0])
            raise ValueError(
                f"strict coefficient violates a >= c0 > 0 at node {i} "
                f"(x={tuple(grid.nodes[i])}, a={a[i]:g}, c0={spec.c0:g})"
            )
    elif a.min() < 0:
        i = int(np.argmin(a))
        raise ValueError(f"coefficient is negative at node {i} (a={a[i]:g})")
    return a


def normalize(grid: Grid, f) -> np.ndarray:
    """Scale ``f`` to unit mass ``int f^2 = 1``."""
    f = grid.check(f)
    m = inner(grid, f, f)
    if not m > 0:
        raise ValueError("cannot normalize a field with zero mass")
    return f / np.sqrt(m)


def _smooth(grid, u, steps):
    # explicit heat steps; 0.2 h^2 is stable for the 5-point stencil
    s = 0.2 * min(grid.h) ** 2
    for _ in range(steps):
        u = u + s * (grid.lap @ u)
    return u


def build_initial(spec: InitialSpec, grid: Grid) -> np.ndarray:
    if spec.kind == "sine-mode":
        g = np.prod(
            [
                np.sin(spec.mode * np.pi * grid.nodes[:, i] / L)
                for i, L in enumerate(grid.spec.extent)
            ],
            axis=0,
        )
        g = g * (1.0 + spec.tilt * grid.nodes[:, 0] / grid.spec.extent[0])
    elif spec.kind == "gaussian-bump":
        g = _gaussian(grid, spec.center, spec.width)
    elif spec.kind == "tent":
        g = np.prod(
            [
                1.0 - np.abs(2.0 * grid.nodes[:, i] / L - 1.0)
                for i, L in enumerate(grid.spec.extent)
            ],
            axis=0,
        )
    elif spec.kind == "random-smoothed":
        rng = np.random.default_rng(spec.seed)
        g = _smooth(grid, rng.random(grid.size), spec.smoothing)
        g = np.maximum(g, 0.0)
    else:
        g = _tabulated(spec.values, grid)

    if not np.all(np.isfinite(g)):
        raise ValueError("initial datum has non-finite values")
    if g.min() < 0:
        raise ValueError(
            f"initial datum must be nonnegative (min {g.min():g}); "
            f"kind={spec.kind!r}, mode={spec.mode}"
        )
    if not np.any(g > 0):
        raise ValueError("initial datum vanishes on the grid")
    return normalize(grid, g)


def discrete_c1_norm(grid: Grid, a) -> float:
    """``max|a|`` plus the largest one-sided difference quotient between neighbours."""
    a = grid.check(a)
    box = grid.to_box(a)
    keep = (grid.index >= 0).reshape(grid.shape)
    slope = 0.0
    for axis, h in enumerate(grid.h):
        both = np.logical_and(
            np.take(keep, np.arange(1, box.shape[axis]), axis=axis),
            np.take(keep, np.arange(0, box.shape[axis] - 1), axis=axis),
        )
        q = np.abs(np.diff(box, axis=axis))[both] / h
        if q.size:
            slope = max(slope, float(q.max()))
    return float(np.max(np.abs(a))) + slope


def make_params(
    grid: Grid,
    p: float,
    a,
    mode: str = "nonlocal",
    r: float = 1.0,
    K: float = 1.0,
) -> ModelParams:
    a = np.array(grid.check(a), dtype=float)
    if mode not in ("nonlocal", "local"):
        raise ValueError(f"mode must be 'nonlocal' or 'local', got {mode!r}")
    if mode == "nonlocal" and not p > 1:
        raise ValueError(f"exponent must satisfy p>1, got p={p}")
    if mode == "local" and not K > 0:
        raise ValueError(f"carrying capacity must satisfy K>0, got K={K}")
    if a.min() < 0:
        raise ValueError("coefficient must be nonnegative")
    a.setflags(write=False)
    return ModelParams(
        p=float(p),
        a=a,
        mode=mode,
        r=float(r),
        K=float(K),
        a_min=float(a.min()),
        M_disc=discrete_c1_norm(grid, a),
    )
