"""Uniform finite-difference grids with homogeneous Dirichlet boundary.

Only interior nodes are stored; boundary and masked-out nodes carry an
implicit value of zero. Grid functions are plain 1D numpy arrays indexed
by interior node number (row-major over the bounding box in 2D).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.ndimage
import scipy.sparse as sp

__all__ = [
    "DomainSpec",
    "Grid",
    "build_grid",
    "laplacian",
    "integrate",
    "inner",
    "dirichlet_energy",
    "discrete_eigenvalue_1d",
    "first_eigenvector",
]


@dataclass(frozen=True)
class DomainSpec:
    """Rectangle ``[0, extent[0]] x ...`` with ``n`` interior nodes per axis.

    ``mask`` (2D only) is a boolean array of shape ``n``; ``True`` keeps the
    cell around that node inside the domain.
    """

    dim: int
    extent: tuple
    n: tuple
    mask: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        extent = _as_tuple(self.extent, self.dim, float)
        n = _as_tuple(self.n, self.dim, int)
        object.__setattr__(self, "extent", extent)
        object.__setattr__(self, "n", n)
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if any(e <= 0 for e in extent):
            raise ValueError(f"extent must be positive, got {extent}")
        if any(k < 3 for k in n):
            raise ValueError(f"need at least 3 interior nodes per axis, got n={n}")
        if self.mask is not None:
            if self.dim != 2:
                raise ValueError("mask is only supported for dim=2")
            mask = np.asarray(self.mask, dtype=bool)
            if mask.shape != n:
                raise ValueError(f"mask shape {mask.shape} does not match n={n}")
            object.__setattr__(self, "mask", mask)


def _as_tuple(value, dim, kind):
    if np.isscalar(value):
        return (kind(value),) * dim
    value = tuple(kind(v) for v in value)
    if len(value) != dim:
        raise ValueError(f"expected {dim} entries, got {len(value)}")
    return value


@dataclass(frozen=True, eq=False)
class Grid:
    spec: DomainSpec
    h: tuple
    nodes: np.ndarray  # (size, dim) coordinates of interior nodes
    weights: np.ndarray  # (size,) quadrature weights
    index: np.ndarray  # bounding-box node number -> interior index, -1 if excluded
    lap: sp.csr_matrix  # Dirichlet Laplacian on interior nodes

    @property
    def dim(self) -> int:
        return self.spec.dim

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    @property
    def shape(self) -> tuple:
        return self.spec.n

    def check(self, u) -> np.ndarray:
        """Return ``u`` as a float array, rejecting fields from other grids."""
        u = np.asarray(u, dtype=float)
        if u.shape != (self.size,):
            raise ValueError(
                f"field has shape {u.shape}, grid has {self.size} interior nodes"
            )
        return u

    def to_box(self, u) -> np.ndarray:
        """Scatter a field onto the full bounding-box array (zeros outside)."""
        u = self.check(u)
        box = np.zeros(int(np.prod(self.shape)))
        keep = self.index >= 0
        box[keep] = u[self.index[keep]]
        return box.reshape(self.shape)

    def from_box(self, box) -> np.ndarray:
        box = np.asarray(box, dtype=float).reshape(-1)
        return box[self.index >= 0].copy()


def _lap_1d(n, h):
    main = np.full(n, -2.0 / h**2)
    off = np.full(n - 1, 1.0 / h**2)
    return sp.diags([off, main, off], [-1, 0, 1], format="csr")


def build_grid(spec: DomainSpec) -> Grid:
    h = tuple(L / (k + 1) for L, k in zip(spec.extent, spec.n))
    axes = [h_i * np.arange(1, k + 1) for h_i, k in zip(h, spec.n)]

    if spec.dim == 1:
        coords = axes[0][:, None]
        lap = _lap_1d(spec.n[0], h[0])
        keep = np.ones(spec.n[0], dtype=bool)
    else:
        X, Y = np.meshgrid(axes[0], axes[1], indexing="ij")
        coords = np.column_stack([X.ravel(), Y.ravel()])
        ix = sp.identity(spec.n[0], format="csr")
        iy = sp.identity(spec.n[1], format="csr")
        lap = (
            sp.kron(_lap_1d(spec.n[0], h[0]), iy)
            + sp.kron(ix, _lap_1d(spec.n[1], h[1]))
        ).tocsr()
        if spec.mask is None:
            keep = np.ones(coords.shape[0], dtype=bool)
        else:
            _, ncomp = scipy.ndimage.label(spec.mask)  # 4-connectivity
            if ncomp != 1:
                raise ValueError(
                    f"mask must be one edge-connected region, found {ncomp} components"
                )
            keep = spec.mask.ravel()
            lap = lap[keep][:, keep].tocsr()

    index = np.full(keep.size, -1, dtype=int)
    index[keep] = np.arange(int(keep.sum()))
    coords = coords[keep]
    weights = np.full(coords.shape[0], float(np.prod(h)))
    for a in (coords, weights, index):
        a.setflags(write=False)
    return Grid(spec=spec, h=h, nodes=coords, weights=weights, index=index, lap=lap)


def laplacian(grid: Grid, u) -> np.ndarray:
    return grid.lap @ grid.check(u)


def integrate(grid: Grid, f) -> float:
    return float(np.dot(grid.weights, grid.check(f)))


def inner(grid: Grid, u, v) -> float:
    """Weighted L2 inner product."""
    return float(np.dot(grid.weights, grid.check(u) * grid.check(v)))


def dirichlet_energy(grid: Grid, u) -> float:
    """Discrete ``int |grad u|^2`` as ``-<u, lap u>``.

    Summation by parts makes this equal to the sum of squared forward
    differences, so it is nonnegative; the clamp only removes rounding.
    """
    u = grid.check(u)
    return max(-float(np.dot(grid.weights, u * (grid.lap @ u))), 0.0)


def discrete_eigenvalue_1d(n: int, extent: float = 1.0, k: int = 1) -> float:
    """k-th eigenvalue of the 1D discrete Dirichlet operator ``-lap``."""
    h = extent / (n + 1)
    return 4.0 / h**2 * np.sin(k * np.pi * h / (2.0 * extent)) ** 2


def first_eigenvector(grid: Grid) -> tuple[float, np.ndarray]:
    """Smallest eigenpair of ``-lap`` with the eigenvector at unit mass and positive.

    Uses the closed form on unmasked rectangles, sparse shift-invert otherwise.
    """
    if grid.dim == 1 or grid.spec.mask is None:
        mu = sum(
            discrete_eigenvalue_1d(k, L) for k, L in zip(grid.spec.n, grid.spec.extent)
        )
        v = np.prod(
            [np.sin(np.pi * grid.nodes[:, i] / L) for i, L in enumerate(grid.spec.extent)],
            axis=0,
        )
    else:
        from scipy.sparse.linalg import eigsh

        vals, vecs = eigsh(-grid.lap, k=1, sigma=0.0, which="LM")
        mu, v = float(vals[0]), vecs[:, 0]
        if v.sum() < 0:
            v = -v
    v = v / np.sqrt(inner(grid, v, v))
    return float(mu), v
