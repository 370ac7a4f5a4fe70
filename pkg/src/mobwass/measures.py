"""Box grids, reference measures and grid-discretized (signed) measures.

All quadrature is cell-centered: a measure is a density per cell relative to
the reference weight of that cell, ``mu_i = rho_i * gamma_i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import ndimage

__all__ = [
    "Grid",
    "ReferenceMeasure",
    "GridMeasure",
    "total_mass",
    "generalized_moment",
    "push_forward_affine",
    "mollify",
]


@dataclass(frozen=True)
class Grid:
    """Axis-aligned box split into ``cells[i]`` equal cells along axis ``i``."""

    bounds: tuple[tuple[float, float], ...]
    cells: tuple[int, ...]

    def __post_init__(self) -> None:
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        cells = tuple(int(n) for n in self.cells)
        object.__setattr__(self, "bounds", bounds)
        object.__setattr__(self, "cells", cells)
        if not 1 <= len(cells) <= 3 or len(bounds) != len(cells):
            raise ValueError("grids are 1, 2 or 3 dimensional with one (lo, hi) per axis")
        if any(lo >= hi for lo, hi in bounds):
            raise ValueError("need lo < hi on every axis")
        if any(n < 1 for n in cells):
            raise ValueError("cell counts must be positive")

    @classmethod
    def uniform(cls, lo: float, hi: float, n: int, d: int = 1) -> Grid:
        return cls(((lo, hi),) * d, (n,) * d)

    @property
    def d(self) -> int:
        return len(self.cells)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.cells

    @property
    def size(self) -> int:
        return int(np.prod(self.cells))

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple((hi - lo) / n for (lo, hi), n in zip(self.bounds, self.cells))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def centers(self, axis: int) -> np.ndarray:
        lo, hi = self.bounds[axis]
        n = self.cells[axis]
        h = (hi - lo) / n
        return lo + h * (np.arange(n) + 0.5)

    def edges(self, axis: int) -> np.ndarray:
        lo, hi = self.bounds[axis]
        return np.linspace(lo, hi, self.cells[axis] + 1)

    def mesh(self) -> tuple[np.ndarray, ...]:
        """Cell-center coordinates, one array of shape ``self.shape`` per axis."""
        return tuple(np.meshgrid(*(self.centers(i) for i in range(self.d)), indexing="ij"))

    def radius(self) -> np.ndarray:
        return np.sqrt(sum(x ** 2 for x in self.mesh()))

    def contains_box(self, lo: Sequence[float], hi: Sequence[float], tol: float = 1e-12) -> bool:
        return all(blo - tol <= l and h <= bhi + tol
                   for (blo, bhi), l, h in zip(self.bounds, lo, hi))


@dataclass(frozen=True, eq=False)
class ReferenceMeasure:
    """Per-cell reference masses ``gamma_i`` on a grid."""

    grid: Grid
    weights: np.ndarray
    kind: str = "lebesgue"

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        if w.shape != self.grid.shape:
            raise ValueError(f"weights shape {w.shape} does not match grid {self.grid.shape}")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("reference weights must be finite and nonnegative")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def lebesgue(cls, grid: Grid) -> ReferenceMeasure:
        return cls(grid, np.full(grid.shape, grid.cell_volume), "lebesgue")

    @classmethod
    def masked(cls, grid: Grid, mask) -> ReferenceMeasure:
        mask = np.asarray(mask, dtype=bool)
        return cls(grid, np.where(mask, grid.cell_volume, 0.0), "masked-lebesgue")

    @classmethod
    def gibbs(cls, grid: Grid, potential: Callable | np.ndarray) -> ReferenceMeasure:
        """``exp(-V) dx`` with ``V`` given as a callable of the coordinates or cell values."""
        V = potential(*grid.mesh()) if callable(potential) else np.asarray(potential, float)
        return cls(grid, grid.cell_volume * np.exp(-np.asarray(V, dtype=float)), "gibbs")

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    @property
    def is_uniform(self) -> bool:
        return bool(np.all(self.weights == self.weights.flat[0]))

    def same_as(self, other: ReferenceMeasure) -> bool:
        return self.grid == other.grid and np.array_equal(self.weights, other.weights)


@dataclass(frozen=True, eq=False)
class GridMeasure:
    """``mu = rho * gamma`` with one density value per cell."""

    reference: ReferenceMeasure
    density: np.ndarray

    def __post_init__(self) -> None:
        rho = np.array(self.density, dtype=float)
        if rho.shape != self.reference.grid.shape:
            raise ValueError(f"density shape {rho.shape} does not match grid")
        if not np.all(np.isfinite(rho)):
            raise ValueError("densities must be finite")
        rho[self.reference.weights == 0] = 0.0
        rho.setflags(write=False)
        object.__setattr__(self, "density", rho)

    @classmethod
    def from_function(cls, reference: ReferenceMeasure, fn: Callable) -> GridMeasure:
        return cls(reference, fn(*reference.grid.mesh()))

    @classmethod
    def constant(cls, reference: ReferenceMeasure, value: float) -> GridMeasure:
        return cls(reference, np.full(reference.grid.shape, float(value)))

    @property
    def grid(self) -> Grid:
        return self.reference.grid

    @property
    def masses(self) -> np.ndarray:
        return self.density * self.reference.weights

    def with_density(self, density) -> GridMeasure:
        return GridMeasure(self.reference, density)

    def __add__(self, other: GridMeasure) -> GridMeasure:
        _check_same(self, other)
        return self.with_density(self.density + other.density)

    def __mul__(self, c: float) -> GridMeasure:
        return self.with_density(self.density * float(c))

    __rmul__ = __mul__


def _check_same(m1: GridMeasure, m2: GridMeasure) -> None:
    if not m1.reference.same_as(m2.reference):
        raise ValueError("measures live on different grids or references")


def total_mass(mu: GridMeasure) -> float:
    """Signed total mass ``sum rho_i gamma_i``."""
    return float(np.sum(mu.masses))


def generalized_moment(nu: GridMeasure | ReferenceMeasure, r: float) -> float:
    """Mass inside the closed unit ball plus ``int_{|x|>1} |x|^r d|nu|``.

    Signed measures enter through their total variation ``|rho| gamma``.
    """
    if isinstance(nu, ReferenceMeasure):
        mass, grid = nu.weights, nu.grid
    else:
        mass, grid = np.abs(nu.masses), nu.grid
    rad = grid.radius()
    outside = rad > 1
    factor = np.ones_like(rad)
    factor[outside] = rad[outside] ** r
    return float(np.sum(factor * mass))


def push_forward_affine(mu: GridMeasure, scale: float, shift=0.0,
                        target: Grid | None = None) -> GridMeasure:
    """Image of ``mu`` under ``x -> scale * x + shift`` (Lebesgue reference only).

    Target densities are ``rho((y - shift) / scale) / |scale|^d`` evaluated at
    target cell centers, with ``rho`` piecewise constant on the source cells
    and zero outside them.  Without ``target`` the affine image of the source
    grid is used, where every target center is the image of a source center
    and mass is preserved exactly.
    """
    if scale == 0:
        raise ValueError("scale must be nonzero")
    if mu.reference.kind != "lebesgue":
        raise ValueError("push-forward is implemented for Lebesgue references")
    grid = mu.grid
    d = grid.d
    shift = np.broadcast_to(np.asarray(shift, dtype=float), (d,))
    jac = abs(scale) ** d
    if target is None:
        bounds = []
        for (lo, hi), s in zip(grid.bounds, shift):
            ends = sorted((scale * lo + s, scale * hi + s))
            bounds.append(tuple(ends))
        target = Grid(tuple(bounds), grid.cells)
        rho = mu.density / jac
        if scale < 0:
            rho = rho[(slice(None, None, -1),) * d]
        return GridMeasure(ReferenceMeasure.lebesgue(target), rho)

    support = np.nonzero(mu.density)
    if support[0].size:
        lo = [scale * grid.edges(i)[support[i].min()] + shift[i] for i in range(d)]
        hi = [scale * grid.edges(i)[support[i].max() + 1] + shift[i] for i in range(d)]
        lo, hi = np.minimum(lo, hi), np.maximum(lo, hi)
        if not target.contains_box(lo, hi):
            raise ValueError("image of the support leaves the target grid")
    pre = [(x - s) / scale for x, s in zip(target.mesh(), shift)]
    rho = sample_piecewise_constant(mu, pre) / jac
    return GridMeasure(ReferenceMeasure.lebesgue(target), rho)


def sample_piecewise_constant(mu: GridMeasure, points: Sequence[np.ndarray]) -> np.ndarray:
    """Density of ``mu`` at arbitrary points (cell lookup, zero outside the box)."""
    grid = mu.grid
    inside = np.ones(np.shape(points[0]), dtype=bool)
    idx = []
    for i, x in enumerate(points):
        lo, hi = grid.bounds[i]
        h = grid.spacing[i]
        k = np.floor((x - lo) / h).astype(int)
        inside &= (x >= lo) & (x < hi)
        idx.append(np.clip(k, 0, grid.cells[i] - 1))
    return np.where(inside, mu.density[tuple(idx)], 0.0)


def sample_linear(mu: GridMeasure, points: Sequence[np.ndarray]) -> np.ndarray:
    """Multilinear interpolation of cell-center densities, zero outside the box."""
    grid = mu.grid
    vals = mu.density
    # pad with zeros one cell beyond the box so the density tapers to 0 there
    padded = np.pad(vals, 1)
    coords = []
    inside = np.ones(np.shape(points[0]), dtype=bool)
    for i, x in enumerate(points):
        lo, hi = grid.bounds[i]
        h = grid.spacing[i]
        coords.append((x - lo) / h - 0.5 + 1.0)
        inside &= (x >= lo) & (x <= hi)
    out = ndimage.map_coordinates(padded, coords, order=1, mode="constant", cval=0.0)
    return np.where(inside, out, 0.0)


def bump_kernel(grid: Grid, eps: float) -> np.ndarray:
    """Normalized ``exp(-1/(1-|x/eps|^2))`` sampled at cell offsets."""
    half = [int(np.floor(eps / h)) for h in grid.spacing]
    axes = [np.arange(-k, k + 1) * h for k, h in zip(half, grid.spacing)]
    mesh = np.meshgrid(*axes, indexing="ij")
    r2 = sum(m ** 2 for m in mesh) / eps ** 2
    with np.errstate(divide="ignore"):
        k = np.where(r2 < 1, np.exp(-1.0 / (1.0 - np.minimum(r2, 1 - 1e-300))), 0.0)
    return k / k.sum()


def mollify(mu: GridMeasure, eps: float) -> GridMeasure:
    """Convolve the density with a normalized bump of radius ``eps``.

    The box boundary is handled by mirror reflection, which keeps constants
    fixed, conserves mass and keeps values within the original range.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    grid = mu.grid
    kern = bump_kernel(grid, eps)
    if any(k > n for k, n in zip(kern.shape, grid.cells)):
        raise ValueError("kernel support exceeds the box")
    if not mu.reference.is_uniform:
        # convolve masses relative to the uniform cell volume
        m = ndimage.correlate(mu.masses, kern, mode="reflect")
        w = mu.reference.weights
        rho = np.divide(m, w, out=np.zeros_like(m), where=w > 0)
        return mu.with_density(rho)
    return mu.with_density(ndimage.correlate(mu.density, kern, mode="reflect"))
