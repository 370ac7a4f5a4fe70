"""Staggered finite-volume operators on box grids.

Faces are interior faces between two cells with positive reference weight;
boundary faces (and faces touching a zero-weight cell) carry no flux, which
is the discrete zero-flux condition.  A momentum ``w_f`` on face ``f``
produces the mass flux ``gface_f * w_f / dx_f`` from its left to its right
cell, where ``gface`` is the mean of the two adjacent cell weights.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .measures import ReferenceMeasure


@dataclass(frozen=True, eq=False)
class FaceSet:
    reference: ReferenceMeasure

    @cached_property
    def _faces(self):
        grid = self.reference.grid
        w = self.reference.weights
        idx = np.arange(grid.size).reshape(grid.shape)
        left, right, axis, dx = [], [], [], []
        for ax in range(grid.d):
            sl_l = [slice(None)] * grid.d
            sl_r = [slice(None)] * grid.d
            sl_l[ax] = slice(0, -1)
            sl_r[ax] = slice(1, None)
            li = idx[tuple(sl_l)].ravel()
            ri = idx[tuple(sl_r)].ravel()
            active = (w.ravel()[li] > 0) & (w.ravel()[ri] > 0)
            left.append(li[active])
            right.append(ri[active])
            axis.append(np.full(active.sum(), ax))
            dx.append(np.full(active.sum(), grid.spacing[ax]))
        return (np.concatenate(left), np.concatenate(right),
                np.concatenate(axis), np.concatenate(dx))

    @property
    def left(self) -> np.ndarray:
        return self._faces[0]

    @property
    def right(self) -> np.ndarray:
        return self._faces[1]

    @property
    def axis(self) -> np.ndarray:
        return self._faces[2]

    @property
    def dx(self) -> np.ndarray:
        return self._faces[3]

    @property
    def n(self) -> int:
        return self.left.size

    @cached_property
    def weight(self) -> np.ndarray:
        """Face reference weight ``gface`` (mean of the neighbouring cell weights)."""
        w = self.reference.weights.ravel()
        return 0.5 * (w[self.left] + w[self.right])

    @cached_property
    def cell_mask(self) -> np.ndarray:
        return self.reference.weights.ravel() > 0

    @cached_property
    def divergence(self) -> sp.csr_matrix:
        """Matrix ``D`` with ``(D w)_i = (1/gamma_i) sum_f +-gface_f w_f / dx_f``.

        Rows of zero-weight cells are zero.
        """
        ncell = self.reference.grid.size
        g = self.reference.weights.ravel()
        ginv = np.divide(1.0, g, out=np.zeros_like(g), where=g > 0)
        flux = self.weight / self.dx
        f = np.arange(self.n)
        rows = np.concatenate([self.left, self.right])
        cols = np.concatenate([f, f])
        vals = np.concatenate([flux * ginv[self.left], -flux * ginv[self.right]])
        return sp.csr_matrix((vals, (rows, cols)), shape=(ncell, self.n))

    @cached_property
    def averaging(self) -> sp.csr_matrix:
        """Face average of cell values, shape ``(n_faces, n_cells)``."""
        ncell = self.reference.grid.size
        f = np.arange(self.n)
        rows = np.concatenate([f, f])
        cols = np.concatenate([self.left, self.right])
        return sp.csr_matrix((np.full(2 * self.n, 0.5), (rows, cols)), shape=(self.n, ncell))

    @cached_property
    def gradient(self) -> sp.csr_matrix:
        """Face difference quotient ``(u_right - u_left) / dx``."""
        ncell = self.reference.grid.size
        f = np.arange(self.n)
        rows = np.concatenate([f, f])
        cols = np.concatenate([self.left, self.right])
        vals = np.concatenate([-1.0 / self.dx, 1.0 / self.dx])
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.n, ncell))

    def laplacian(self) -> sp.csr_matrix:
        """Zero-flux Laplacian ``D G`` (negative semidefinite in the gamma inner product)."""
        return (self.divergence @ self.gradient).tocsr()

    # helpers to move between face vectors and per-axis arrays

    def to_axes(self, wf: np.ndarray) -> list[np.ndarray]:
        """Split face values (last axis) into full per-axis interior-face arrays."""
        grid = self.reference.grid
        lead = wf.shape[:-1]
        out = []
        for ax in range(grid.d):
            shape = list(grid.shape)
            shape[ax] -= 1
            arr = np.zeros(lead + tuple(shape))
            sel = self.axis == ax
            flat_idx = _interior_face_index(grid.shape, ax, self.left[sel])
            arr.reshape(lead + (-1,))[..., flat_idx] = wf[..., sel]
            out.append(arr)
        return out

    def from_axes(self, arrays: list[np.ndarray]) -> np.ndarray:
        grid = self.reference.grid
        lead = arrays[0].shape[:-grid.d]
        wf = np.zeros(lead + (self.n,))
        for ax in range(grid.d):
            sel = self.axis == ax
            flat_idx = _interior_face_index(grid.shape, ax, self.left[sel])
            wf[..., sel] = arrays[ax].reshape(lead + (-1,))[..., flat_idx]
        return wf

    def inactive_flux(self, arrays: list[np.ndarray]) -> float:
        """Largest momentum stored on faces that cannot carry flux."""
        grid = self.reference.grid
        worst = 0.0
        for ax in range(grid.d):
            sel = self.axis == ax
            flat_idx = _interior_face_index(grid.shape, ax, self.left[sel])
            a = np.array(arrays[ax], dtype=float).reshape(arrays[ax].shape[:-grid.d] + (-1,))
            a[..., flat_idx] = 0.0
            if a.size:
                worst = max(worst, float(np.max(np.abs(a))))
        return worst


def _interior_face_index(shape, ax, left_cells):
    """Flat index in the per-axis face array of the face right of ``left_cells``."""
    multi = np.unravel_index(left_cells, shape)
    fshape = list(shape)
    fshape[ax] -= 1
    return np.ravel_multi_index(multi, fshape)
