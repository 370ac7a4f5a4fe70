"""Discrete solutions of the continuity equation and the action functional.

A :class:`TransportCurve` stores densities at time nodes and momenta on
interior faces at time midpoints.  The discrete continuity equation is

    (rho^{k+1} - rho^k) / dt_k + div_h w^{k+1/2} = 0

with the zero-flux divergence of :mod:`mobwass.fv`, so total mass telescopes
exactly.  The action of a curve evaluates the density on each face and
midpoint as the mean of the four surrounding node values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .fv import FaceSet
from .measures import Grid, GridMeasure, ReferenceMeasure, generalized_moment, sample_linear
from .mobility import ActionDensity, MobilitySpec
from .oracle import quadrature

__all__ = [
    "TransportCurve",
    "faces_of",
    "ce_residual",
    "action_integral",
    "step_actions",
    "mass_trace",
    "glue",
    "time_rescale",
    "static_curve",
    "dilation_curve",
    "dilation_exponent",
    "connectivity_curve",
    "c_pd_constant",
    "wasserstein_1d",
]


@lru_cache(maxsize=64)
def faces_of(reference: ReferenceMeasure) -> FaceSet:
    return FaceSet(reference)


@dataclass(frozen=True, eq=False)
class TransportCurve:
    """Time-staggered density/momentum pair.

    Attributes
    ----------
    reference : ReferenceMeasure
    density : ndarray, shape ``(N_t + 1, *grid.shape)``
    momentum : tuple of ndarrays
        One per axis; axis ``i`` has shape ``(N_t, *grid.shape)`` with
        ``grid.shape[i]`` reduced by one (interior faces only).
    times : ndarray, shape ``(N_t + 1,)``, strictly increasing, ``times[0] == 0``
    """

    reference: ReferenceMeasure
    density: np.ndarray
    momentum: tuple[np.ndarray, ...]
    times: np.ndarray

    def __post_init__(self) -> None:
        grid = self.reference.grid
        rho = np.asarray(self.density, dtype=float)
        times = np.asarray(self.times, dtype=float)
        nt = times.size - 1
        if nt < 1 or rho.shape != (nt + 1, *grid.shape):
            raise ValueError(f"density shape {rho.shape} inconsistent with {nt} steps on {grid.shape}")
        if np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        mom = tuple(np.asarray(m, dtype=float) for m in self.momentum)
        if len(mom) != grid.d:
            raise ValueError("need one momentum array per axis")
        for ax, m in enumerate(mom):
            shape = list(grid.shape)
            shape[ax] -= 1
            if m.shape != (nt, *shape):
                raise ValueError(f"momentum on axis {ax} has shape {m.shape}, expected {(nt, *shape)}")
        if faces_of(self.reference).inactive_flux(list(mom)) > 0:
            raise ValueError("momentum on faces next to zero-weight cells must vanish")
        object.__setattr__(self, "density", rho)
        object.__setattr__(self, "momentum", mom)
        object.__setattr__(self, "times", times)

    @classmethod
    def from_faces(cls, reference: ReferenceMeasure, density, wf, times) -> TransportCurve:
        """Build from face-vector momenta of shape ``(N_t, n_faces)``."""
        faces = faces_of(reference)
        return cls(reference, density, tuple(faces.to_axes(np.asarray(wf, dtype=float))), times)

    @property
    def grid(self) -> Grid:
        return self.reference.grid

    @property
    def steps(self) -> int:
        return self.times.size - 1

    @property
    def horizon(self) -> float:
        return float(self.times[-1] - self.times[0])

    @property
    def dt(self) -> np.ndarray:
        return np.diff(self.times)

    def face_momentum(self) -> np.ndarray:
        return faces_of(self.reference).from_axes(list(self.momentum))

    def measure_at(self, k: int) -> GridMeasure:
        return GridMeasure(self.reference, self.density[k])

    def initial(self) -> GridMeasure:
        return self.measure_at(0)

    def final(self) -> GridMeasure:
        return self.measure_at(-1)

    def reversed(self) -> TransportCurve:
        T = self.times[-1]
        return TransportCurve(self.reference, self.density[::-1],
                              tuple(-m[::-1] for m in self.momentum), (T - self.times)[::-1])


def ce_residual(c: TransportCurve) -> float:
    """Largest cellwise defect of the discrete continuity equation, relative to max |rho|."""
    faces = faces_of(c.reference)
    n = c.grid.size
    rho = c.density.reshape(c.steps + 1, n)
    wf = c.face_momentum()
    defect = (rho[1:] - rho[:-1]) / c.dt[:, None] + (faces.divergence @ wf.T).T
    defect = defect[:, faces.cell_mask]
    scale = float(np.max(np.abs(rho))) or 1.0
    return float(np.max(np.abs(defect))) / scale if defect.size else 0.0


def face_densities(c: TransportCurve) -> np.ndarray:
    """Density at each face and time midpoint, shape ``(N_t, n_faces)``."""
    faces = faces_of(c.reference)
    rho = c.density.reshape(c.steps + 1, -1)
    avg = (faces.averaging @ rho.T).T
    return 0.5 * (avg[1:] + avg[:-1])


def step_actions(c: TransportCurve, phi: ActionDensity) -> np.ndarray:
    """Action contributed by each time step (``+inf`` where the density leaves the domain)."""
    faces = faces_of(c.reference)
    vals = phi.from_norm(face_densities(c), c.face_momentum())
    return c.dt * (vals @ faces.weight) if faces.n else np.zeros(c.steps)


def action_integral(c: TransportCurve, phi: ActionDensity) -> float:
    """``sum_k dt_k sum_f phi(rho_f, w_f) gface_f``."""
    total = float(np.sum(step_actions(c, phi)))
    return total if not math.isnan(total) else math.inf


def mass_trace(c: TransportCurve) -> np.ndarray:
    return (c.density.reshape(c.steps + 1, -1) @ c.reference.weights.ravel())


def glue(c1: TransportCurve, c2: TransportCurve) -> TransportCurve:
    """Run ``c1`` then ``c2``; the final density of ``c1`` must equal the initial one of ``c2``."""
    if not c1.reference.same_as(c2.reference):
        raise ValueError("curves live on different grids or references")
    if not np.array_equal(c1.density[-1], c2.density[0]):
        raise ValueError("final density of the first curve differs from the initial one of the second")
    times = np.concatenate([c1.times, c1.times[-1] + (c2.times[1:] - c2.times[0])])
    return TransportCurve(
        c1.reference,
        np.concatenate([c1.density, c2.density[1:]]),
        tuple(np.concatenate([m1, m2]) for m1, m2 in zip(c1.momentum, c2.momentum)),
        times,
    )


def time_rescale(c: TransportCurve, new_T: float) -> TransportCurve:
    """Linear reparametrization onto ``[0, new_T]``; momenta pick up the factor ``T / new_T``."""
    if new_T <= 0:
        raise ValueError("new horizon must be positive")
    factor = c.horizon / new_T
    times = (c.times - c.times[0]) / factor
    return TransportCurve(c.reference, c.density, tuple(m * factor for m in c.momentum), times)


def static_curve(mu: GridMeasure, T: float = 1.0, steps: int = 1) -> TransportCurve:
    grid = mu.grid
    rho = np.broadcast_to(mu.density, (steps + 1, *grid.shape)).copy()
    mom = []
    for ax in range(grid.d):
        shape = list(grid.shape)
        shape[ax] -= 1
        mom.append(np.zeros((steps, *shape)))
    return TransportCurve(mu.reference, rho, tuple(mom), np.linspace(0.0, T, steps + 1))


# -- explicit constructions -------------------------------------------------


def _face_points(grid: Grid, ax: int) -> list[np.ndarray]:
    """Coordinates of the interior faces normal to ``ax``."""
    axes = [grid.centers(i) for i in range(grid.d)]
    axes[ax] = grid.edges(ax)[1:-1]
    return list(np.meshgrid(*axes, indexing="ij"))


def _support_box(mu: GridMeasure) -> tuple[np.ndarray, np.ndarray] | None:
    nz = np.nonzero(mu.density)
    if nz[0].size == 0:
        return None
    grid = mu.grid
    lo = np.array([grid.edges(i)[nz[i].min()] for i in range(grid.d)])
    hi = np.array([grid.edges(i)[nz[i].max() + 1] for i in range(grid.d)])
    return lo, hi


def _sampled_curve(mu: GridMeasure, times: np.ndarray, scale_fn, velocity_fn) -> TransportCurve:
    """Curve ``rho_t(y) = s(t)^-d rho(y / s(t))`` with momentum ``v(t) y rho_t(y)``."""
    grid = mu.grid
    d = grid.d
    mesh = grid.mesh()
    dens = []
    for t in times:
        s = scale_fn(t)
        dens.append(sample_linear(mu, [x / s for x in mesh]) / s ** d)
    mids = 0.5 * (times[1:] + times[:-1])
    mom = []
    for ax in range(d):
        pts = _face_points(grid, ax)
        frames = []
        for t in mids:
            s = scale_fn(t)
            rho_t = sample_linear(mu, [x / s for x in pts]) / s ** d
            frames.append(velocity_fn(t) * pts[ax] * rho_t)
        mom.append(np.array(frames))
    return TransportCurve(mu.reference, np.array(dens), tuple(mom), times)


def dilation_exponent(p: float, d: int) -> float:
    """Exponent of ``e^{t((1-d)p+d)}`` governing the action of the dilation curve."""
    return (1 - d) * p + d


def dilation_curve(rho0: GridMeasure, p: float, horizon: float, steps: int
                   ) -> tuple[TransportCurve, float, bool]:
    """Sample ``rho_t(x) = e^{-dt} rho0(e^{-t} x)``, ``w_t = x rho_t(x)`` on ``[0, horizon]``.

    Returns the curve, the exponent ``(1-d)p + d`` and whether the action over
    ``[0, inf)`` is finite (negative exponent, i.e. ``d > q``).
    """
    grid = rho0.grid
    box = _support_box(rho0)
    if box is not None:
        growth = math.exp(horizon)
        if not grid.contains_box(box[0] * growth, box[1] * growth):
            raise ValueError("dilated support leaves the grid")
    times = np.linspace(0.0, horizon, steps + 1)
    curve = _sampled_curve(rho0, times, lambda t: math.exp(t), lambda t: 1.0)
    expo = dilation_exponent(p, grid.d)
    return curve, expo, expo < 0


def c_pd_constant(p: float, d: int) -> float:
    """``int_0^1 p^p d^(1-p) (1 + t^p)^(d(p-1)) dt``."""
    if not (p > 1 and d >= 1):
        raise ValueError("need p > 1 and d >= 1")
    return quadrature(lambda t: p ** p * d ** (1 - p) * (1 + t ** p) ** (d * (p - 1)),
                      0.0, 1.0, tol=1e-12)


def connectivity_curve(mu: GridMeasure, p: float, steps: int) -> tuple[TransportCurve, float]:
    """Curve from ``mu`` to ``(2 Id)_# mu`` via ``T_t(x) = (1 + t^p) x``, ``t`` in ``[0, 1]``.

    Needs ``0 <= rho <= 1``.  Returns the sampled curve and the bound
    ``C_{p,d} * m_p(mu)`` on its action for ``h(rho) = rho (1 - rho)``.
    """
    if np.any(mu.density > 1 + 1e-12) or np.any(mu.density < 0):
        raise ValueError("connectivity construction needs densities in [0, 1]")
    grid = mu.grid
    box = _support_box(mu)
    if box is not None and not grid.contains_box(2 * box[0], 2 * box[1]):
        raise ValueError("doubled support leaves the grid")
    times = np.linspace(0.0, 1.0, steps + 1)
    curve = _sampled_curve(mu, times, lambda t: 1 + t ** p,
                           lambda t: p * t ** (p - 1) / (1 + t ** p))
    bound = c_pd_constant(p, grid.d) * generalized_moment(mu, p)
    return curve, bound


# -- one-dimensional closed form ----------------------------------------------


def _quantile_pieces(mu: GridMeasure):
    """Cell edges, cumulative masses and per-cell mass densities (mass per unit length)."""
    grid = mu.grid
    edges = grid.edges(0)
    masses = mu.masses
    cum = np.concatenate([[0.0], np.cumsum(masses)])
    return edges, cum, masses / grid.spacing[0]


def _quantile_segments(edges, cum, lin, lo, hi):
    """Quantile values at ``lo`` and ``hi``, both inside one cell's mass interval."""
    cell = np.clip(np.searchsorted(cum, 0.5 * (lo + hi), side="right") - 1, 0, lin.size - 1)
    dens = lin[cell]
    return edges[cell] + (lo - cum[cell]) / dens, edges[cell] + (hi - cum[cell]) / dens


def wasserstein_1d(mu0: GridMeasure, mu1: GridMeasure, p: float = 2.0) -> float:
    """``(int_0^m |F0^-1(s) - F1^-1(s)|^p ds)^(1/p)`` for piecewise-linear CDFs.

    ``m`` is the common mass (1 for probability measures).
    """
    if mu0.grid.d != 1 or mu1.grid.d != 1:
        raise ValueError("closed form needs one-dimensional measures")
    if np.any(mu0.density < 0) or np.any(mu1.density < 0):
        raise ValueError("closed form needs nonnegative densities")
    e0, c0, l0 = _quantile_pieces(mu0)
    e1, c1, l1 = _quantile_pieces(mu1)
    m0, m1 = c0[-1], c1[-1]
    if abs(m0 - m1) > 1e-10 * max(1.0, abs(m0)):
        raise ValueError(f"unequal masses {m0} and {m1}")
    c1 = c1 * (m0 / m1) if m1 > 0 else c1
    l1 = l1 * (m0 / m1) if m1 > 0 else l1
    s = np.unique(np.concatenate([c0, c1]))
    s = s[(s >= 0) & (s <= m0)]
    lo, hi = s[:-1], s[1:]
    keep = hi > lo
    lo, hi = lo[keep], hi[keep]
    a0, b0 = _quantile_segments(e0, c0, l0, lo, hi)
    a1, b1 = _quantile_segments(e1, c1, l1, lo, hi)
    total = float(np.sum(_int_abs_linear_pow(a0 - a1, b0 - b1, hi - lo, p)))
    return total ** (1 / p)


def _int_abs_linear_pow(fa, fb, length, p):
    """Exact ``int |f|^p`` for ``f`` linear from ``fa`` to ``fb`` over ``length``."""
    fa, fb = np.asarray(fa, float), np.asarray(fb, float)
    out = np.zeros_like(fa)
    same = fa * fb >= 0
    # same sign: int = L (|fb|^{p+1} - |fa|^{p+1}) / ((p+1)(|fb| - |fa|))
    A, B = np.abs(fa), np.abs(fb)
    eq = np.isclose(A, B, rtol=1e-12, atol=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        gen = length * (B ** (p + 1) - A ** (p + 1)) / ((p + 1) * (B - A))
    out = np.where(same & eq, length * A ** p, np.where(same, gen, 0.0))
    # sign change: split at the root
    cross = ~same
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = A / (A + B)
    out = np.where(cross, length * (frac * A ** p + (1 - frac) * B ** p) / (p + 1), out)
    return out
