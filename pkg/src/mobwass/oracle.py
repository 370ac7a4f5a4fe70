"""Independent oracles: adaptive quadrature and an exact two-cell solver.

Nothing here imports the splitting solver; the two-cell value is obtained by
multiresolution dynamic programming over the single scalar state of the
two-cell continuity equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mobility import ActionDensity, MobilitySpec

__all__ = ["quadrature", "QuadratureError", "TwoCellInstance", "two_cell_exact"]


class QuadratureError(RuntimeError):
    pass


# 7-point Gauss / 15-point Kronrod nodes and weights on [-1, 1]
_XK = np.array([
    -0.991455371120812639206854697526329, -0.949107912342758524526189684047851,
    -0.864864423359769072789712788640926, -0.741531185599394439863864773280788,
    -0.586087235467691130294144845693013, -0.405845151377397166906606412076961,
    -0.207784955007898467600689403773245, 0.0,
    0.207784955007898467600689403773245, 0.405845151377397166906606412076961,
    0.586087235467691130294144845693013, 0.741531185599394439863864773280788,
    0.864864423359769072789712788640926, 0.949107912342758524526189684047851,
    0.991455371120812639206854697526329])
_WK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
    0.204432940075298892414161999234649, 0.190350578064785409913256402421014,
    0.169004726639267902826583426598550, 0.140653259715525918745189590510238,
    0.104790010322250183839876322541518, 0.063092092629978553290700663189204,
    0.022935322010529224963732008058970])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
    0.381830050505118944950369775488975, 0.279705391489276667901467771423780,
    0.129484966168869693270611432679082])


def _gk15(f, lo: float, hi: float) -> tuple[float, float]:
    c, r = 0.5 * (lo + hi), 0.5 * (hi - lo)
    fx = np.asarray(f(c + r * _XK), dtype=float)
    k = r * float(_WK @ fx)
    g = r * float(_WG @ fx[1::2])
    return k, abs(k - g)


def quadrature(f, lo: float, hi: float, tol: float = 1e-10, max_intervals: int = 20000) -> float:
    """Globally adaptive Gauss-Kronrod (7/15) integration of a vectorized ``f``.

    Interior nodes only, so integrable endpoint singularities are tolerated.
    Raises :class:`QuadratureError` when the error estimate stays above
    ``tol`` after ``max_intervals`` subdivisions.
    """
    if hi == lo:
        return 0.0
    sign = 1.0
    if hi < lo:
        lo, hi, sign = hi, lo, -1.0
    intervals = [(lo, hi, *_gk15(f, lo, hi))]
    while True:
        total = math.fsum(iv[2] for iv in intervals)
        err = sum(iv[3] for iv in intervals)
        if not math.isfinite(total):
            raise QuadratureError("integrand is not finite on the interval")
        if err <= tol:
            return sign * total
        if len(intervals) >= max_intervals:
            raise QuadratureError(f"no convergence: error estimate {err:.3e} > tol {tol:.1e}")
        i = max(range(len(intervals)), key=lambda j: intervals[j][3])
        a, b, _, _ = intervals.pop(i)
        m = 0.5 * (a + b)
        intervals.append((a, m, *_gk15(f, a, m)))
        intervals.append((m, b, *_gk15(f, m, b)))


@dataclass(frozen=True)
class TwoCellInstance:
    """Two adjacent cells, one flux unknown per time step.

    ``weights`` are the reference masses of the two cells (cell volume for
    Lebesgue); unequal weights make the face density vary along the path.
    """

    rho0: tuple[float, float]
    rho1: tuple[float, float]
    width: float
    mobility: MobilitySpec
    p: float = 2.0
    steps: int = 8
    weights: tuple[float, float] | None = None

    @property
    def cell_weights(self) -> tuple[float, float]:
        return self.weights if self.weights is not None else (self.width, self.width)

    def masses(self) -> tuple[float, float]:
        gl, gr = self.cell_weights
        return (gl * self.rho0[0] + gr * self.rho0[1], gl * self.rho1[0] + gr * self.rho1[1])


def two_cell_exact(inst: TwoCellInstance, levels: int = 2001, rounds: int = 8) -> float:
    """Minimal discrete action^(1/p) over two-cell curves, by refined dynamic programming.

    The state is the left density; the right one follows from mass
    conservation and the flux from the discrete continuity equation.  The
    first pass uses ``levels`` uniformly spaced states over the feasible
    range, later passes a band of shrinking width around the current path.
    """
    m0, m1 = inst.masses()
    if abs(m0 - m1) > 1e-10 * max(1.0, abs(m0)):
        raise ValueError("two-cell instance has unequal masses")
    a, b = inst.mobility.a, inst.mobility.b
    for v in (*inst.rho0, *inst.rho1):
        if not (a - 1e-12 <= v <= b + 1e-12):
            raise ValueError("densities outside the mobility interval")
    phi = ActionDensity(inst.p, inst.mobility)
    gl, gr = inst.cell_weights
    dx = inst.width
    n = inst.steps
    dt = 1.0 / n
    gface = 0.5 * (gl + gr)
    mass = m0

    def right(rl):
        return (mass - gl * rl) / gr

    # feasible range of the left density: both densities inside [a, b]
    lo = max(a, (mass - gr * b) / gl)
    hi = min(b, (mass - gr * a) / gl)
    start, end = inst.rho0[0], inst.rho1[0]

    def step_cost(r_from, r_to):
        # r_from: (m,) column, r_to: (n,) row -> (m, n) costs
        rf = r_from[:, None]
        rt = r_to[None, :]
        flux = -gl * (rt - rf) / dt          # mass flux through the face, left -> right
        w = flux * dx / gface
        face_rho = 0.25 * (rf + right(rf) + rt + right(rt))
        return dt * gface * phi.from_norm(face_rho, w)

    if n == 1:
        return float(step_cost(np.array([start]), np.array([end]))[0, 0]) ** (1 / inst.p)

    # pass 1: uniform levels over the whole feasible range
    grid = np.linspace(lo, hi, levels)
    path = _dp_path(step_cost, [np.array([start])] + [grid] * (n - 1) + [np.array([end])])
    width = 4 * (grid[1] - grid[0]) if grid.size > 1 else 0.0
    for _ in range(rounds):
        if width < 1e-13:
            break
        bands = [np.array([start])]
        for k in range(1, n):
            c = path[k]
            bands.append(np.clip(np.linspace(c - width, c + width, 201), lo, hi))
        bands.append(np.array([end]))
        path = _dp_path(step_cost, bands)
        width *= 0.05
    total = sum(float(step_cost(np.array([path[k]]), np.array([path[k + 1]]))[0, 0])
                for k in range(n))
    return total ** (1 / inst.p)


def _dp_path(step_cost, layers: list[np.ndarray]) -> list[float]:
    """Shortest path through layered states; returns the chosen state per layer."""
    value = np.zeros(layers[0].size)
    back = []
    for k in range(len(layers) - 1):
        cost = step_cost(layers[k], layers[k + 1]) + value[:, None]
        arg = np.argmin(cost, axis=0)
        value = cost[arg, np.arange(cost.shape[1])]
        back.append(arg)
    idx = int(np.argmin(value))
    path = [float(layers[-1][idx])]
    for k in range(len(layers) - 2, -1, -1):
        idx = int(back[k][idx])
        path.append(float(layers[k][idx]))
    return path[::-1]
