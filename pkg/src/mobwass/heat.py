"""Neumann heat flow on box grids, entropy dissipation and the heat-then-transport bound.

Time stepping is implicit Euler with the zero-flux finite-volume Laplacian,
which conserves the mean exactly and obeys the discrete maximum principle.
The discrete Fisher information uses the face mobility
``h_f = (rho_r - rho_l) / (U'(rho_r) - U'(rho_l))``, for which the entropy
inequality ``U(rho_{k+1}) - U(rho_k) <= -dt * I(rho_{k+1})`` is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.sparse import identity
from scipy.sparse.linalg import splu
from scipy.special import xlogy

from .dynamics import faces_of, wasserstein_1d
from .measures import GridMeasure, total_mass
from .mobility import ActionDensity, MobilitySpec

__all__ = [
    "HeatTrajectory",
    "EntropyFunction",
    "solve_neumann_heat",
    "entropy",
    "fisher_information",
    "dissipation_report",
    "decay_report",
    "heat_then_transport_bound",
    "heat_then_transport_report",
]


@dataclass(frozen=True, eq=False)
class HeatTrajectory:
    """Frames ``rho(t_k)`` of the Neumann heat flow, ``t_k = k * dt``."""

    initial: GridMeasure
    dt: float
    frames: np.ndarray
    rho_inf: float

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.frames.shape[0])

    @property
    def reference(self):
        return self.initial.reference

    def measure_at(self, k: int) -> GridMeasure:
        return GridMeasure(self.reference, self.frames[k])

    def means(self) -> np.ndarray:
        w = self.reference.weights.ravel()
        return self.frames.reshape(len(self.frames), -1) @ w / w.sum()


def _heat_stepper(mu: GridMeasure, dt: float):
    faces = faces_of(mu.reference)
    n = mu.grid.size
    lu = splu((identity(n, format="csc") - dt * faces.laplacian()).tocsc())
    return lambda r: lu.solve(r)


def solve_neumann_heat(rho0: GridMeasure, T: float, dt: float) -> HeatTrajectory:
    """Implicit Euler on ``[0, T]`` with ``ceil(T / dt)`` steps of size ``dt``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if T < 0:
        raise ValueError("T must be nonnegative")
    steps = int(math.ceil(T / dt - 1e-9))
    step = _heat_stepper(rho0, dt)
    frames = np.empty((steps + 1, rho0.grid.size))
    frames[0] = rho0.density.ravel()
    for k in range(steps):
        frames[k + 1] = step(frames[k])
    w = rho0.reference.weights.ravel()
    rho_inf = float(frames[0] @ w / w.sum())
    return HeatTrajectory(rho0, dt, frames.reshape(steps + 1, *rho0.grid.shape), rho_inf)


# -- entropy ----------------------------------------------------------------------


class EntropyFunction:
    """``U`` with ``U'' = 1/h`` and ``U = U' = 0`` at the midpoint of ``(a, b)``.

    Closed forms for quadratic and linear mobilities; otherwise ``U`` and
    ``U'`` are tabulated on ``[a + delta, b - delta]`` and are ``+inf`` /
    ``-inf, +inf`` outside the table.
    """

    def __init__(self, h: MobilitySpec, nodes: int = 40001, delta: float = 1e-9):
        self.h = h
        self.closed = h.kind in ("quadratic", "linear")
        if not self.closed:
            L = h.b - h.a
            s = np.linspace(0.0, 1.0, nodes)
            r = h.a + L * (1 - np.cos(np.pi * s)) / 2
            r = r[(r >= h.a + delta * L) & (r <= h.b - delta * L)]
            mid = np.searchsorted(r, h.midpoint)
            r = np.insert(r, mid, h.midpoint)
            inv = 1.0 / h(r)
            du = cumulative_trapezoid(inv, r, initial=0.0)
            du -= du[mid]
            u = cumulative_trapezoid(du, r, initial=0.0)
            u -= u[mid]
            self._r, self._du, self._u = r, du, u

    def __call__(self, rho):
        rho = np.asarray(rho, dtype=float)
        h = self.h
        a, b, L = h.a, h.b, h.b - h.a
        inside = (rho >= a) & (rho <= b)
        r = np.clip(rho, a, b)
        if h.kind == "quadratic":
            c = 1.0 / (h.scale * L)
            val = c * (xlogy(r - a, r - a) + xlogy(b - r, b - r) - L * math.log(L / 2))
        elif h.kind == "linear":
            um = L / 2
            val = (xlogy(r - a, (r - a) / um) - (r - a) + um) / h.scale
        else:
            inside &= (rho >= self._r[0]) & (rho <= self._r[-1])
            val = np.interp(r, self._r, self._u)
        return np.where(inside, val, np.inf)

    def derivative(self, rho):
        rho = np.asarray(rho, dtype=float)
        h = self.h
        a, b, L = h.a, h.b, h.b - h.a
        r = np.clip(rho, a, b)
        with np.errstate(divide="ignore"):
            if h.kind == "quadratic":
                val = (np.log(r - a) - np.log(b - r)) / (h.scale * L)
            elif h.kind == "linear":
                val = np.log((r - a) / (L / 2)) / h.scale
            else:
                val = np.interp(r, self._r, self._du)
                val = np.where(rho < self._r[0], -np.inf, np.where(rho > self._r[-1], np.inf, val))
        return np.where(rho < a, -np.inf, np.where(rho > b, np.inf, val))


def entropy(rho: GridMeasure, h: MobilitySpec, U: EntropyFunction | None = None) -> float:
    """``sum_i U(rho_i) gamma_i`` (``+inf`` when a density leaves the domain of ``U``)."""
    U = U or EntropyFunction(h)
    vals = U(rho.density)
    w = rho.reference.weights
    return float(np.sum(np.where(w > 0, vals * w, 0.0)))


def fisher_information(rho: GridMeasure, U: EntropyFunction) -> float:
    """``sum_f gface (G rho)_f (G U'(rho))_f``, the discrete ``int |grad rho|^2 / h(rho)``."""
    faces = faces_of(rho.reference)
    r = rho.density.ravel()
    du = U.derivative(r)
    g_rho = faces.gradient @ r
    with np.errstate(invalid="ignore"):
        g_u = (du[faces.right] - du[faces.left]) / faces.dx
        term = np.where(g_rho == 0, 0.0, g_rho * g_u)
    return float(np.sum(faces.weight * term))


# -- reports ----------------------------------------------------------------------


@dataclass(frozen=True)
class DissipationReport:
    entropy: np.ndarray
    fisher: np.ndarray
    worst_margin: float
    fisher_integral: float
    length: float
    strictly_decreasing: bool


def dissipation_report(traj: HeatTrajectory, h: MobilitySpec) -> DissipationReport:
    """Per-step entropy balance along a trajectory.

    ``worst_margin`` is ``max_k [U_{k+1} - U_k + dt I_{k+1}]`` (at most roundoff
    for implicit Euler).  ``length = sum_k dt sqrt(I_{k+1})`` bounds the action
    distance between the first and last frames; ``fisher_integral`` is the
    time integral of ``I`` itself.
    """
    U = EntropyFunction(h)
    ent = np.array([entropy(traj.measure_at(k), h, U) for k in range(len(traj.frames))])
    fisher = np.array([fisher_information(traj.measure_at(k), U)
                       for k in range(1, len(traj.frames))])
    dt = traj.dt
    if fisher.size:
        with np.errstate(invalid="ignore"):
            margins = np.diff(ent) + dt * fisher
        worst = float(np.nanmax(margins))
        decreasing = bool(np.all(np.diff(ent) < 0))
    else:
        worst, decreasing = 0.0, False
    return DissipationReport(ent, fisher, worst, float(dt * fisher.sum()),
                             float(dt * np.sqrt(np.maximum(fisher, 0.0)).sum()), decreasing)


@dataclass(frozen=True)
class DecayReport:
    l2_rate: float | None
    linf_rate: float | None
    gradient_ok: bool
    gradient_ratio: float
    l2_gap: np.ndarray
    linf_gap: np.ndarray


def decay_report(traj: HeatTrajectory, interval: tuple[float, float] | None = None,
                 t_min: float = 1.0) -> DecayReport:
    """Fitted exponential rates of ``rho_t - rho_inf`` and the gradient bound.

    Rates come from a least-squares line through ``log gap`` over frames with
    ``t >= t_min`` that are above roundoff (at least 10 such frames are
    needed, otherwise the rate is ``None``).  The gradient check compares
    ``sqrt(t) max |grad rho_t|`` with ``max(|a|, |b|)`` for ``interval = (a, b)``,
    or with ``max |rho_0|`` when no interval is given.
    """
    faces = faces_of(traj.reference)
    w = traj.reference.weights.ravel()
    flat = traj.frames.reshape(len(traj.frames), -1)
    dev = flat - traj.rho_inf
    l2 = np.sqrt((dev ** 2) @ w)
    linf = np.max(np.abs(dev[:, w > 0]), axis=1)
    t = traj.times

    def fit(gap):
        floor = 1e-11 * max(float(np.max(np.abs(flat[0]))), 1e-300)
        use = (t >= t_min) & (gap > floor)
        if use.sum() < 10:
            return None
        slope = np.polyfit(t[use], np.log(gap[use]), 1)[0]
        return float(-slope)

    bound = max(abs(interval[0]), abs(interval[1])) if interval else float(np.max(np.abs(flat[0])))
    grads = np.array([np.max(np.abs(faces.gradient @ f)) if faces.n else 0.0 for f in flat])
    scaled = np.sqrt(t) * grads
    ratio = float(np.max(scaled) / bound) if bound > 0 else 0.0
    return DecayReport(fit(l2), fit(linf), bool(np.all(scaled <= bound * (1 + 1e-12))),
                       ratio, l2, linf)


# -- heat-then-transport bound -----------------------------------------------------


@dataclass(frozen=True)
class HeatTransportReport:
    bound: float
    T: float
    length0: float
    length1: float
    w2: float
    constant: float
    threshold: float


def comparison_constant(h: MobilitySpec, m_prime: float, p: float = 2.0) -> float:
    """``(M' / h(a + M'))^((p-1)/p)`` for densities shifted to start at 0."""
    hv = float(h(h.a + m_prime))
    if not (0 < m_prime < h.b - h.a) or hv <= 0:
        raise ValueError("M' must lie strictly inside (0, b - a)")
    return (m_prime / hv) ** ((p - 1) / p)


def heat_then_transport_report(mu0: GridMeasure, mu1: GridMeasure, phi: ActionDensity,
                               dt: float = 1e-3, t_max: float = 10.0) -> HeatTransportReport:
    """Upper bound on the action distance via heat smoothing and a comparison step.

    Both measures are smoothed until ``max rho_T <= rho_inf + (b - rho_inf)/2``.
    The bound is the dissipation length of each smoothing plus ``C`` times
    the quadratic Wasserstein distance of the smoothed, ``a``-shifted
    measures (exact in 1D, ``diam * sqrt(mass)`` otherwise).
    """
    if phi.p != 2:
        raise ValueError("the heat-then-transport bound is stated for p = 2")
    if not mu0.reference.same_as(mu1.reference):
        raise ValueError("measures live on different grids or references")
    m0, m1 = total_mass(mu0), total_mass(mu1)
    if abs(m0 - m1) > 1e-10 * max(1.0, abs(m0)):
        raise ValueError(f"unequal masses {m0} and {m1}")
    h = phi.mobility
    a, b = h.a, h.b
    for mu in (mu0, mu1):
        if mu.density.min() < a - 1e-12 or mu.density.max() > b + 1e-12:
            raise ValueError(f"densities must lie in [{a}, {b}]")
    U = EntropyFunction(h)
    w = mu0.reference.weights.ravel()
    rho_inf = float(mu0.density.ravel() @ w / w.sum())
    thr = rho_inf + (b - rho_inf) / 2
    step = _heat_stepper(mu0, dt)
    r0, r1 = mu0.density.ravel().copy(), mu1.density.ravel().copy()
    len0 = len1 = 0.0
    t = 0.0
    ref = mu0.reference
    while max(r0.max(), r1.max()) > thr:
        if t >= t_max:
            raise RuntimeError(f"smoothing criterion not reached by T_max = {t_max}")
        r0, r1 = step(r0), step(r1)
        t += dt
        len0 += dt * math.sqrt(max(fisher_information(GridMeasure(ref, r0.reshape(mu0.grid.shape)), U), 0.0))
        len1 += dt * math.sqrt(max(fisher_information(GridMeasure(ref, r1.reshape(mu0.grid.shape)), U), 0.0))
    s0 = GridMeasure(ref, r0.reshape(mu0.grid.shape) - a)
    s1 = GridMeasure(ref, r1.reshape(mu0.grid.shape) - a)
    if mu0.grid.d == 1:
        w2 = wasserstein_1d(s0, s1, 2.0)
    else:
        diam = math.sqrt(sum((hi - lo) ** 2 for lo, hi in mu0.grid.bounds))
        w2 = diam * math.sqrt(max(total_mass(s0), 0.0))
    # constant measures (rho_inf at an endpoint) have w2 = 0 and need no constant
    C = comparison_constant(h, thr - a, 2.0) if a < thr < b else 0.0
    return HeatTransportReport(len0 + C * w2 + len1, t, len0, len1, w2, C, thr)


def heat_then_transport_bound(mu0: GridMeasure, mu1: GridMeasure, phi: ActionDensity,
                              dt: float = 1e-3, t_max: float = 10.0) -> float:
    return heat_then_transport_report(mu0, mu1, phi, dt, t_max).bound
