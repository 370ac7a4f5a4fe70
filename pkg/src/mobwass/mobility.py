"""Concave mobilities and the action densities they induce.

A mobility ``h`` is a positive concave function on a bounded interval
``(a, b)``.  It defines the action density

    phi(rho, w) = |w|^p / h(rho)^(p-1)

with marginal conjugate ``h(rho) |z|^q`` (``1/p + 1/q = 1``).  Values outside
the effective domain are ``+inf``; infinity is an ordinary float value here,
never an exception.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

__all__ = [
    "MobilitySpec",
    "ActionDensity",
    "eval_action",
    "eval_conjugate",
    "eval_recession",
    "phi_norms",
    "upper_concave_bound",
    "parabola_minorant",
]

KINDS = ("quadratic", "power", "linear", "tabulated")


@dataclass(frozen=True)
class MobilitySpec:
    """Concave mobility on ``(a, b)``.

    Kinds
    -----
    quadratic : ``scale * (rho - a) * (b - rho)``
    power : ``scale * (rho - a)**alpha * (b - rho)**beta`` with alpha, beta in [0, 1]
    linear : ``scale * (rho - a)``
    tabulated : values on a uniform grid of ``[a, b]``, linearly interpolated

    At the endpoints the upper semicontinuous extension (the one-sided limit)
    is used, so ``h(a) = h(b) = 0`` for quadratic mobilities and
    ``h(b) = scale * (b - a)`` for the linear one.  Outside ``[a, b]`` the
    mobility is ``-inf``.
    """

    kind: str
    a: float
    b: float
    alpha: float = 1.0
    beta: float = 1.0
    scale: float = 1.0
    table: tuple[float, ...] = field(default=(), repr=False)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown mobility kind {self.kind!r}")
        if not (math.isfinite(self.a) and math.isfinite(self.b) and self.a < self.b):
            raise ValueError(f"need finite a < b, got ({self.a}, {self.b})")
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        if self.kind == "power" and not (0 <= self.alpha <= 1 and 0 <= self.beta <= 1):
            raise ValueError("power mobility needs alpha, beta in [0, 1] for concavity")
        if self.kind == "tabulated":
            tab = np.asarray(self.table, dtype=float)
            if tab.ndim != 1 or tab.size < 3:
                raise ValueError("tabulated mobility needs at least 3 values")
            if np.any(tab[1:-1] <= 0) or np.any(tab < 0):
                raise ValueError("tabulated mobility must be positive inside (a, b)")
            second = tab[2:] - 2 * tab[1:-1] + tab[:-2]
            if np.any(second > 1e-12 * max(1.0, float(tab.max()))):
                raise ValueError("tabulated mobility is not concave")

    # -- constructors -------------------------------------------------------

    @classmethod
    def quadratic(cls, a: float = 0.0, b: float = 1.0, scale: float = 1.0) -> MobilitySpec:
        return cls("quadratic", float(a), float(b), scale=float(scale))

    @classmethod
    def power(cls, alpha: float, beta: float, a: float = 0.0, b: float = 1.0,
              scale: float = 1.0) -> MobilitySpec:
        return cls("power", float(a), float(b), float(alpha), float(beta), float(scale))

    @classmethod
    def linear(cls, a: float = 0.0, b: float = 1.0, scale: float = 1.0) -> MobilitySpec:
        return cls("linear", float(a), float(b), scale=float(scale))

    @classmethod
    def tabulated(cls, values, a: float = 0.0, b: float = 1.0) -> MobilitySpec:
        return cls("tabulated", float(a), float(b),
                   table=tuple(float(v) for v in np.asarray(values, dtype=float)))

    @classmethod
    def from_function(cls, fn, a: float = 0.0, b: float = 1.0, n: int = 2001) -> MobilitySpec:
        """Tabulate ``fn`` on ``n`` uniform points of ``[a, b]``."""
        xs = np.linspace(a, b, n)
        return cls.tabulated(np.maximum(np.asarray(fn(xs), dtype=float), 0.0), a, b)

    @classmethod
    def from_config(cls, cfg: dict[str, Any]) -> MobilitySpec:
        kind = cfg["kind"]
        a = float(cfg.get("a", 0.0))
        b = float(cfg.get("b", 1.0))
        scale = float(cfg.get("scale", 1.0))
        if kind == "quadratic":
            return cls.quadratic(a, b, scale)
        if kind == "power":
            return cls.power(float(cfg["alpha"]), float(cfg["beta"]), a, b, scale)
        if kind == "linear":
            return cls.linear(a, b, scale)
        if kind == "tabulated":
            return cls.tabulated(cfg["values"], a, b)
        raise ValueError(f"unknown mobility kind {kind!r}")

    def to_config(self) -> dict[str, Any]:
        cfg: dict[str, Any] = {"kind": self.kind, "a": self.a, "b": self.b}
        if self.kind == "power":
            cfg.update(alpha=self.alpha, beta=self.beta)
        if self.kind == "tabulated":
            cfg["values"] = list(self.table)
        if self.scale != 1.0:
            cfg["scale"] = self.scale
        return cfg

    # -- evaluation ---------------------------------------------------------

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.a + self.b)

    def with_scale(self, factor: float) -> MobilitySpec:
        """Return ``factor * h`` as a new mobility."""
        if self.kind == "tabulated":
            return MobilitySpec.tabulated(np.asarray(self.table) * factor, self.a, self.b)
        return MobilitySpec(self.kind, self.a, self.b, self.alpha, self.beta,
                            self.scale * factor)

    def shifted(self, offset: float) -> MobilitySpec:
        """Return ``r -> h(r + offset)``, defined on ``(a - offset, b - offset)``."""
        return MobilitySpec(self.kind, self.a - offset, self.b - offset, self.alpha,
                            self.beta, self.scale, self.table)

    def __call__(self, rho):
        rho = np.asarray(rho, dtype=float)
        a, b = self.a, self.b
        inside = (rho >= a) & (rho <= b)
        r = np.clip(rho, a, b)
        if self.kind == "quadratic":
            val = self.scale * (r - a) * (b - r)
        elif self.kind == "power":
            val = self.scale * _pow(r - a, self.alpha) * _pow(b - r, self.beta)
        elif self.kind == "linear":
            val = self.scale * (r - a)
        else:
            tab = np.asarray(self.table)
            val = np.interp(r, np.linspace(a, b, tab.size), tab)
        out = np.where(inside, val, -np.inf)
        return out if out.ndim else float(out)

    def derivative(self, rho):
        """Derivative on ``[a, b]`` (one-sided at the endpoints, possibly infinite)."""
        r = np.clip(np.asarray(rho, dtype=float), self.a, self.b)
        a, b, s = self.a, self.b, self.scale
        if self.kind == "quadratic":
            return s * (a + b - 2 * r)
        if self.kind == "linear":
            return np.full_like(r, s)
        if self.kind == "power":
            al, be = self.alpha, self.beta
            with np.errstate(divide="ignore", invalid="ignore"):
                left = np.where(al > 0, al * _pow(r - a, al - 1), 0.0) * _pow(b - r, be)
                right = np.where(be > 0, be * _pow(b - r, be - 1), 0.0) * _pow(r - a, al)
                d = s * (left - right)
            d = np.where(np.isnan(d), np.where(r <= self.midpoint, np.inf, -np.inf), d)
            return d
        tab = np.asarray(self.table)
        n = tab.size - 1
        step = (b - a) / n
        idx = np.clip(np.floor((r - a) / step).astype(int), 0, n - 1)
        return (tab[idx + 1] - tab[idx]) / step

    def second_derivative(self, rho):
        """Second derivative inside ``(a, b)`` (0 for linear and tabulated kinds)."""
        r = np.clip(np.asarray(rho, dtype=float), self.a, self.b)
        a, b, s = self.a, self.b, self.scale
        if self.kind == "quadratic":
            return np.full_like(r, -2 * s)
        if self.kind != "power":
            return np.zeros_like(r)
        al, be = self.alpha, self.beta
        u, v = r - a, b - r
        with np.errstate(divide="ignore", invalid="ignore"):
            d2 = s * (al * (al - 1) * _pow(u, al - 2) * _pow(v, be)
                      - 2 * al * be * _pow(u, al - 1) * _pow(v, be - 1)
                      + be * (be - 1) * _pow(u, al) * _pow(v, be - 2))
        return np.where(np.isfinite(d2), d2, -np.inf)

    def max_value(self, n: int = 4001) -> float:
        """Supremum of ``h`` over ``[a, b]`` (closed form when available)."""
        if self.kind == "quadratic":
            return self.scale * (self.b - self.a) ** 2 / 4
        if self.kind == "linear":
            return self.scale * (self.b - self.a)
        if self.kind == "power":
            al, be = self.alpha, self.beta
            if al + be == 0:
                return self.scale
            r = self.a + (self.b - self.a) * al / (al + be)
            return float(self(r))
        return float(max(self.table))

    def check_concave(self, n: int = 1001, tol: float = 1e-10) -> bool:
        xs = np.linspace(self.a, self.b, n)
        h = self(xs)
        second = h[2:] - 2 * h[1:-1] + h[:-2]
        return bool(np.all(second <= tol * max(1.0, float(np.max(h)))))


def _pow(x, e):
    # 0**0 = 1 is the convention for alpha = 0
    x = np.asarray(x, dtype=float)
    if e == 0:
        return np.ones_like(x)
    return np.power(x, e)


@dataclass(frozen=True)
class ActionDensity:
    """The action density built from a mobility and an exponent ``p > 1``."""

    p: float
    mobility: MobilitySpec

    def __post_init__(self) -> None:
        if not self.p > 1:
            raise ValueError("p must exceed 1")

    @property
    def q(self) -> float:
        return self.p / (self.p - 1)

    @property
    def a(self) -> float:
        return self.mobility.a

    @property
    def b(self) -> float:
        return self.mobility.b

    def from_norm(self, rho, wnorm):
        """Action density given ``|w|`` instead of the vector ``w``.

        Broadcasts over arrays; this is the workhorse used on grids.
        """
        rho = np.asarray(rho, dtype=float)
        wn = np.abs(np.asarray(wnorm, dtype=float))
        h = self.mobility(rho)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = wn ** self.p / np.power(np.where(h > 0, h, 1.0), self.p - 1)
        out = np.where(h > 0, val, np.where((h == 0) & (wn == 0), 0.0, np.inf))
        return out if out.ndim else float(out)

    def conjugate_from_norm(self, rho, znorm):
        h = self.mobility(np.asarray(rho, dtype=float))
        zn = np.abs(np.asarray(znorm, dtype=float))
        with np.errstate(invalid="ignore"):
            out = np.where(h >= 0, h * zn ** self.q, -np.inf)
        return out if out.ndim else float(out)


def _norm(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim == 0:
        return np.abs(v)
    return np.linalg.norm(v, axis=-1)


def eval_action(phi: ActionDensity, rho, w):
    """``phi(rho, w)``; ``w`` is a vector (last axis) or a scalar in 1D."""
    return phi.from_norm(rho, _norm(w))


def eval_conjugate(phi: ActionDensity, rho, z):
    """Marginal conjugate ``h(rho) |z|^q`` with the lower-extension convention.

    Outside ``[a, b]`` the value is ``-inf``.
    """
    return phi.conjugate_from_norm(rho, _norm(z))


def eval_recession(phi: ActionDensity, rho, w):
    """Recession function of ``phi`` on a bounded interval: 0 at (0, 0), else +inf."""
    rho = np.asarray(rho, dtype=float)
    wn = _norm(w)
    out = np.where((rho == 0) & (wn == 0), 0.0, np.inf)
    return out if out.ndim else float(out)


def phi_norms(phi: ActionDensity, rho: float, w, z) -> tuple[float, float]:
    """The pair of dual norms ``(phi(rho, w)^(1/p), conj(rho, z)^(1/q))``."""
    if not (phi.a < rho < phi.b):
        raise ValueError(f"rho={rho} outside the open interval ({phi.a}, {phi.b})")
    wn = float(eval_action(phi, rho, w)) ** (1 / phi.p)
    zn = float(eval_conjugate(phi, rho, z)) ** (1 / phi.q)
    return wn, zn


def upper_concave_bound(phi: ActionDensity) -> MobilitySpec:
    """Normalized mobility ``h / h((a+b)/2)``.

    This is the smallest concave majorant of ``rho -> sup{conj(rho, z): ||z||_* = 1}``
    where ``||.||_*`` is the dual norm at the midpoint.  Its supremum is
    available from :meth:`MobilitySpec.max_value`.
    """
    h_mid = float(phi.mobility(phi.mobility.midpoint))
    return phi.mobility.with_scale(1.0 / h_mid)


def parabola_minorant(h: MobilitySpec, n: int = 1001) -> tuple[float, float]:
    """Coefficients ``(A, B)`` with ``A r (M/B - B r) <= h(r)`` on ``[a, a + M]``.

    ``M = b - a`` and ``r = rho - a``.  ``B = 1`` always works for a concave
    positive ``h``; ``A`` is the largest constant passing the grid check.
    """
    M = h.b - h.a
    xs = np.linspace(0.0, M, n)
    # the fine sample contains the verification grid, so A passes the check below
    r = np.union1d(np.linspace(0.0, M, 16 * n), xs)[1:-1]
    hv = h(h.a + r)
    if np.any(~np.isfinite(hv)) or np.any(hv <= 0):
        raise ValueError("mobility is not positive inside its interval")
    A = float(np.min(hv / (r * (M - r)))) * (1 - 1e-9)
    if not (A > 0 and np.all(A * xs * (M - xs) <= h(h.a + xs) + 1e-14)):
        raise ValueError("no parabola minorant fits on the verification grid")
    return A, 1.0
