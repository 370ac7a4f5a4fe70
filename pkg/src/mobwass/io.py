"""File formats: grid measures, curves, heat trajectories and diagnostics.

A grid measure is a JSON header next to a raw little-endian float64 file in
row-major order::

    {"d": 1, "bounds": [[0.0, 1.0]], "cells": [64], "reference": "lebesgue",
     "order": "row-major", "data": "mu0.f64"}

Non-Lebesgue references also store their per-cell weights (``"weights"``).
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .dynamics import TransportCurve, mass_trace, step_actions
from .measures import Grid, GridMeasure, ReferenceMeasure
from .mobility import ActionDensity

__all__ = [
    "write_measure",
    "read_measure",
    "measure_to_csv",
    "write_curve",
    "read_curve",
    "curve_timeseries_csv",
    "write_diagnostics",
    "write_heat_csv",
    "json_number",
]

_F64 = np.dtype("<f8")


def json_number(x: float) -> float | str:
    """JSON-safe float: infinities and NaN become strings."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _write_raw(path: Path, arr: np.ndarray) -> None:
    np.ascontiguousarray(arr, dtype=_F64).tofile(path)


def _read_raw(path: Path, shape) -> np.ndarray:
    data = np.fromfile(path, dtype=_F64)
    if data.size != int(np.prod(shape)):
        raise ValueError(f"{path} holds {data.size} values, expected {int(np.prod(shape))}")
    return data.reshape(shape).astype(float)


def _header(ref: ReferenceMeasure) -> dict[str, Any]:
    g = ref.grid
    kind = "lebesgue" if ref.kind == "lebesgue" else ref.kind
    return {"d": g.d, "bounds": [list(b) for b in g.bounds], "cells": list(g.cells),
            "reference": kind, "order": "row-major"}


def write_measure(path: str | Path, mu: GridMeasure) -> Path:
    """Write ``path`` (JSON header) and ``path.with_suffix('.f64')``."""
    path = Path(path)
    data = path.with_suffix(".f64")
    head = _header(mu.reference)
    head["data"] = data.name
    _write_raw(data, mu.density)
    if mu.reference.kind != "lebesgue":
        wpath = path.with_name(path.stem + ".weights.f64")
        _write_raw(wpath, mu.reference.weights)
        head["weights"] = wpath.name
    path.write_text(json.dumps(head, indent=2) + "\n")
    return path


def grid_from_header(head: dict[str, Any]) -> Grid:
    for key in ("d", "bounds", "cells"):
        if key not in head:
            raise ValueError(f"measure header lacks {key!r}")
    if head.get("order", "row-major") != "row-major":
        raise ValueError("only row-major data is supported")
    grid = Grid(tuple(tuple(b) for b in head["bounds"]), tuple(head["cells"]))
    if grid.d != int(head["d"]):
        raise ValueError("header dimension disagrees with bounds")
    return grid


def read_measure(path: str | Path) -> GridMeasure:
    path = Path(path)
    head = json.loads(path.read_text())
    grid = grid_from_header(head)
    kind = head.get("reference", "lebesgue")
    if kind == "lebesgue":
        ref = ReferenceMeasure.lebesgue(grid)
    else:
        if "weights" not in head:
            raise ValueError(f"reference {kind!r} needs a weights file")
        ref = ReferenceMeasure(grid, _read_raw(path.parent / head["weights"], grid.shape), kind)
    data = path.parent / head.get("data", path.with_suffix(".f64").name)
    return GridMeasure(ref, _read_raw(data, grid.shape))


def measure_to_csv(path: str | Path, mu: GridMeasure) -> Path:
    """Cell centers and densities, one row per cell (1D and 2D)."""
    path = Path(path)
    grid = mu.grid
    if grid.d > 2:
        raise ValueError("CSV export covers 1D and 2D grids")
    names = ["x", "y"][:grid.d] + ["rho"]
    cols = [m.ravel() for m in grid.mesh()] + [mu.density.ravel()]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for row in zip(*cols):
            w.writerow([repr(float(v)) for v in row])
    return path


def write_curve(directory: str | Path, curve: TransportCurve,
                phi: ActionDensity | None = None) -> Path:
    """Manifest ``curve.json`` plus one measure file per time node and momentum files."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    frames = []
    for k in range(curve.steps + 1):
        name = f"frame_{k:04d}.json"
        write_measure(out / name, curve.measure_at(k))
        frames.append(name)
    momenta = []
    for ax, m in enumerate(curve.momentum):
        name = f"momentum_axis{ax}.f64"
        _write_raw(out / name, m)
        momenta.append({"file": name, "shape": list(m.shape)})
    manifest = {"grid": _header(curve.reference), "times": [float(t) for t in curve.times],
                "frames": frames, "momentum": momenta}
    (out / "curve.json").write_text(json.dumps(manifest, indent=2) + "\n")
    curve_timeseries_csv(out / "timeseries.csv", curve, phi)
    return out / "curve.json"


def read_curve(manifest: str | Path) -> TransportCurve:
    manifest = Path(manifest)
    head = json.loads(manifest.read_text())
    frames = [read_measure(manifest.parent / f) for f in head["frames"]]
    ref = frames[0].reference
    rho = np.array([f.density for f in frames])
    mom = tuple(_read_raw(manifest.parent / m["file"], tuple(m["shape"])) for m in head["momentum"])
    return TransportCurve(ref, rho, mom, np.array(head["times"]))


def curve_timeseries_csv(path: str | Path, curve: TransportCurve,
                         phi: ActionDensity | None = None) -> Path:
    """Rows ``(t, mass, step_action)``; the action column refers to the step ending at ``t``."""
    path = Path(path)
    mass = mass_trace(curve)
    acts = step_actions(curve, phi) if phi is not None else None
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "mass", "step_action"])
        for k, t in enumerate(curve.times):
            a = "" if acts is None or k == 0 else repr(float(acts[k - 1]))
            w.writerow([repr(float(t)), repr(float(mass[k])), a])
    return path


def write_diagnostics(path: str | Path, record: dict[str, Any]) -> Path:
    """Deterministic JSON (sorted keys, infinities as strings)."""
    path = Path(path)
    clean = {k: (json_number(v) if isinstance(v, float) else v) for k, v in record.items()}
    path.write_text(json.dumps(clean, indent=2, sort_keys=True) + "\n")
    return path


def write_heat_csv(path: str | Path, times, l2_gap, linf_gap, entropy, dissipation) -> Path:
    """Rows ``(t, l2_gap, linf_gap, entropy, dissipation)``; dissipation is empty at t=0."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "l2_gap", "linf_gap", "entropy", "dissipation"])
        for k, t in enumerate(times):
            d = "" if k == 0 else repr(float(dissipation[k - 1]))
            w.writerow([repr(float(t)), repr(float(l2_gap[k])), repr(float(linf_gap[k])),
                        repr(float(entropy[k])), d])
    return path
