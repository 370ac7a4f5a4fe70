import csv
import json

import numpy as np
import pytest

from mobwass import ActionDensity, Grid, GridMeasure, MobilitySpec, ReferenceMeasure, action_integral
from mobwass.dynamics import static_curve
from mobwass.io import (json_number, measure_to_csv, read_curve, read_measure, write_curve,
                        write_diagnostics, write_heat_csv, write_measure)
from mobwass.solver import SolverConfig, compute_distance

PHI = ActionDensity(2.0, MobilitySpec.quadratic())


@pytest.mark.parametrize("ref", [
    ReferenceMeasure.lebesgue(Grid(((0, 1), (-1, 2), (0, 0.5)), (3, 4, 2))),
    ReferenceMeasure.gibbs(Grid(((0, 1), (0, 2)), (5, 3)), lambda x, y: x - y),
])
def test_measure_round_trip(tmp_path, ref):
    rho = np.random.default_rng(0).uniform(0, 1, ref.grid.shape)
    path = write_measure(tmp_path / "mu.json", GridMeasure(ref, rho))
    head = json.loads(path.read_text())
    assert head["order"] == "row-major" and head["data"] == "mu.f64"
    assert head["cells"] == list(ref.grid.cells) and head["d"] == ref.grid.d
    raw = np.fromfile(tmp_path / "mu.f64", dtype="<f8")
    np.testing.assert_array_equal(raw, rho.ravel(order="C"))
    back = read_measure(path)
    assert back.reference.same_as(ref) and back.reference.kind == ref.kind
    np.testing.assert_array_equal(back.density, rho)


def test_read_measure_errors(tmp_path):
    ref = ReferenceMeasure.lebesgue(Grid.uniform(0, 1, 4))
    path = write_measure(tmp_path / "m.json", GridMeasure.constant(ref, 0.5))
    np.zeros(3).tofile(tmp_path / "m.f64")
    with pytest.raises(ValueError):
        read_measure(path)
    head = json.loads(path.read_text())
    head["order"] = "column-major"
    path.write_text(json.dumps(head))
    with pytest.raises(ValueError):
        read_measure(path)
    (tmp_path / "g.json").write_text(json.dumps({"d": 1, "bounds": [[0, 1]], "cells": [2],
                                                 "reference": "gibbs", "data": "m.f64"}))
    with pytest.raises(ValueError):
        read_measure(tmp_path / "g.json")


def test_measure_csv(tmp_path):
    ref = ReferenceMeasure.lebesgue(Grid(((0, 1), (0, 2)), (2, 2)))
    measure_to_csv(tmp_path / "m.csv", GridMeasure(ref, [[1, 2], [3, 4]]))
    rows = list(csv.reader(open(tmp_path / "m.csv")))
    assert rows[0] == ["x", "y", "rho"]
    assert [float(v) for v in rows[2]] == [0.25, 1.5, 2.0]
    ref3 = ReferenceMeasure.lebesgue(Grid.uniform(0, 1, 2, 3))
    with pytest.raises(ValueError):
        measure_to_csv(tmp_path / "x.csv", GridMeasure.constant(ref3, 1.0))


def test_curve_round_trip(tmp_path):
    ref = ReferenceMeasure.lebesgue(Grid.uniform(0, 1, 8))
    x = ref.grid.centers(0)
    mu0 = GridMeasure(ref, 0.5 + 0.3 * np.cos(np.pi * x))
    mu1 = GridMeasure(ref, 0.5 - 0.3 * np.cos(np.pi * x))
    res = compute_distance(mu0, mu1, PHI, SolverConfig(steps=6, tol=1e-7))
    manifest = write_curve(tmp_path / "geo", res.geodesic, PHI)
    back = read_curve(manifest)
    np.testing.assert_array_equal(back.density, res.geodesic.density)
    np.testing.assert_array_equal(back.momentum[0], res.geodesic.momentum[0])
    assert action_integral(back, PHI) == action_integral(res.geodesic, PHI)
    rows = list(csv.reader(open(tmp_path / "geo" / "timeseries.csv")))
    assert rows[0] == ["t", "mass", "step_action"] and len(rows) == 8
    assert rows[1][2] == ""
    total = sum(float(r[2]) for r in rows[2:])
    assert total == pytest.approx(action_integral(res.geodesic, PHI), rel=1e-12)


def test_curve_timeseries_without_action(tmp_path):
    ref = ReferenceMeasure.lebesgue(Grid.uniform(0, 1, 3))
    write_curve(tmp_path, static_curve(GridMeasure.constant(ref, 0.2), 1.0, 2))
    rows = list(csv.reader(open(tmp_path / "timeseries.csv")))
    assert all(r[2] == "" for r in rows[1:])


def test_diagnostics_are_deterministic(tmp_path):
    rec = {"status": "infeasible", "distance": float("inf"), "iterations": 0, "residual": float("nan")}
    p1 = write_diagnostics(tmp_path / "a.json", rec)
    p2 = write_diagnostics(tmp_path / "b.json", dict(reversed(list(rec.items()))))
    assert p1.read_bytes() == p2.read_bytes()
    data = json.loads(p1.read_text())
    assert data["distance"] == "inf" and data["residual"] == "nan"
    assert json_number(-float("inf")) == "-inf" and json_number(2) == 2.0


def test_heat_csv(tmp_path):
    write_heat_csv(tmp_path / "h.csv", [0.0, 0.1], [1.0, 0.5], [2.0, 1.0], [0.3, 0.2], [0.7])
    rows = list(csv.reader(open(tmp_path / "h.csv")))
    assert rows[0] == ["t", "l2_gap", "linf_gap", "entropy", "dissipation"]
    assert rows[1][4] == "" and float(rows[2][4]) == 0.7
