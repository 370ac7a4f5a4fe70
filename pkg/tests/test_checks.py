import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mobwass import Grid, ReferenceMeasure, total_mass
from mobwass.checks import PropertyResult, equal_mass_family, smooth_density, two_cell_instances


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), d=st.sampled_from([1, 2]),
       lo=st.floats(0.0, 0.4), width=st.floats(0.1, 0.6))
def test_equal_mass_family(seed, d, lo, width):
    hi = lo + width
    ref = ReferenceMeasure.gibbs(Grid.uniform(0, 1, 9, d), lambda *x: sum(x))
    fam = equal_mass_family(ref, np.random.default_rng(seed), 3, lo, hi)
    masses = [total_mass(m) for m in fam]
    assert np.ptp(masses) <= 1e-13
    for m in fam:
        assert m.density.min() >= lo - 1e-14 and m.density.max() <= hi + 1e-14


def test_smooth_density_spans_range():
    g = Grid.uniform(0, 1, 30)
    r = smooth_density(g, np.random.default_rng(0), 0.1, 0.7)
    assert r.min() == pytest.approx(0.1) and r.max() == pytest.approx(0.7)


def test_two_cell_instances_are_balanced():
    for inst in two_cell_instances(np.random.default_rng(0), 10):
        m0, m1 = inst.masses()
        assert m0 == pytest.approx(m1, rel=1e-14)
        assert all(0.0 < v < 1.0 for v in (*inst.rho0, *inst.rho1))
        assert inst.cell_weights[0] != inst.cell_weights[1]


def test_result_serialization():
    r = PropertyResult("x", False, float("inf"), 1e-3, 2, detail={"v": [np.float64(1.0), float("nan")]})
    d = r.to_dict()
    assert d["worst"] == "inf" and d["detail"]["v"] == [1.0, "nan"]
    assert r.line().startswith("FAIL x")
