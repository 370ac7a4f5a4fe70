import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mobwass import MobilitySpec
from mobwass.oracle import QuadratureError, TwoCellInstance, quadrature, two_cell_exact

QUAD = MobilitySpec.quadratic()


@pytest.mark.parametrize("f,lo,hi,expected", [
    (lambda t: np.ones_like(t), 0.0, 1.0, 1.0),
    (lambda t: 4 * (1 + t ** 2), 0.0, 1.0, 16 / 3),
    (lambda t: (np.log(t) + 1) * t, 0.0, 1.0, 0.25),
    (lambda t: np.exp(t), 1.0, 0.0, 1 - math.e),
    (lambda t: 1 / np.sqrt(t), 0.0, 1.0, 2.0),
])
def test_quadrature_examples(f, lo, hi, expected):
    assert quadrature(f, lo, hi, tol=1e-12) == pytest.approx(expected, rel=1e-10)


def test_quadrature_gives_up():
    with pytest.raises(QuadratureError):
        quadrature(lambda t: np.sin(1 / t) / t ** 2, 1e-6, 1.0, tol=1e-14, max_intervals=50)


def test_two_cell_identical_endpoints():
    assert two_cell_exact(TwoCellInstance((0.3, 0.6), (0.3, 0.6), 0.5, QUAD)) == pytest.approx(0.0, abs=1e-12)


def test_two_cell_swap_equals_reverse():
    fwd = two_cell_exact(TwoCellInstance((0.2, 0.6), (0.6, 0.2), 0.5, QUAD))
    rev = two_cell_exact(TwoCellInstance((0.6, 0.2), (0.2, 0.6), 0.5, QUAD))
    assert fwd == pytest.approx(rev, abs=1e-12)


@pytest.mark.parametrize("r0,r1,width", [((0.6, 0.4), (0.5, 0.5), 0.5),
                                         ((1.0, 0.5), (0.8, 0.7), 0.5),
                                         ((0.2, 0.6), (0.6, 0.2), 0.25)])
def test_two_cell_linear_mobility_closed_form(r0, r1, width):
    # equal cells and h = rho: the face density is the conserved mean, the optimal
    # momentum is constant and the value is sqrt(width / mean) * width * |delta rho|
    inst = TwoCellInstance(r0, r1, width, MobilitySpec.linear(0.0, 2.0), 2.0, 8)
    mean = 0.5 * (r0[0] + r0[1])
    expected = math.sqrt(width / mean) * width * abs(r1[0] - r0[0])
    assert two_cell_exact(inst) == pytest.approx(expected, abs=1e-9)


def test_two_cell_validation():
    with pytest.raises(ValueError):
        two_cell_exact(TwoCellInstance((0.2, 0.6), (0.6, 0.3), 0.5, QUAD))
    with pytest.raises(ValueError):
        two_cell_exact(TwoCellInstance((1.2, 0.6), (0.6, 1.2), 0.5, QUAD))


@settings(max_examples=5, deadline=None)
@given(r=st.floats(0.05, 0.95), s=st.floats(0.05, 0.95), factor=st.floats(1.0, 4.0))
def test_two_cell_monotone_under_domination(r, s, factor):
    mass = r + s
    t = min(0.95, max(0.05, mass - 0.5))
    end = (t, mass - t)
    if not 0.0 <= end[1] <= 1.0:
        return
    weak = two_cell_exact(TwoCellInstance((r, s), end, 0.5, QUAD, 2.0, 6))
    strong = two_cell_exact(TwoCellInstance((r, s), end, 0.5, QUAD.with_scale(factor), 2.0, 6))
    assert strong <= weak + 1e-12
    # scaling h by c scales the p = 2 action by 1/c
    assert strong == pytest.approx(weak / math.sqrt(factor), rel=1e-6, abs=1e-12)
