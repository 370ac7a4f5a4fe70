import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mobwass import (ActionDensity, MobilitySpec, eval_action, eval_conjugate, eval_recession,
                     parabola_minorant, phi_norms, upper_concave_bound)

QUAD = MobilitySpec.quadratic()
MOBILITIES = [
    MobilitySpec.quadratic(),
    MobilitySpec.power(0.5, 0.5),
    MobilitySpec.power(1.0, 0.3, -1.0, 2.0),
    MobilitySpec.linear(0.0, 2.0),
    MobilitySpec.from_function(lambda r: np.minimum(r, 1 - r)),
]
rho_in = st.floats(0.01, 0.99)
vec = st.lists(st.floats(-5, 5), min_size=2, max_size=2).map(np.array)


def test_action_examples():
    phi = ActionDensity(2.0, QUAD)
    assert eval_action(phi, 0.5, 1.0) == pytest.approx(4.0, rel=1e-15)
    assert eval_action(phi, 0.5, 0.0) == 0.0
    assert eval_action(phi, 1.0, 0.1) == math.inf
    assert eval_action(phi, 1.0, 0.0) == 0.0
    assert eval_action(phi, 1.2, 0.0) == math.inf


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_action_zero_momentum(p):
    assert eval_action(ActionDensity(p, MobilitySpec.power(0.5, 0.5)), 0.5, np.zeros(3)) == 0.0


def test_conjugate_examples():
    phi = ActionDensity(2.0, QUAD)
    assert eval_conjugate(phi, 0.5, np.array([2.0, 0.0])) == pytest.approx(1.0)
    assert eval_conjugate(phi, 0.5, np.zeros(2)) == 0.0
    assert eval_conjugate(phi, 1.5, 1.0) == -math.inf


def test_recession_examples():
    phi = ActionDensity(2.0, QUAD)
    assert eval_recession(phi, 0.0, 0.0) == 0.0
    assert eval_recession(phi, 0.1, 0.0) == math.inf
    assert eval_recession(phi, 0.0, np.array([0.0, 1.0])) == math.inf


def test_phi_norms_examples():
    phi = ActionDensity(2.0, QUAD)
    wn, zn = phi_norms(phi, 0.5, np.array([1.0, 0.0]), np.array([1.0, 0.0]))
    assert (wn, zn) == pytest.approx((2.0, 0.5))
    assert phi_norms(phi, 0.5, np.zeros(2), np.array([1.0, 0.0]))[0] == 0.0
    with pytest.raises(ValueError):
        phi_norms(phi, 1.0, 1.0, 1.0)


def test_endpoint_convention():
    assert QUAD(0.0) == 0.0 and QUAD(1.0) == 0.0
    lin = MobilitySpec.linear(0.0, 2.0)
    assert lin(0.0) == 0.0 and lin(2.0) == 2.0
    assert QUAD(1.5) == -math.inf


def test_upper_concave_bound_quadratic():
    hb = upper_concave_bound(ActionDensity(2.0, QUAD))
    r = np.linspace(0, 1, 101)
    np.testing.assert_allclose(hb(r), 4 * r * (1 - r), atol=1e-15)
    assert hb.max_value() == pytest.approx(1.0)


@pytest.mark.parametrize("h", MOBILITIES[:4])
@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_upper_bound_inequality(h, p):
    # the conjugate on the dual unit sphere at the midpoint stays below hbar
    phi = ActionDensity(p, h)
    hb = upper_concave_bound(phi)
    mid = h.midpoint
    for r in np.linspace(h.a, h.b, 41)[1:-1]:
        z = 1.0 / float(h(mid)) ** (1 / phi.q)   # ||z||_* = 1 at the midpoint
        assert eval_conjugate(phi, r, z) <= hb(r) + 1e-12


def test_parabola_minorant_examples():
    A, B = parabola_minorant(QUAD)
    assert (A, B) == pytest.approx((1.0, 1.0), rel=1e-8)
    for h in (MOBILITIES[4], MobilitySpec.power(0.5, 0.5)):
        A, B = parabola_minorant(h)
        r = np.linspace(0, 1, 5001)
        assert np.all(A * r * (1 / B - B * r) <= h(r) + 1e-14)


def test_mobility_validation():
    with pytest.raises(ValueError):
        MobilitySpec.power(1.5, 0.5)
    with pytest.raises(ValueError):
        MobilitySpec.tabulated([0.0, 1.0, 3.0, 1.0, 0.0, 2.0])
    with pytest.raises(ValueError):
        MobilitySpec.quadratic(1.0, 0.0)
    with pytest.raises(ValueError):
        ActionDensity(1.0, QUAD)


@pytest.mark.parametrize("cfg", [
    {"kind": "quadratic", "a": 0, "b": 1},
    {"kind": "power", "a": -1, "b": 1, "alpha": 0.5, "beta": 0.25},
    {"kind": "linear", "a": 0, "b": 2},
])
def test_config_round_trip(cfg):
    h = MobilitySpec.from_config(cfg)
    assert MobilitySpec.from_config(h.to_config()) == h
    with pytest.raises(ValueError):
        MobilitySpec.from_config({**cfg, "kind": "cubic"})


@pytest.mark.parametrize("h", MOBILITIES)
def test_builtins_are_concave(h):
    assert h.check_concave()


@pytest.mark.parametrize("h", MOBILITIES[:4])
def test_derivatives_match_differences(h):
    r = np.linspace(h.a, h.b, 23)[2:-2]
    e = 1e-6
    np.testing.assert_allclose(h.derivative(r), (h(r + e) - h(r - e)) / (2 * e), rtol=1e-6, atol=1e-8)
    np.testing.assert_allclose(h.second_derivative(r),
                               (h.derivative(r + e) - h.derivative(r - e)) / (2 * e),
                               rtol=1e-5, atol=1e-6)


@settings(max_examples=200, deadline=None)
@given(rho=rho_in, w=vec, p=st.sampled_from([1.5, 2.0, 3.0]),
       lam=st.one_of(st.just(0.0), st.floats(1e-3, 10), st.floats(-10, -1e-3)))
def test_p_homogeneity(rho, w, lam, p):
    phi = ActionDensity(p, MobilitySpec.power(0.5, 0.5))
    lhs = eval_action(phi, rho, lam * w)
    rhs = abs(lam) ** p * eval_action(phi, rho, w)
    assert lhs == pytest.approx(rhs, rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(r1=rho_in, r2=rho_in, w1=vec, w2=vec, p=st.sampled_from([1.5, 2.0, 3.0]),
       h=st.sampled_from(MOBILITIES[:2] + MOBILITIES[4:]))
def test_joint_convexity(r1, r2, w1, w2, p, h):
    phi = ActionDensity(p, h)
    mid = eval_action(phi, 0.5 * (r1 + r2), 0.5 * (w1 + w2))
    avg = 0.5 * (eval_action(phi, r1, w1) + eval_action(phi, r2, w2))
    assert mid <= avg * (1 + 1e-10) + 1e-10


@settings(max_examples=100, deadline=None)
@given(rho=rho_in, w=vec, p=st.sampled_from([1.5, 2.0, 3.0]))
def test_fenchel_duality(rho, w, p):
    phi = ActionDensity(p, QUAD)
    q = phi.q
    lhs = eval_action(phi, rho, w) / p
    # Young inequality for random z and near-equality at the maximizer along w
    rng = np.random.default_rng(0)
    for z in rng.normal(size=(20, 2)) * 3:
        assert lhs >= z @ w - eval_conjugate(phi, rho, z) / q - 1e-9 * (1 + abs(lhs))
    wn = np.linalg.norm(w)
    if wn == 0:
        return
    # refine the maximizer over radial multiples of w
    lo, hi = 0.0, 10 * (wn / float(QUAD(rho))) ** (p - 1) + 1
    best = -math.inf
    for _ in range(3):
        ts = np.linspace(lo, hi, 2001)
        vals = ts * wn - float(QUAD(rho)) * ts ** q / q
        k = int(np.argmax(vals))
        best = max(best, vals[k])
        span = ts[1] - ts[0]
        lo, hi = max(0.0, ts[k] - span), ts[k] + span
    assert lhs - best <= 1e-4 * max(1.0, lhs)


@settings(max_examples=50, deadline=None)
@given(rho=rho_in, w=vec, p=st.sampled_from([1.5, 2.0, 3.0]))
def test_norm_duality(rho, w, p):
    phi = ActionDensity(p, MobilitySpec.power(0.5, 0.5))
    wn = phi_norms(phi, rho, w, w)[0]
    angles = np.linspace(0, 2 * np.pi, 721)
    zs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    zstar = np.array([phi_norms(phi, rho, w, z)[1] for z in zs])
    sup = float(np.max((zs @ w) / zstar))
    assert sup == pytest.approx(wn, rel=1e-3, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(rho=rho_in, w=vec, factor=st.floats(1.0, 3.0))
def test_larger_mobility_lowers_action(rho, w, factor):
    phi = ActionDensity(2.0, QUAD)
    big = ActionDensity(2.0, QUAD.with_scale(factor))
    assert eval_action(big, rho, w) <= eval_action(phi, rho, w) * (1 + 1e-12)
