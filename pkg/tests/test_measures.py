import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mobwass import (Grid, GridMeasure, ReferenceMeasure, generalized_moment, mollify,
                     push_forward_affine, total_mass)
from mobwass.measures import bump_kernel, sample_linear, sample_piecewise_constant


def test_total_mass_examples():
    ref = ReferenceMeasure.lebesgue(Grid.uniform(0, 1, 10))
    assert total_mass(GridMeasure.constant(ref, 0.5)) == pytest.approx(0.5, rel=1e-15)
    assert total_mass(GridMeasure.constant(ref, -0.2)) == pytest.approx(-0.2, rel=1e-15)


@pytest.mark.parametrize("r", [-2.0, 0.5, 1.0, 3.0])
def test_moment_inside_unit_ball(r):
    ref = ReferenceMeasure.lebesgue(Grid.uniform(-1, 1, 40))
    assert generalized_moment(GridMeasure.constant(ref, 0.5), r) == pytest.approx(1.0)


def test_moment_r0_is_total_variation():
    ref = ReferenceMeasure.lebesgue(Grid.uniform(-3, 3, 30))
    rho = np.linspace(-1, 1, 30)
    mu = GridMeasure(ref, rho)
    assert generalized_moment(mu, 0.0) == pytest.approx(float(np.sum(np.abs(mu.masses))))


def test_moment_outside_ball():
    # uniform on [1, 3]: mass 2 * int_1^3 x^2 dx / 2 with density 1
    ref = ReferenceMeasure.lebesgue(Grid.uniform(1, 3, 2000))
    mu = GridMeasure.constant(ref, 1.0)
    assert generalized_moment(mu, 2.0) == pytest.approx(26 / 3, rel=1e-6)


@pytest.mark.parametrize("q", [1.5, 2.0, 3.0])
def test_reference_moment_finite_on_boxes(q):
    ref = ReferenceMeasure.lebesgue(Grid.uniform(-4, 4, 8, 2))
    assert np.isfinite(generalized_moment(ref, -q))


def test_push_forward_examples():
    ref = ReferenceMeasure.lebesgue(Grid.uniform(0, 1, 10))
    mu = GridMeasure.constant(ref, 0.8)
    img = push_forward_affine(mu, 2.0)
    assert img.grid.bounds == ((0.0, 2.0),)
    np.testing.assert_allclose(img.density, 0.4)
    same = push_forward_affine(mu, 1.0)
    np.testing.assert_array_equal(same.density, mu.density)
    assert same.grid == mu.grid


def test_push_forward_onto_target_grid():
    src = ReferenceMeasure.lebesgue(Grid.uniform(-1, 1, 20))
    x = src.grid.centers(0)
    mu = GridMeasure(src, np.where(np.abs(x) < 0.5, 1.0, 0.0))
    tgt = Grid.uniform(-2, 2, 40)
    img = push_forward_affine(mu, 2.0, 0.0, tgt)
    assert total_mass(img) == pytest.approx(total_mass(mu), rel=1e-12)
    assert img.density.max() == pytest.approx(0.5)
    with pytest.raises(ValueError):
        push_forward_affine(mu, 3.0, 0.0, Grid.uniform(-1, 1, 20))


@settings(max_examples=50, deadline=None)
@given(scale=st.one_of(st.floats(0.1, 5), st.floats(-5, -0.1)),
       shift=st.lists(st.floats(-3, 3), min_size=2, max_size=2), seed=st.integers(0, 2 ** 32 - 1))
def test_push_forward_mass_invariance(scale, shift, seed):
    ref = ReferenceMeasure.lebesgue(Grid(((0, 1), (-1, 2)), (6, 5)))
    mu = GridMeasure(ref, np.random.default_rng(seed).uniform(0, 1, (6, 5)))
    img = push_forward_affine(mu, scale, shift)
    assert total_mass(img) == pytest.approx(total_mass(mu), rel=1e-12)


def test_mollify_constant_unchanged():
    ref = ReferenceMeasure.lebesgue(Grid.uniform(0, 1, 50))
    mu = GridMeasure.constant(ref, 0.3)
    np.testing.assert_allclose(mollify(mu, 0.1).density, 0.3, rtol=1e-14)


def test_mollify_step_max_does_not_increase():
    ref = ReferenceMeasure.lebesgue(Grid.uniform(0, 1, 100))
    x = ref.grid.centers(0)
    mu = GridMeasure(ref, np.where(x < 0.5, 1.0, 0.0))
    out = mollify(mu, 0.1)
    # direct convolution oracle with mirror padding
    k = bump_kernel(ref.grid, 0.1)
    half = k.size // 2
    padded = np.concatenate([mu.density[:half][::-1], mu.density, mu.density[-half:][::-1]])
    direct = np.array([padded[i:i + k.size] @ k for i in range(100)])
    np.testing.assert_allclose(out.density, direct, atol=1e-14)
    assert out.density.max() <= 1.0 + 1e-15
    assert total_mass(out) == pytest.approx(total_mass(mu), rel=1e-13)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), eps=st.floats(0.05, 0.3), d=st.sampled_from([1, 2]))
def test_mollify_range_contraction(seed, eps, d):
    ref = ReferenceMeasure.lebesgue(Grid.uniform(0, 1, 16, d))
    rho = np.random.default_rng(seed).uniform(-1, 2, ref.grid.shape)
    out = mollify(GridMeasure(ref, rho), eps).density
    assert out.min() >= rho.min() - 1e-12 and out.max() <= rho.max() + 1e-12


def test_mollify_rejects_bad_eps():
    ref = ReferenceMeasure.lebesgue(Grid.uniform(0, 1, 10))
    mu = GridMeasure.constant(ref, 0.3)
    with pytest.raises(ValueError):
        mollify(mu, 0.0)
    with pytest.raises(ValueError):
        mollify(mu, 2.0)


def test_sampling():
    ref = ReferenceMeasure.lebesgue(Grid.uniform(0, 1, 4))
    mu = GridMeasure(ref, [1.0, 2.0, 3.0, 4.0])
    pts = [np.array([0.1, 0.3, 0.625, 1.5])]
    np.testing.assert_allclose(sample_piecewise_constant(mu, pts), [1, 2, 3, 0])
    np.testing.assert_allclose(sample_linear(mu, [np.array([0.125, 0.25, 0.5])]), [1.0, 1.5, 2.5])


def test_reference_kinds():
    g = Grid.uniform(0, 1, 4, 2)
    assert ReferenceMeasure.lebesgue(g).is_uniform
    mask = np.ones((4, 4), bool)
    mask[0, 0] = False
    m = ReferenceMeasure.masked(g, mask)
    assert m.kind == "masked-lebesgue" and m.weights[0, 0] == 0
    gb = ReferenceMeasure.gibbs(g, lambda x, y: x + y)
    assert gb.kind == "gibbs"
    assert gb.weights[1, 2] == pytest.approx(g.cell_volume * np.exp(-(0.375 + 0.625)))
    # densities on zero-weight cells are dropped
    assert GridMeasure.constant(m, 1.0).density[0, 0] == 0.0


@pytest.mark.parametrize("bad", [
    dict(bounds=((0, 1),), cells=(0,)),
    dict(bounds=((1, 0),), cells=(3,)),
    dict(bounds=((0, 1), (0, 1)), cells=(3,)),
])
def test_grid_validation(bad):
    with pytest.raises(ValueError):
        Grid(**bad)


def test_measure_validation():
    ref = ReferenceMeasure.lebesgue(Grid.uniform(0, 1, 3))
    with pytest.raises(ValueError):
        GridMeasure(ref, [1.0, 2.0])
    with pytest.raises(ValueError):
        GridMeasure(ref, [1.0, np.nan, 2.0])
    other = ReferenceMeasure.lebesgue(Grid.uniform(0, 2, 3))
    with pytest.raises(ValueError):
        GridMeasure.constant(ref, 1.0) + GridMeasure.constant(other, 1.0)
