import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mobwass import Grid, ReferenceMeasure
from mobwass.fv import FaceSet


def _gibbs(shape, seed):
    g = Grid(tuple((0.0, 1.0 + i) for i in range(len(shape))), shape)
    V = np.random.default_rng(seed).uniform(-1, 1, shape)
    return ReferenceMeasure.gibbs(g, V)


@pytest.mark.parametrize("shape", [(5,), (4, 3), (3, 2, 4)])
def test_face_counts(shape):
    faces = FaceSet(ReferenceMeasure.lebesgue(Grid(tuple((0, 1) for _ in shape), shape)))
    n = int(np.prod(shape))
    assert faces.n == sum(n - n // s for s in shape)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), shape=st.sampled_from([(6,), (4, 5), (3, 3, 2)]))
def test_divergence_conserves_mass(seed, shape):
    ref = _gibbs(shape, seed)
    faces = FaceSet(ref)
    w = np.random.default_rng(seed + 1).normal(size=faces.n)
    assert abs(ref.weights.ravel() @ (faces.divergence @ w)) <= 1e-12 * np.abs(w).sum()


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), shape=st.sampled_from([(6,), (4, 5)]))
def test_divergence_is_minus_adjoint_of_gradient(seed, shape):
    # sum_i gamma_i u_i (D w)_i = -sum_f gface_f w_f (G u)_f
    ref = _gibbs(shape, seed)
    faces = FaceSet(ref)
    rng = np.random.default_rng(seed)
    u, w = rng.normal(size=ref.grid.size), rng.normal(size=faces.n)
    lhs = ref.weights.ravel() @ (u * (faces.divergence @ w))
    rhs = -(faces.weight * w) @ (faces.gradient @ u)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)


def test_laplacian_negative_semidefinite_and_kills_constants():
    ref = _gibbs((5, 4), 3)
    faces = FaceSet(ref)
    L = faces.laplacian()
    np.testing.assert_allclose(L @ np.ones(20), 0, atol=1e-12)
    u = np.random.default_rng(0).normal(size=20)
    assert (ref.weights.ravel() * u) @ (L @ u) <= 0


def test_masked_cells_have_no_faces():
    g = Grid.uniform(0, 1, 3, 2)
    mask = np.ones((3, 3), bool)
    mask[1, 1] = False
    faces = FaceSet(ReferenceMeasure.masked(g, mask))
    assert faces.n == 12 - 4
    assert not np.any((faces.left == 4) | (faces.right == 4))


def test_axes_round_trip():
    faces = FaceSet(ReferenceMeasure.lebesgue(Grid(((0, 1), (0, 2)), (3, 4))))
    wf = np.arange(faces.n, dtype=float)
    arrays = faces.to_axes(wf)
    assert [a.shape for a in arrays] == [(2, 4), (3, 3)]
    np.testing.assert_array_equal(faces.from_axes(arrays), wf)
    assert faces.inactive_flux(arrays) == 0.0
