import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from devreg import geometry
from devreg.geometry import GeometryError, flat, landmarks, sphere2

from conftest import (
    christoffel_from_dg,
    finite_difference_metric_derivative,
    random_landmark_coords,
    random_point,
)

ALL_MODELS = [flat(3), sphere2(), landmarks(2, 0.5)]


def test_flat_cometric_is_identity():
    m = flat(4)
    q = np.array([0.3, -1.2, 0.0, 2.0])
    assert np.array_equal(geometry.cometric(m, q), np.eye(4))
    assert np.array_equal(geometry.metric(m, q), np.eye(4))


def test_single_landmark_cometric_is_identity():
    m = landmarks(1, 0.5)
    q = np.array([0.7, -0.2])
    np.testing.assert_allclose(geometry.cometric(m, q), np.eye(2), atol=1e-15)


def test_two_landmark_cometric_matches_hand_kernel():
    # positions (0,0) and (1,0), sigma = 0.5: off-diagonal blocks exp(-2) I_2
    m = landmarks(2, 0.5)
    q = np.array([0.0, 0.0, 1.0, 0.0])
    k = geometry.cometric(m, q)
    expected = np.eye(4)
    expected[0, 2] = expected[2, 0] = np.exp(-2.0)
    expected[1, 3] = expected[3, 1] = np.exp(-2.0)
    np.testing.assert_allclose(k, expected, atol=1e-14)


def test_two_landmark_metric_is_inverse_of_cometric():
    m = landmarks(2, 0.5)
    q = np.array([0.0, 0.0, 1.0, 0.0])
    np.testing.assert_allclose(
        geometry.metric(m, q), np.linalg.inv(geometry.cometric(m, q)), atol=1e-12
    )


def test_sphere_metric_at_equator():
    np.testing.assert_allclose(
        geometry.metric(sphere2(), np.array([np.pi / 2, 0.4])), np.eye(2), atol=1e-15
    )
    np.testing.assert_allclose(
        geometry.cometric(sphere2(), np.array([np.pi / 2, 0.4])), np.eye(2), atol=1e-15
    )


@pytest.mark.parametrize("model", ALL_MODELS, ids=lambda m: m.kind)
def test_metric_times_cometric_is_identity(model, rng):
    for _ in range(100):
        q = random_point(rng, model)
        prod = geometry.metric(model, q) @ geometry.cometric(model, q)
        np.testing.assert_allclose(prod, np.eye(model.d), atol=1e-8)


def test_flat_metric_derivative_is_zero():
    m = flat(3)
    assert np.array_equal(geometry.metric_derivative(m, np.zeros(3)), np.zeros((3, 3, 3)))


def test_sphere_metric_derivative_analytic():
    q = np.array([np.pi / 4, 0.3])
    dg = geometry.metric_derivative(sphere2(), q)
    # d_theta g_phiphi = 2 sin(theta) cos(theta) = 1 at theta = pi/4
    assert dg[0, 1, 1] == pytest.approx(1.0, abs=1e-14)
    mask = np.zeros((2, 2, 2), dtype=bool)
    mask[0, 1, 1] = True
    assert np.all(dg[~mask] == 0)


@pytest.mark.parametrize("model", ALL_MODELS, ids=lambda m: m.kind)
def test_metric_derivative_matches_finite_differences(model, rng):
    for _ in range(5):
        q = random_point(rng, model)
        dg = geometry.metric_derivative(model, q)
        dg_fd = finite_difference_metric_derivative(model, q)
        np.testing.assert_allclose(dg, dg_fd, atol=1e-4)


def test_metric_derivative_symmetry(rng):
    m = landmarks(3, 0.5)
    q = random_point(rng, m)
    dg = geometry.metric_derivative(m, q)
    np.testing.assert_allclose(dg, np.swapaxes(dg, 1, 2), atol=1e-13)


def test_flat_christoffel_is_zero():
    assert np.array_equal(geometry.christoffel(flat(2), np.ones(2)), np.zeros((2, 2, 2)))


def test_sphere_christoffel_closed_forms():
    theta = np.pi / 4
    gam = geometry.christoffel(sphere2(), np.array([theta, 1.1]))
    assert gam[0, 1, 1] == pytest.approx(-np.sin(theta) * np.cos(theta), abs=1e-10)
    assert gam[0, 1, 1] == pytest.approx(-0.5, abs=1e-10)
    cot = np.cos(theta) / np.sin(theta)
    assert gam[1, 0, 1] == pytest.approx(cot, abs=1e-10)
    assert gam[1, 1, 0] == pytest.approx(cot, abs=1e-10)
    assert gam[0, 0, 0] == gam[1, 1, 1] == gam[0, 0, 1] == 0.0


@pytest.mark.parametrize("model", ALL_MODELS, ids=lambda m: m.kind)
def test_christoffel_matches_finite_difference_assembly(model, rng):
    for _ in range(5):
        q = random_point(rng, model)
        gam = geometry.christoffel(model, q)
        dg_fd = finite_difference_metric_derivative(model, q)
        gam_fd = christoffel_from_dg(geometry.cometric(model, q), dg_fd)
        np.testing.assert_allclose(gam, gam_fd, atol=1e-4)


def test_christoffel_symmetric_in_lower_indices(rng):
    for model in ALL_MODELS:
        for _ in range(20):
            q = random_point(rng, model)
            gam = geometry.christoffel(model, q)
            np.testing.assert_allclose(gam, np.swapaxes(gam, 1, 2), atol=1e-12)


def test_landmark_metric_positive_definite(rng):
    m = landmarks(4, 0.5)
    for _ in range(20):
        q = random_landmark_coords(rng, 4, min_sep=1e-3 * 0.5 * 1.01)
        eig = np.linalg.eigvalsh(geometry.metric(m, q))
        assert eig.min() > 0


def test_coincident_landmarks_raise():
    m = landmarks(2, 0.5)
    q = np.array([0.1, 0.2, 0.1, 0.2])
    with pytest.raises(GeometryError):
        geometry.metric(m, q)


def test_embed_identity_for_flat_and_landmarks():
    q = np.array([1.0, 2.0, 3.0, 4.0])
    assert np.array_equal(geometry.embed(landmarks(2, 0.5), q), q)
    assert np.array_equal(geometry.embed(flat(4), q), q)


def test_embed_sphere_values():
    np.testing.assert_allclose(
        geometry.embed(sphere2(), np.array([np.pi / 2, 0.0])), [1.0, 0.0, 0.0], atol=1e-15
    )
    np.testing.assert_allclose(
        geometry.embed(sphere2(), np.array([np.pi / 4, np.pi / 2])),
        [0.0, np.sqrt(2) / 2, np.sqrt(2) / 2],
        atol=1e-15,
    )


@pytest.mark.parametrize("model", ALL_MODELS, ids=lambda m: m.kind)
def test_embed_differential_full_rank_and_consistent(model, rng):
    q = random_point(rng, model)
    dphi = geometry.embed_differential(model, q)
    assert dphi.shape == (model.k, model.d)
    assert np.linalg.matrix_rank(dphi) == model.d
    h = 1e-6
    for i in range(model.d):
        e = np.zeros(model.d)
        e[i] = h
        fd = (geometry.embed(model, q + e) - geometry.embed(model, q - e)) / (2 * h)
        np.testing.assert_allclose(dphi[:, i], fd, atol=1e-8)


def test_sphere_pole_exclusion():
    with pytest.raises(GeometryError):
        geometry.metric(sphere2(), np.array([1e-5, 0.0]))
    with pytest.raises(GeometryError):
        geometry.metric(sphere2(), np.array([np.pi, 0.0]))


def test_batched_matches_single(rng):
    m = landmarks(2, 0.5)
    qs = np.stack([random_point(rng, m) for _ in range(7)])
    batched = geometry.christoffel(m, qs)
    for b in range(7):
        np.testing.assert_allclose(batched[b], geometry.christoffel(m, qs[b]), atol=1e-14)


def test_chart_from_ambient_sphere_roundtrip(rng):
    m = sphere2()
    for _ in range(10):
        q = random_point(rng, m)
        y = geometry.embed(m, q)
        q2 = geometry.chart_from_ambient(m, y)
        np.testing.assert_allclose(geometry.embed(m, q2), y, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(
    x0=st.floats(-2, 2),
    y0=st.floats(-2, 2),
    dx=st.floats(0.2, 3),
    dy=st.floats(0.2, 3),
)
def test_two_landmark_christoffel_symmetry_property(x0, y0, dx, dy):
    m = landmarks(2, 0.5)
    q = np.array([x0, y0, x0 + dx, y0 + dy])
    gam = geometry.christoffel(m, q)
    np.testing.assert_allclose(gam, np.swapaxes(gam, 1, 2), atol=1e-12)


def test_model_config_roundtrip():
    for model in ALL_MODELS:
        assert geometry.model_from_config(model.to_config()) == model
    with pytest.raises(GeometryError):
        geometry.model_from_config({"kind": "torus"})
