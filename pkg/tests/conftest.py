import numpy as np
import pytest

from devreg import geometry


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


def random_landmark_coords(rng, num_landmarks, spread=1.0, min_sep=0.15):
    """Random landmark configuration with a minimum pairwise separation."""
    while True:
        pts = rng.uniform(-spread, spread, size=(num_landmarks, 2))
        diff = pts[:, None, :] - pts[None, :, :]
        dist = np.sqrt((diff**2).sum(-1)) + np.eye(num_landmarks)
        if dist.min() > min_sep:
            return pts.reshape(-1)


def random_point(rng, model):
    if model.kind == "flat":
        return rng.normal(size=model.d)
    if model.kind == "sphere2":
        return np.array([rng.uniform(0.3, np.pi - 0.3), rng.uniform(-np.pi, np.pi)])
    return random_landmark_coords(rng, model.num_landmarks)


def finite_difference_metric_derivative(model, q, h=1e-5):
    """Independent oracle: central differences of the metric tensor."""
    d = model.d
    out = np.zeros((d, d, d))
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        out[i] = (geometry.metric(model, q + e) - geometry.metric(model, q - e)) / (2 * h)
    return out


def christoffel_from_dg(g_inv, dg):
    """Independent oracle: assemble Gamma^k_ij = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij)
    with explicit index loops."""
    d = g_inv.shape[0]
    gamma = np.zeros((d, d, d))
    for k in range(d):
        for i in range(d):
            for j in range(d):
                acc = 0.0
                for l in range(d):
                    acc += g_inv[k, l] * (dg[i, j, l] + dg[j, i, l] - dg[l, i, j])
                gamma[k, i, j] = 0.5 * acc
    return gamma
