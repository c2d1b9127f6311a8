"""Manifold models: flat space, the 2-sphere, and planar landmark configurations.

Each model exposes chart-level Riemannian data: the metric ``g_ij``, the
cometric ``g^ij``, the metric derivative ``dg[i][j][l] = d g_jl / d x^i``, and
the Levi-Civita Christoffel symbols

    Gamma^k_ij = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij).

All functions accept coordinates of shape ``(..., d)`` and return tensors with
matching leading (batch) axes; single points are the unbatched special case.

The landmark model is the planar LDDMM landmark space: a point stacks
``n_l`` landmark positions ``(x_1^1, x_1^2, ..., x_nl^1, x_nl^2)``, the
cometric is the Gaussian-kernel block matrix ``K`` with 2x2 blocks
``exp(-|x_i - x_j|^2 / (2 sigma^2)) * I_2``, and the metric is ``K^{-1}``.
Its derivative uses the identity ``d(K^{-1}) = -K^{-1} (dK) K^{-1}``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Condition-number cap on the landmark kernel matrix before the geometry is
# treated as singular (two landmarks numerically coincident).
COND_CAP = 1e12
# Pole-exclusion margin for the sphere chart, in radians.
POLE_MARGIN = 1e-3


class GeometryError(ValueError):
    """Invalid point or degenerate geometry (singular metric, pole chart exit)."""


@dataclass(frozen=True)
class ManifoldModel:
    """Geometry configuration: which manifold, and its parameters.

    kind            one of "flat", "sphere2", "landmarks"
    intrinsic_dim   chart dimension d
    ambient_dim     embedding dimension k (>= d)
    num_landmarks   landmark count n_l (landmarks only; d = k = 2 n_l)
    kernel_sigma    Gaussian kernel width (landmarks only)
    """

    kind: str
    intrinsic_dim: int
    ambient_dim: int
    num_landmarks: int = 0
    kernel_sigma: float = 0.0

    def __post_init__(self):
        if self.kind not in ("flat", "sphere2", "landmarks"):
            raise GeometryError(f"unknown manifold kind {self.kind!r}")
        if self.kind == "flat" and self.intrinsic_dim != self.ambient_dim:
            raise GeometryError("flat model requires d == k")
        if self.kind == "sphere2" and (self.intrinsic_dim, self.ambient_dim) != (2, 3):
            raise GeometryError("sphere2 model requires d = 2, k = 3")
        if self.kind == "landmarks":
            if self.num_landmarks < 1:
                raise GeometryError("landmarks model requires num_landmarks >= 1")
            if self.intrinsic_dim != 2 * self.num_landmarks or self.ambient_dim != self.intrinsic_dim:
                raise GeometryError("landmarks model requires d = k = 2 * num_landmarks")
            if not self.kernel_sigma > 0:
                raise GeometryError("kernel_sigma must be positive")

    @property
    def d(self) -> int:
        return self.intrinsic_dim

    @property
    def k(self) -> int:
        return self.ambient_dim

    def to_config(self) -> dict:
        cfg = {"kind": self.kind}
        if self.kind == "flat":
            cfg["dim"] = self.intrinsic_dim
        elif self.kind == "landmarks":
            cfg["num_landmarks"] = self.num_landmarks
            cfg["kernel_sigma"] = self.kernel_sigma
        return cfg


def flat(dim: int) -> ManifoldModel:
    return ManifoldModel("flat", dim, dim)


def sphere2() -> ManifoldModel:
    return ManifoldModel("sphere2", 2, 3)


def landmarks(num_landmarks: int, kernel_sigma: float) -> ManifoldModel:
    d = 2 * num_landmarks
    return ManifoldModel("landmarks", d, d, num_landmarks, float(kernel_sigma))


def model_from_config(cfg: dict) -> ManifoldModel:
    kind = cfg.get("kind")
    if kind == "flat":
        return flat(int(cfg["dim"]))
    if kind == "sphere2":
        return sphere2()
    if kind == "landmarks":
        return landmarks(int(cfg["num_landmarks"]), float(cfg["kernel_sigma"]))
    raise GeometryError(f"unknown manifold kind {kind!r}")


@dataclass(frozen=True)
class MetricTensors:
    """Metric ``g``, cometric ``g_inv``, and derivative ``dg[i][j][l] = d_i g_jl``."""

    g: np.ndarray
    g_inv: np.ndarray
    dg: np.ndarray


def check_point(model: ManifoldModel, coords: np.ndarray) -> np.ndarray:
    """Validate chart coordinates; returns the coords as a float array."""
    q = np.asarray(coords, dtype=float)
    if q.shape[-1] != model.d:
        raise GeometryError(f"expected coords of length {model.d}, got {q.shape[-1]}")
    if not np.all(np.isfinite(q)):
        raise GeometryError("non-finite coordinates")
    if model.kind == "sphere2":
        theta = q[..., 0]
        if np.any(theta <= POLE_MARGIN) or np.any(theta >= np.pi - POLE_MARGIN):
            raise GeometryError("sphere2 chart coordinate theta outside pole-exclusion range")
    return q


def _landmark_pair_data(model: ManifoldModel, q: np.ndarray):
    """Pairwise differences and scalar kernel values for landmark coords."""
    nl = model.num_landmarks
    pts = q.reshape(q.shape[:-1] + (nl, 2))
    diff = pts[..., :, None, :] - pts[..., None, :, :]          # (..., nl, nl, 2)
    sq = np.sum(diff * diff, axis=-1)                           # (..., nl, nl)
    kscal = np.exp(-sq / (2.0 * model.kernel_sigma**2))
    return pts, diff, kscal


def _expand_blocks(kscal: np.ndarray) -> np.ndarray:
    """Expand a scalar landmark matrix (..., nl, nl) to 2x2-identity blocks."""
    nl = kscal.shape[-1]
    out = np.zeros(kscal.shape[:-2] + (2 * nl, 2 * nl))
    out[..., 0::2, 0::2] = kscal
    out[..., 1::2, 1::2] = kscal
    return out


def cometric(model: ManifoldModel, coords: np.ndarray) -> np.ndarray:
    """Inverse metric components g^ij at the given point(s)."""
    q = check_point(model, coords)
    d = model.d
    if model.kind == "flat":
        return np.broadcast_to(np.eye(d), q.shape[:-1] + (d, d)).copy()
    if model.kind == "sphere2":
        out = np.zeros(q.shape[:-1] + (2, 2))
        out[..., 0, 0] = 1.0
        out[..., 1, 1] = 1.0 / np.sin(q[..., 0]) ** 2
        return out
    _, _, kscal = _landmark_pair_data(model, q)
    return _expand_blocks(kscal)


def metric(model: ManifoldModel, coords: np.ndarray) -> np.ndarray:
    """Metric components g_ij; inverse of the cometric."""
    q = check_point(model, coords)
    if model.kind == "flat":
        return cometric(model, q)
    if model.kind == "sphere2":
        out = np.zeros(q.shape[:-1] + (2, 2))
        out[..., 0, 0] = 1.0
        out[..., 1, 1] = np.sin(q[..., 0]) ** 2
        return out
    k = cometric(model, q)
    eig = np.linalg.eigvalsh(k)
    lo, hi = eig[..., 0], eig[..., -1]
    if np.any(lo <= 0) or np.any(hi / np.maximum(lo, np.finfo(float).tiny) > COND_CAP):
        raise GeometryError("landmark kernel matrix is numerically singular")
    return np.linalg.inv(k)


def metric_tensors(model: ManifoldModel, coords: np.ndarray) -> MetricTensors:
    q = check_point(model, coords)
    return MetricTensors(metric(model, q), cometric(model, q), metric_derivative(model, q))


def _landmark_kernel_derivative(model: ManifoldModel, q: np.ndarray) -> np.ndarray:
    """dK[..., a, :, :] = d K / d q_a for the block kernel matrix, a = 2p + c."""
    nl, sig2 = model.num_landmarks, model.kernel_sigma**2
    _, diff, kscal = _landmark_pair_data(model, q)
    # grad[..., i, j, c] = d k_ij / d x_i^c  (= -d k_ij / d x_j^c)
    grad = -kscal[..., None] * diff / sig2
    dkscal = np.zeros(q.shape[:-1] + (nl, 2, nl, nl))
    for p in range(nl):
        dkscal[..., p, :, p, :] += np.moveaxis(grad[..., p, :, :], -1, -2)
        dkscal[..., p, :, :, p] -= np.moveaxis(grad[..., :, p, :], -1, -2)
    d = model.d
    dk = np.zeros(q.shape[:-1] + (d, d, d))
    flat_scal = dkscal.reshape(q.shape[:-1] + (d, nl, nl))
    dk[..., :, 0::2, 0::2] = flat_scal
    dk[..., :, 1::2, 1::2] = flat_scal
    return dk


def metric_derivative(model: ManifoldModel, coords: np.ndarray) -> np.ndarray:
    """dg[..., i, j, l] = d g_jl / d x^i."""
    q = check_point(model, coords)
    d = model.d
    if model.kind == "flat":
        return np.zeros(q.shape[:-1] + (d, d, d))
    if model.kind == "sphere2":
        out = np.zeros(q.shape[:-1] + (2, 2, 2))
        out[..., 0, 1, 1] = 2.0 * np.sin(q[..., 0]) * np.cos(q[..., 0])
        return out
    g = metric(model, q)
    dk = _landmark_kernel_derivative(model, q)
    # d(K^{-1})_a = -K^{-1} (dK)_a K^{-1}
    return -np.einsum("...ij,...ajk,...kl->...ail", g, dk, g)


def christoffel(model: ManifoldModel, coords: np.ndarray) -> np.ndarray:
    """Levi-Civita Christoffel symbols Gamma[..., k, i, j], symmetric in (i, j)."""
    q = check_point(model, coords)
    if model.kind == "flat":
        d = model.d
        return np.zeros(q.shape[:-1] + (d, d, d))
    ginv = cometric(model, q)
    if model.kind == "landmarks":
        metric(model, q)  # singularity check
    dg = metric_derivative(model, q)
    gamma = np.einsum("...kl,...ijl->...kij", ginv, dg)
    gamma = gamma + np.einsum("...kl,...jil->...kij", ginv, dg)
    gamma = gamma - np.einsum("...kl,...lij->...kij", ginv, dg)
    return 0.5 * gamma


def embed(model: ManifoldModel, coords: np.ndarray) -> np.ndarray:
    """Map chart coordinates into the ambient space R^k."""
    q = check_point(model, coords)
    if model.kind != "sphere2":
        return q.copy()
    theta, phi = q[..., 0], q[..., 1]
    return np.stack(
        [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)],
        axis=-1,
    )


def embed_differential(model: ManifoldModel, coords: np.ndarray) -> np.ndarray:
    """Differential of ``embed``: (..., k, d) matrix of full column rank."""
    q = check_point(model, coords)
    d = model.d
    if model.kind != "sphere2":
        return np.broadcast_to(np.eye(d), q.shape[:-1] + (d, d)).copy()
    theta, phi = q[..., 0], q[..., 1]
    out = np.zeros(q.shape[:-1] + (3, 2))
    out[..., 0, 0] = np.cos(theta) * np.cos(phi)
    out[..., 1, 0] = np.cos(theta) * np.sin(phi)
    out[..., 2, 0] = -np.sin(theta)
    out[..., 0, 1] = -np.sin(theta) * np.sin(phi)
    out[..., 1, 1] = np.sin(theta) * np.cos(phi)
    return out


def chart_from_ambient(model: ManifoldModel, y: np.ndarray) -> np.ndarray:
    """Map an ambient point (or batch) to chart coordinates.

    Flat and landmark models use the identity chart; for the sphere the point
    is radially projected onto the unit sphere first.
    """
    y = np.asarray(y, dtype=float)
    if model.kind != "sphere2":
        return check_point(model, y)
    norm = np.linalg.norm(y, axis=-1, keepdims=True)
    if np.any(norm == 0):
        raise GeometryError("cannot project the origin onto the sphere")
    u = y / norm
    theta = np.arccos(np.clip(u[..., 2], -1.0, 1.0))
    phi = np.arctan2(u[..., 1], u[..., 0])
    return check_point(model, np.stack([theta, phi], axis=-1))
