"""Frame-bundle states and the horizontal vector field.

A frame-bundle point pairs a base point with a frame: a ``d x r`` matrix whose
columns are tangent vectors in chart coordinates. ``r`` may be smaller than
``d`` (a reduced frame carrying only the driven directions).

The horizontal lift of the tangent vector ``v = frame @ w`` moves the base
with velocity ``v`` and rotates every frame column by parallel transport:

    d base^k    = v^k
    d frame^k_j = -Gamma^k_{ml} v^m frame^l_j

``transport_rate`` evaluates the ``-Gamma`` contraction batched over leading
axes; for the landmark model it contracts the kernel derivative directly
instead of forming the full Christoffel tensor, which keeps path integration
cheap enough for finite-difference optimization loops.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import geometry
from .geometry import GeometryError, ManifoldModel

# Relative smallest-singular-value floor below which a frame counts as
# rank deficient.
FRAME_RANK_TOL = 1e-10


class DegenerateFrameError(ValueError):
    """Frame matrix is numerically rank deficient."""


@dataclass(frozen=True)
class FramePoint:
    """Point on the frame bundle: base coordinates plus a d x r frame matrix."""

    base: np.ndarray
    frame: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "base", np.asarray(self.base, dtype=float))
        object.__setattr__(self, "frame", np.asarray(self.frame, dtype=float))
        if self.base.ndim != 1 or self.frame.ndim != 2 or self.frame.shape[0] != self.base.shape[0]:
            raise DegenerateFrameError(
                f"frame shape {self.frame.shape} does not match base dimension {self.base.shape}"
            )
        sv = np.linalg.svd(self.frame, compute_uv=False)
        if sv[-1] <= FRAME_RANK_TOL * sv[0]:
            raise DegenerateFrameError("frame matrix is rank deficient")

    @property
    def rank(self) -> int:
        return self.frame.shape[1]


@dataclass(frozen=True)
class FrameTangent:
    """Tangent vector to the frame bundle in coordinates."""

    d_base: np.ndarray
    d_frame: np.ndarray


def project(u: FramePoint) -> np.ndarray:
    """Bundle projection: forget the frame."""
    return u.base


def transport_rate(
    model: ManifoldModel, coords: np.ndarray, velocity: np.ndarray, frames: np.ndarray
) -> np.ndarray:
    """Parallel-transport rate of frame columns along a base velocity.

    coords (..., d), velocity (..., d), frames (..., d, r); returns
    ``-Gamma^k_{ml} velocity^m frames^l_j`` with shape (..., d, r).
    """
    if model.kind == "flat":
        return np.zeros_like(frames)
    if model.kind == "landmarks":
        return _landmark_transport_rate(model, coords, velocity, frames)
    gamma = geometry.christoffel(model, coords)
    return -np.einsum("...kml,...m,...lj->...kj", gamma, velocity, frames)


def _landmark_transport_rate(
    model: ManifoldModel, coords: np.ndarray, velocity: np.ndarray, frames: np.ndarray
) -> np.ndarray:
    """Kernel-strip contraction of the landmark Christoffel symbols.

    Writing K for the block kernel (the cometric), g = K^{-1}, and
    A(v) = sum_m v^m dK/dq_m, the contraction c^k = Gamma^k_{ml} v^m u^l
    reduces to

        c = -1/2 [ A(v) g u + A(u) g v - K w ],   w_l = (g v)^T (dK/dq_l) (g u),

    which needs one kernel solve and pairwise-kernel tensors, never the full
    d^3 Christoffel array.
    """
    nl, sig2 = model.num_landmarks, model.kernel_sigma**2
    lead = coords.shape[:-1]
    d = model.d
    r = frames.shape[-1]

    pts = coords.reshape(lead + (nl, 2))
    diff = pts[..., :, None, :] - pts[..., None, :, :]            # (..., nl, nl, 2)
    sq = np.sum(diff * diff, axis=-1)
    kscal = np.exp(-sq / (2.0 * sig2))
    kfull = geometry._expand_blocks(kscal)

    rhs = np.concatenate([velocity[..., None], frames], axis=-1)  # (..., d, r+1)
    try:
        sol = np.linalg.solve(kfull, rhs)
    except np.linalg.LinAlgError as exc:
        raise GeometryError("landmark kernel matrix is numerically singular") from exc
    gv2 = sol[..., 0].reshape(lead + (nl, 2))                     # g v
    gu2 = sol[..., 1:].reshape(lead + (nl, 2, r))                 # g u_j

    v2 = velocity.reshape(lead + (nl, 2))
    u2 = frames.reshape(lead + (nl, 2, r))

    # scalar strip tensor: gd[..., i, j, c] = k_ij diff_ij^c / sigma^2, so that
    # A(v)_ij = -gd[i, j, :] . (v_i - v_j) acts blockwise as a scalar.
    gd = kscal[..., None] * diff / sig2

    rel_v = v2[..., :, None, :] - v2[..., None, :, :]
    ascal_v = -np.sum(gd * rel_v, axis=-1)                        # (..., nl, nl)
    term_v = np.einsum("...ij,...jer->...ier", ascal_v, gu2)      # A(v) g u

    rel_u = u2[..., :, None, :, :] - u2[..., None, :, :, :]       # (..., nl, nl, 2, r)
    ascal_u = -np.einsum("...ijc,...ijcr->...ijr", gd, rel_u)
    term_u = np.einsum("...ijr,...je->...ier", ascal_u, gv2)      # A(u_j) g v

    # w_l = (g v)^T (dK/dq_l) (g u_j) from the kernel row/column strips of dK.
    mpair = np.einsum("...ie,...jer->...ijr", gv2, gu2)
    mg = np.einsum("...ijr,...ijc->...ijcr", mpair, gd)
    w2 = -np.sum(mg, axis=len(lead) + 1) + np.sum(mg, axis=len(lead))
    kw = np.einsum("...ij,...jer->...ier", kscal, w2)             # K w

    rate = 0.5 * (term_v + term_u - kw)                           # -Gamma(v, u_j)
    return rate.reshape(lead + (d, r))


def horizontal_field(model: ManifoldModel, u: FramePoint, w: np.ndarray) -> FrameTangent:
    """Horizontal lift of the tangent vector ``u.frame @ w``."""
    w = np.asarray(w, dtype=float)
    if w.shape != (u.rank,):
        raise ValueError(f"expected driver of length {u.rank}, got shape {w.shape}")
    v = u.frame @ w
    d_frame = transport_rate(model, u.base, v, u.frame)
    return FrameTangent(d_base=v, d_frame=d_frame)


def frame_gram(model: ManifoldModel, u: FramePoint) -> np.ndarray:
    """Gram matrix of the frame columns under the metric at the base point."""
    g = geometry.metric(model, u.base)
    return u.frame.T @ g @ u.frame


def orthonormalize(model: ManifoldModel, u: FramePoint) -> FramePoint:
    """Gram-Schmidt the frame columns under the metric at the base point.

    Classical Gram-Schmidt with one re-orthogonalization pass, in column
    order, so the result is deterministic and ``frame_gram`` is the identity.
    """
    g = geometry.metric(model, u.base)
    frame = np.array(u.frame, dtype=float)
    r = frame.shape[1]
    for _ in range(2):
        for j in range(r):
            col = frame[:, j]
            for i in range(j):
                col = col - (frame[:, i] @ g @ col) * frame[:, i]
            norm = np.sqrt(col @ g @ col)
            if not norm > FRAME_RANK_TOL:
                raise DegenerateFrameError("frame became rank deficient during orthonormalization")
            frame[:, j] = col / norm
    return FramePoint(u.base, frame)
