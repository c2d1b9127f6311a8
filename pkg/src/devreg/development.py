"""Path development: rolling Euclidean driving paths onto the manifold.

A driving path is a discretized path in R^r given by its per-step increments.
Development integrates the horizontal ODE on the frame bundle,

    base'  = frame @ w,      frame' = -Gamma(frame @ w) frame,

along the piecewise-linear interpolation of the increments, with Heun's
predictor-corrector per sub-step. Heun is second order on the smooth segments
and consistent with Stratonovich calculus for piecewise-linear drivers; for a
flat connection it is exact at any resolution.

``develop`` handles a single path; ``develop_batch`` is the array engine used
by the inference code, which integrates thousands of perturbed paths at once.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .frame_bundle import FramePoint, transport_rate
from .geometry import POLE_MARGIN, ManifoldModel, embed, project as _unused  # noqa: F401
from .frame_bundle import project

DEFAULT_SUBSTEPS = 4
DEFAULT_NUM_STEPS = 30


class IntegrationError(RuntimeError):
    """Development failed (singular geometry or chart exit) at a known step."""

    def __init__(self, message: str, step: int):
        super().__init__(f"{message} (step {step})")
        self.step = step


@dataclass(frozen=True)
class DrivingPath:
    """Increment matrix of a discretized path in R^r over [0, total_time]."""

    increments: np.ndarray          # (n_steps, r)
    total_time: float = 1.0

    def __post_init__(self):
        inc = np.atleast_2d(np.asarray(self.increments, dtype=float))
        object.__setattr__(self, "increments", inc)
        if inc.ndim != 2 or inc.shape[0] < 1:
            raise ValueError("increments must be a nonempty (n_steps, r) matrix")
        if not np.all(np.isfinite(inc)):
            raise ValueError("increments must be finite")
        if not self.total_time > 0:
            raise ValueError("total_time must be positive")

    @property
    def num_steps(self) -> int:
        return self.increments.shape[0]

    @property
    def width(self) -> int:
        return self.increments.shape[1]


@dataclass(frozen=True)
class DevelopedPath:
    """States along a developed path, one per increment plus the start."""

    states: tuple[FramePoint, ...]
    base_points: np.ndarray = field(init=False)   # (n_steps + 1, d)

    def __post_init__(self):
        object.__setattr__(self, "base_points", np.stack([project(u) for u in self.states]))

    @property
    def endpoint(self) -> FramePoint:
        return self.states[-1]


def develop_batch(
    model: ManifoldModel,
    bases: np.ndarray,
    frames: np.ndarray,
    increments: np.ndarray,
    total_time: float,
    substeps: int = DEFAULT_SUBSTEPS,
    keep_path: bool = False,
):
    """Integrate the horizontal ODE for a batch of driving paths.

    bases (..., d), frames (..., d, r), increments (..., n_steps, r). Returns
    ``(bases_out, frames_out)`` at the endpoint, or arrays with an extra
    leading time axis of length n_steps + 1 when ``keep_path`` is set.
    """
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    inc = np.asarray(increments, dtype=float)
    n_steps = inc.shape[-2]
    dt = total_time / n_steps
    h = dt / substeps
    y = np.broadcast_to(np.asarray(bases, dtype=float), inc.shape[:-2] + bases.shape[-1:]).copy()
    nu = np.broadcast_to(np.asarray(frames, dtype=float), inc.shape[:-2] + frames.shape[-2:]).copy()

    if keep_path:
        y_hist = [y.copy()]
        nu_hist = [nu.copy()]

    for t in range(n_steps):
        w = inc[..., t, :] / dt
        for _ in range(substeps):
            dy1 = np.einsum("...dr,...r->...d", nu, w)
            dn1 = transport_rate(model, y, dy1, nu)
            yp = y + h * dy1
            nup = nu + h * dn1
            dy2 = np.einsum("...dr,...r->...d", nup, w)
            dn2 = transport_rate(model, yp, dy2, nup)
            y = y + (0.5 * h) * (dy1 + dy2)
            nu = nu + (0.5 * h) * (dn1 + dn2)
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(nu))):
            raise IntegrationError("development produced non-finite state", t)
        if model.kind == "sphere2":
            th = y[..., 0]
            if np.any(th <= POLE_MARGIN) or np.any(th >= np.pi - POLE_MARGIN):
                raise IntegrationError("development left the sphere chart (pole exclusion)", t)
        if keep_path:
            y_hist.append(y.copy())
            nu_hist.append(nu.copy())

    if keep_path:
        return np.stack(y_hist), np.stack(nu_hist)
    return y, nu


def develop(
    model: ManifoldModel,
    u0: FramePoint,
    path: DrivingPath,
    substeps: int = DEFAULT_SUBSTEPS,
) -> DevelopedPath:
    """Develop a driving path from the frame-bundle point ``u0``."""
    if u0.rank != path.width:
        raise ValueError(f"frame rank {u0.rank} does not match path width {path.width}")
    y_hist, nu_hist = develop_batch(
        model, u0.base, u0.frame, path.increments, path.total_time, substeps, keep_path=True
    )
    states = tuple(FramePoint(y_hist[t], nu_hist[t]) for t in range(path.num_steps + 1))
    return DevelopedPath(states)


def develop_endpoint(
    model: ManifoldModel,
    u0: FramePoint,
    path: DrivingPath,
    substeps: int = DEFAULT_SUBSTEPS,
) -> np.ndarray:
    """Ambient coordinates of the developed path's endpoint."""
    if u0.rank != path.width:
        raise ValueError(f"frame rank {u0.rank} does not match path width {path.width}")
    y, _ = develop_batch(model, u0.base, u0.frame, path.increments, path.total_time, substeps)
    return embed(model, y)


@dataclass(frozen=True)
class OrderEstimate:
    """Richardson estimate of the integrator's empirical order."""

    order: float
    exact: bool
    errors: tuple[float, float]


def convergence_order(model: ManifoldModel, u0: FramePoint, path: DrivingPath) -> OrderEstimate:
    """Empirical convergence order from endpoints at substeps 1, 2, 4.

    Returns ``exact=True`` (with infinite order) when successive refinements
    agree to machine precision, as they do for a flat connection.
    """
    ends = []
    for s in (1, 2, 4):
        y, _ = develop_batch(model, u0.base, u0.frame, path.increments, path.total_time, s)
        ends.append(embed(model, y))
    e12 = float(np.linalg.norm(ends[0] - ends[1]))
    e24 = float(np.linalg.norm(ends[1] - ends[2]))
    scale = max(float(np.linalg.norm(ends[2])), 1.0)
    if e12 < 1e-13 * scale or e24 < 1e-14 * scale:
        return OrderEstimate(order=float("inf"), exact=True, errors=(e12, e24))
    return OrderEstimate(order=float(np.log2(e12 / e24)), exact=False, errors=(e12, e24))
