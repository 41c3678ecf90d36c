"""Full energy of a layered scene against observed frames."""
from __future__ import annotations

import numpy as np

from ..errors import ShapeError
from ..model import blur_frame, image_gradient
from ..types import BlurModel, Scene
from .config import EnergyBreakdown, SolverConfig


def check_frames(scene: Scene, frames) -> None:
    if len(frames) != scene.n_frames:
        raise ShapeError(f"{len(frames)} frames given for a {scene.n_frames}-frame scene")
    for f in frames:
        if np.shape(f) != scene.fg.shape:
            raise ShapeError(f"frame shape {np.shape(f)} does not match layers {scene.fg.shape}")


def gradient_sq_norm(u) -> float:
    gx, gy = image_gradient(u)
    return float(np.sum(gx * gx) + np.sum(gy * gy))


def frame_residual(scene: Scene, frames, i: int, kind=BlurModel.PROPOSED) -> float:
    """``|grad B_i - grad blur_i(scene)|^2`` without the data weight."""
    return gradient_sq_norm(np.asarray(frames[i]) - blur_frame(scene, i, kind))


def data_misfit(scene: Scene, frames, kind=BlurModel.PROPOSED) -> float:
    return sum(frame_residual(scene, frames, i, kind) for i in range(scene.n_frames))


def hyper_laplacian_prior(layer, exponent: float) -> float:
    gx, gy = image_gradient(layer)
    return float(np.sum(np.abs(gx) ** exponent) + np.sum(np.abs(gy) ** exponent))


def total_variation(alpha) -> float:
    gx, gy = image_gradient(alpha)
    return float(np.sum(np.sqrt(gx * gx + gy * gy)))


def binary_penalty(alpha) -> float:
    a = np.asarray(alpha, dtype=np.float64).ravel()
    return float(a @ (1.0 - a))


def objective(scene: Scene, frames, config: SolverConfig,
              kind: BlurModel = BlurModel.PROPOSED) -> EnergyBreakdown:
    check_frames(scene, frames)
    cfg = config.resolve(scene.n_frames)
    return EnergyBreakdown.of(
        cfg.lambda1 * data_misfit(scene, frames, kind),
        hyper_laplacian_prior(scene.bg, cfg.hyper_exponent)
        + hyper_laplacian_prior(scene.fg, cfg.hyper_exponent),
        cfg.lambda2 * total_variation(scene.alpha),
        cfg.lambda3 * binary_penalty(scene.alpha),
    )
