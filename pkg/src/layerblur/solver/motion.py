"""Motion update: blockwise simplex search over the per-frame affine parameters."""
from __future__ import annotations

import numpy as np

from ..types import BlurModel, Scene, reference_index
from .config import SolverConfig
from .nelder_mead import nelder_mead
from .objective import check_frames, frame_residual

SIMPLEX_STEPS = np.array([0.01, 0.01, 0.01, 0.01, 0.5, 0.5])


def _affected_frames(j: int, n_frames: int):
    # motion j opens frame j and closes frame j - 1
    return [i for i in (j - 1, j) if 0 <= i < n_frames]


def motion_blocks(n_frames: int, fix_reference: bool = True):
    """``(layer, motion index)`` pairs in update order: background first, ascending index."""
    ref = reference_index(n_frames)
    return [(layer, j) for layer in (0, 1) for j in range(n_frames + 1)
            if not (fix_reference and j == ref)]


def solve_motion(scene: Scene, frames, config: SolverConfig,
                 kind: BlurModel = BlurModel.PROPOSED) -> Scene:
    """Refine every motion block in turn, keeping a block only if the data term drops."""
    check_frames(scene, frames)
    cfg = config.resolve(scene.n_frames)
    n = scene.n_frames
    params = scene.motion_params()
    current = scene.copy()
    residuals = [frame_residual(current, frames, i, kind) for i in range(n)]

    for layer, j in motion_blocks(n, cfg.fix_reference):
        affected = _affected_frames(j, n)
        base = sum(residuals[i] for i in affected)

        def local(x, layer=layer, j=j, affected=affected):
            trial = params.copy()
            trial[layer, j] = x
            if x[0] * x[3] - x[1] * x[2] <= 0:
                return np.inf
            s = current.with_motion_params(trial)
            return sum(frame_residual(s, frames, i, kind) for i in affected)

        x, fx, _ = nelder_mead(local, params[layer, j], SIMPLEX_STEPS, cfg.nm_max_evals)
        if fx < base:
            params[layer, j] = x
            current = current.with_motion_params(params)
            for i in affected:
                residuals[i] = frame_residual(current, frames, i, kind)
    return current
