"""Image pyramid helpers for coarse-to-fine solving.

A pixel at ``x`` on a level ``s`` times smaller than the finest one sits at
``s * x`` there, so affine motions change only by scaling their translation.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import ndimage

from .types import Scene


def level_shapes(shape, scale: float = 0.8, min_level_size: int = 32):
    """Shapes from finest to coarsest; each is ``ceil(previous * scale)``.

    Levels are added while the smaller side stays at least ``min_level_size``.
    """
    if not 0 < scale < 1:
        raise ValueError("pyramid scale must lie in (0, 1)")
    shapes = [tuple(shape[:2])]
    while True:
        h, w = shapes[-1]
        nxt = (math.ceil(h * scale), math.ceil(w * scale))
        if min(nxt) < min_level_size or nxt == (h, w):
            return shapes
        shapes.append(nxt)


def _resample(img, shape, factor):
    # output pixel p samples the input at p / factor
    img = np.asarray(img, dtype=np.float64)
    ys = np.arange(shape[0]) / factor
    xs = np.arange(shape[1]) / factor
    grid = np.meshgrid(np.clip(ys, 0, img.shape[0] - 1), np.clip(xs, 0, img.shape[1] - 1),
                       indexing="ij")
    if img.ndim == 2:
        return ndimage.map_coordinates(img, grid, order=1)
    return np.stack([ndimage.map_coordinates(img[..., c], grid, order=1)
                     for c in range(img.shape[2])], axis=-1)


def downsample(img, shape, factor: float):
    """Anti-aliased resampling to ``shape`` for a level ``factor`` (< 1) times smaller."""
    sigma = 0.5 * math.sqrt(max(1.0 / factor ** 2 - 1.0, 0.0))
    img = np.asarray(img, dtype=np.float64)
    sig = (sigma, sigma) + (0,) * (img.ndim - 2)
    return np.clip(_resample(ndimage.gaussian_filter(img, sig, mode="nearest"), shape, factor),
                   0.0, 1.0)


def upsample(img, shape, factor: float):
    """Bilinear resampling to a level ``factor`` (> 1) times larger."""
    return np.clip(_resample(img, shape, factor), 0.0, 1.0)


def scale_motions(motions, factor: float):
    return [[m.scale_translation(factor) for m in traj] for traj in motions]


def resize_scene(scene: Scene, shape, factor: float) -> Scene:
    """Move a scene to another level; ``factor`` is the new/old size ratio."""
    resize = downsample if factor < 1 else upsample
    return Scene(resize(scene.fg, shape, factor), resize(scene.bg, shape, factor),
                 resize(scene.alpha, shape, factor), scale_motions(scene.motions, factor),
                 scene.timing)

