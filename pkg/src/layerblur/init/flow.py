"""Dense optical flow by pyramidal Lucas-Kanade."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..errors import ShapeError
from ..io import read_flow

WINDOW = 7
WARPS_PER_LEVEL = 3
PYRAMID_SCALE = 0.8
COARSEST_SIZE = 24
MEDIAN_SIZE = 5


@dataclass
class FlowField:
    """Per-pixel displacement from the first image to the second, in pixels."""

    u: np.ndarray
    v: np.ndarray
    degenerate: bool = False

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=np.float64)
        self.v = np.asarray(self.v, dtype=np.float64)
        if self.u.shape != self.v.shape or self.u.ndim != 2:
            raise ShapeError("flow components must be 2-D arrays of equal shape")


def load_flow(path) -> FlowField:
    """Read a precomputed flow from the raw two-plane float32 format."""
    return FlowField(*read_flow(path))


def _gray(img):
    img = np.asarray(img, dtype=np.float64)
    return img.mean(axis=2) if img.ndim == 3 else img


def _resize(img, shape):
    zy, zx = shape[0] / img.shape[0], shape[1] / img.shape[1]
    ys = (np.arange(shape[0]) + 0.5) / zy - 0.5
    xs = (np.arange(shape[1]) + 0.5) / zx - 0.5
    grid = np.meshgrid(ys, xs, indexing="ij")
    return ndimage.map_coordinates(img, grid, order=1, mode="nearest")


def _pyramid(img):
    levels = [img]
    while True:
        h, w = levels[-1].shape
        nh, nw = math.ceil(h * PYRAMID_SCALE), math.ceil(w * PYRAMID_SCALE)
        if min(nh, nw) < COARSEST_SIZE or (nh, nw) == (h, w):
            return levels
        smooth = ndimage.gaussian_filter(levels[-1], 0.6)
        levels.append(_resize(smooth, (nh, nw)))


def _lk_level(a, b, u, v):
    h, w = a.shape
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    for _ in range(WARPS_PER_LEVEL):
        bw = ndimage.map_coordinates(b, [ys + v, xs + u], order=1, mode="nearest")
        avg = 0.5 * (a + bw)
        iy, ix = np.gradient(avg)
        it = bw - a
        sxx = ndimage.uniform_filter(ix * ix, WINDOW)
        sxy = ndimage.uniform_filter(ix * iy, WINDOW)
        syy = ndimage.uniform_filter(iy * iy, WINDOW)
        sxt = ndimage.uniform_filter(ix * it, WINDOW)
        syt = ndimage.uniform_filter(iy * it, WINDOW)
        det = sxx * syy - sxy * sxy
        trace = sxx + syy
        ok = det > 1e-6 * np.maximum(trace * trace, 1e-12)
        safe = np.where(ok, det, 1.0)
        du = np.where(ok, (-syy * sxt + sxy * syt) / safe, 0.0)
        dv = np.where(ok, (sxy * sxt - sxx * syt) / safe, 0.0)
        u = u + du
        v = v + dv
    return u, v


def compute_flow(a, b) -> FlowField:
    """Flow ``(u, v)`` with ``a(x, y) ~ b(x + u, y + v)``.

    Colour inputs are averaged to grey.  Images without texture give a zero
    field flagged ``degenerate``.
    """
    a, b = _gray(a), _gray(b)
    if a.shape != b.shape:
        raise ShapeError(f"flow inputs differ in shape: {a.shape} vs {b.shape}")
    if np.ptp(a) < 1e-8 or np.ptp(b) < 1e-8:
        warnings.warn("flow requested on an untextured image; returning zero flow", stacklevel=2)
        return FlowField(np.zeros(a.shape), np.zeros(a.shape), degenerate=True)
    pa, pb = _pyramid(a), _pyramid(b)
    u = np.zeros(pa[-1].shape)
    v = np.zeros(pa[-1].shape)
    for level in range(len(pa) - 1, -1, -1):
        shape = pa[level].shape
        if u.shape != shape:
            sy, sx = shape[0] / u.shape[0], shape[1] / u.shape[1]
            u = _resize(u, shape) * sx
            v = _resize(v, shape) * sy
        u, v = _lk_level(pa[level], pb[level], u, v)
        # suppress aperture-problem outliers before they propagate
        u = ndimage.median_filter(u, MEDIAN_SIZE, mode="nearest")
        v = ndimage.median_filter(v, MEDIAN_SIZE, mode="nearest")
    return FlowField(u, v)
