"""Affine warping with bilinear sampling and its exact transpose."""
from __future__ import annotations

import math

import numpy as np

from . import kernels
from .types import AffineMotion, CaptureTiming, as_image


def _params(motions) -> np.ndarray:
    if isinstance(motions, AffineMotion):
        motions = [motions]
    out = []
    for m in motions:
        if isinstance(m, AffineMotion):
            out.append(m.validate().as_array())
        else:
            out.append(AffineMotion.from_array(m).validate().as_array())
    return np.ascontiguousarray(np.array(out, dtype=np.float64).reshape(-1, 6))


def _channels(img):
    if img.ndim == 2:
        return [np.ascontiguousarray(img)]
    return [np.ascontiguousarray(img[:, :, c]) for c in range(img.shape[2])]


def _stack_channels(chans, ndim):
    if ndim == 2:
        return chans[0]
    return np.stack(chans, axis=-1)


def warp_affine(src, motion: AffineMotion) -> np.ndarray:
    """Resample ``src`` so output pixel ``p`` takes the value at ``motion(p)``.

    Bilinear interpolation; sample positions outside the image are clamped to
    the nearest edge pixel.  Linear in ``src``.
    """
    src = as_image(src, "src")
    params = _params(motion)
    chans = [kernels.warp_stack(c, params)[0] for c in _channels(src)]
    return _stack_channels(chans, src.ndim)


def warp_adjoint(src, motion: AffineMotion) -> np.ndarray:
    """Transpose of :func:`warp_affine` for the same motion."""
    src = as_image(src, "src")
    params = _params(motion)
    chans = [kernels.warp_adjoint_sum(c[None], params) for c in _channels(src)]
    return _stack_channels(chans, src.ndim)


def warp_samples(src2d: np.ndarray, params: np.ndarray) -> np.ndarray:
    """Warp a single-channel image by each row of ``params`` -> ``(M, h, w)``."""
    return kernels.warp_stack(np.ascontiguousarray(src2d, dtype=np.float64), params)


def warp_samples_adjoint(stack: np.ndarray, params: np.ndarray) -> np.ndarray:
    """Sum over samples of the transposed warps applied to ``stack[k]``."""
    return kernels.warp_adjoint_sum(np.ascontiguousarray(stack, dtype=np.float64), params)


def bilinear_taps(motion: AffineMotion, x: int, y: int, shape) -> dict:
    """Source pixels and weights read by output pixel ``(x, y)``.

    Scalar re-derivation of the sampling rule; zero weights are omitted and
    repeated edge taps are merged.
    """
    h, w = shape[:2]
    sx, sy = motion.apply(float(x), float(y))
    sx = min(max(sx, 0.0), w - 1.0)
    sy = min(max(sy, 0.0), h - 1.0)
    x0, y0 = int(math.floor(sx)), int(math.floor(sy))
    x1 = x0 + 1 if x0 < w - 1 else x0
    y1 = y0 + 1 if y0 < h - 1 else y0
    fx, fy = sx - x0, sy - y0
    taps: dict = {}
    for (px, py), wt in (((x0, y0), (1 - fy) * (1 - fx)), ((x1, y0), (1 - fy) * fx),
                         ((x0, y1), fy * (1 - fx)), ((x1, y1), fy * fx)):
        if wt != 0.0:
            taps[(px, py)] = taps.get((px, py), 0.0) + wt
    return taps


def interpolate_motion(theta_i: AffineMotion, theta_next: AffineMotion,
                       t_frac: float, duty_cycle: float) -> AffineMotion:
    """Motion at fraction ``t_frac`` of the exposure of frame ``i``.

    Parameters are blended linearly; the shutter is open for ``duty_cycle`` of
    the interval between the two frames.
    """
    if not 0.0 <= t_frac <= 1.0:
        raise ValueError(f"t_frac must lie in [0, 1], got {t_frac}")
    if not 0.0 < duty_cycle <= 1.0:
        raise ValueError(f"duty cycle must lie in (0, 1], got {duty_cycle}")
    if t_frac == 0.0:
        return theta_i
    a, b = theta_i.as_array(), theta_next.as_array()
    return AffineMotion.from_array(a + t_frac * duty_cycle * (b - a))


def sample_params(theta_i: AffineMotion, theta_next: AffineMotion,
                  timing: CaptureTiming) -> np.ndarray:
    """Interpolated motions at every exposure sample, shape ``(M, 6)``."""
    rows = [interpolate_motion(theta_i, theta_next, t, timing.duty_cycle)
            for t in timing.fractions]
    return _params(rows)


def default_sample_count(motions, duty_cycle: float, shape, lo: int = 2, hi: int = 30) -> int:
    """One exposure sample per pixel of the longest intra-exposure displacement.

    ``motions`` is a per-layer list of trajectories (or an array of shape
    ``(layers, frames + 1, 6)``); the displacement is measured at the image
    corners, where an affine map moves pixels furthest.
    """
    params = np.asarray([[m.as_array() if isinstance(m, AffineMotion) else m for m in traj]
                         for traj in motions], dtype=np.float64)
    h, w = shape[:2]
    corners = np.array([[0, 0], [w - 1, 0], [0, h - 1], [w - 1, h - 1]], dtype=np.float64)
    delta = duty_cycle * (params[:, 1:] - params[:, :-1])
    longest = 0.0
    for d in delta.reshape(-1, 6):
        dx = d[0] * corners[:, 0] + d[1] * corners[:, 1] + d[4]
        dy = d[2] * corners[:, 0] + d[3] * corners[:, 1] + d[5]
        longest = max(longest, float(np.max(np.hypot(dx, dy))))
    return int(min(max(math.ceil(longest - 1e-9), lo), hi))
