"""Layered image formation and the two blur models.

The blurred frame ``i`` under the proposed model averages the instantaneous
composites seen during the exposure::

    B = 1/M sum_k [ W1_k((1 - A) * L1) + (W1_k A) * (W0_k L0) ]

while the conventional model composites individually blurred layers::

    B = K1((1 - A) * L1) + (K1 A) * (K0 L0),    Kl = 1/M sum_k Wl_k

``W{l}_k`` warps layer ``l`` by its motion interpolated at the k-th exposure
sample.  Both are linear in the layers for a fixed mask and motions
(:class:`LayerBlurOperator`) and linear in the mask for fixed layers
(:class:`AlphaBlurOperator`, up to the constant :meth:`~AlphaBlurOperator.offset`).
"""
from __future__ import annotations

import numpy as np

from .errors import ShapeError
from .types import BACKGROUND, FOREGROUND, AffineMotion, BlurModel, Scene, as_image, as_mask
from .warp import bilinear_taps, sample_params, warp_samples, warp_samples_adjoint


def composite(fg, bg, alpha) -> np.ndarray:
    """Sharp composite ``(1 - A) * fg + A * bg``."""
    fg = as_image(fg, "foreground")
    bg = as_image(bg, "background")
    alpha = as_mask(alpha)
    if fg.shape != bg.shape or fg.shape[:2] != alpha.shape:
        raise ShapeError(f"shape mismatch: {fg.shape}, {bg.shape}, {alpha.shape}")
    a = alpha if fg.ndim == 2 else alpha[:, :, None]
    return (1.0 - a) * fg + a * bg


def image_gradient(u):
    """Forward differences with a zero last row/column (Neumann boundary)."""
    u = np.asarray(u, dtype=np.float64)
    gx = np.zeros_like(u)
    gy = np.zeros_like(u)
    gx[:, :-1] = u[:, 1:] - u[:, :-1]
    gy[:-1, :] = u[1:, :] - u[:-1, :]
    return gx, gy


def image_gradient_adjoint(gx, gy) -> np.ndarray:
    """Exact transpose of :func:`image_gradient` (negative divergence)."""
    gx = np.asarray(gx, dtype=np.float64)
    gy = np.asarray(gy, dtype=np.float64)
    out = np.zeros_like(gx)
    out[:, :-1] -= gx[:, :-1]
    out[:, 1:] += gx[:, :-1]
    out[:-1, :] -= gy[:-1, :]
    out[1:, :] += gy[:-1, :]
    return out


def gradient_normal(u) -> np.ndarray:
    """``grad^T grad u``."""
    return image_gradient_adjoint(*image_gradient(u))


def _frame_params(scene: Scene, frame: int):
    if not 0 <= frame < scene.n_frames:
        raise IndexError(f"frame {frame} outside 0..{scene.n_frames - 1}")
    bg_traj = scene.motions[BACKGROUND]
    fg_traj = scene.motions[FOREGROUND]
    p0 = sample_params(bg_traj[frame], bg_traj[frame + 1], scene.timing)
    p1 = sample_params(fg_traj[frame], fg_traj[frame + 1], scene.timing)
    return p0, p1


def _chans(img):
    return [img] if img.ndim == 2 else [img[:, :, c] for c in range(img.shape[2])]


def _merge(chans, ndim):
    return chans[0] if ndim == 2 else np.stack(chans, axis=-1)


def _mean(stack):
    return stack.sum(axis=0) / stack.shape[0]


class LayerBlurOperator:
    """``K_L`` of one frame: maps (background, foreground) to the blurred frame.

    The foreground is the non-premultiplied layer; ``(1 - A)`` is applied
    inside.  Motions and mask are frozen at construction.
    """

    def __init__(self, scene: Scene, frame: int, kind: BlurModel = BlurModel.PROPOSED):
        self.kind = BlurModel(kind)
        self.shape = scene.shape
        self.p0, self.p1 = _frame_params(scene, frame)
        self.m = self.p0.shape[0]
        self.alpha = scene.alpha
        self.fg_weight = np.ascontiguousarray(1.0 - scene.alpha)
        self.alpha_warps = warp_samples(scene.alpha, self.p1)
        self.alpha_mean = _mean(self.alpha_warps)

    def forward(self, bg, fg) -> np.ndarray:
        out = []
        for b, f in zip(_chans(bg), _chans(fg)):
            fw = warp_samples(self.fg_weight * f, self.p1)
            bw = warp_samples(b, self.p0)
            if self.kind is BlurModel.PROPOSED:
                out.append(_mean(fw + self.alpha_warps * bw))
            else:
                out.append(_mean(fw) + self.alpha_mean * _mean(bw))
        return _merge(out, np.ndim(bg))

    def adjoint(self, y):
        bg, fg = [], []
        for yc in _chans(np.asarray(y, dtype=np.float64)):
            tiled = np.broadcast_to(yc, (self.m,) + yc.shape)
            if self.kind is BlurModel.PROPOSED:
                bg.append(warp_samples_adjoint(self.alpha_warps * yc, self.p0) / self.m)
            else:
                bg.append(warp_samples_adjoint(np.broadcast_to(self.alpha_mean * yc, tiled.shape),
                                               self.p0) / self.m)
            fg.append(self.fg_weight * warp_samples_adjoint(tiled, self.p1) / self.m)
        nd = np.ndim(y)
        return _merge(bg, nd), _merge(fg, nd)


class AlphaBlurOperator:
    """``K_A`` of one frame for fixed layers and motions.

    ``forward(A) + offset()`` reproduces the blurred frame, where ``offset``
    is the blurred (non-premultiplied) foreground.
    """

    def __init__(self, scene: Scene, frame: int, kind: BlurModel = BlurModel.PROPOSED):
        self.kind = BlurModel(kind)
        self.shape = scene.shape
        self.ndim = scene.fg.ndim
        self.p0, self.p1 = _frame_params(scene, frame)
        self.m = self.p0.shape[0]
        self.fg = [np.ascontiguousarray(c) for c in _chans(scene.fg)]
        self.bg_warps = [warp_samples(c, self.p0) for c in _chans(scene.bg)]
        if self.kind is BlurModel.CONVENTIONAL:
            self.bg_means = [_mean(bw) for bw in self.bg_warps]

    def offset(self) -> np.ndarray:
        return _merge([_mean(warp_samples(f, self.p1)) for f in self.fg], self.ndim)

    def forward(self, alpha) -> np.ndarray:
        alpha = np.ascontiguousarray(alpha, dtype=np.float64)
        aw = warp_samples(alpha, self.p1)
        out = []
        for c, f in enumerate(self.fg):
            fw = _mean(warp_samples(f * alpha, self.p1))
            if self.kind is BlurModel.PROPOSED:
                out.append(_mean(self.bg_warps[c] * aw) - fw)
            else:
                out.append(self.bg_means[c] * _mean(aw) - fw)
        return _merge(out, self.ndim)

    def adjoint(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64)
        total = np.zeros(self.shape)
        for c, yc in enumerate(_chans(y)):
            tiled = np.broadcast_to(yc, (self.m,) + yc.shape)
            if self.kind is BlurModel.PROPOSED:
                total += warp_samples_adjoint(self.bg_warps[c] * yc, self.p1) / self.m
            else:
                total += warp_samples_adjoint(
                    np.broadcast_to(self.bg_means[c] * yc, tiled.shape), self.p1) / self.m
            total -= self.fg[c] * (warp_samples_adjoint(tiled, self.p1) / self.m)
        return total


def blur_frame(scene: Scene, frame: int, kind: BlurModel = BlurModel.PROPOSED) -> np.ndarray:
    """Linear part of the forward model (no clamping)."""
    return LayerBlurOperator(scene, frame, kind).forward(scene.bg, scene.fg)


def render_blurred_frame(scene: Scene, frame: int,
                         kind: BlurModel = BlurModel.PROPOSED) -> np.ndarray:
    """Blurred frame ``frame`` (0-based), clamped to [0, 1]."""
    return np.clip(blur_frame(scene, frame, kind), 0.0, 1.0)


def extract_pixel_kernels(scene: Scene, frame: int, pixel,
                          kind: BlurModel = BlurModel.PROPOSED):
    """Row of the layer operator at ``pixel = (x, y)``.

    Returns ``(fg_weights, bg_weights)``, dictionaries mapping source pixel
    ``(x, y)`` to its weight on the non-premultiplied foreground and on the
    background.  Accumulated per exposure sample from scalar bilinear taps,
    independently of the vectorised operators.
    """
    kind = BlurModel(kind)
    h, w = scene.shape
    x, y = int(pixel[0]), int(pixel[1])
    if not (0 <= x < w and 0 <= y < h):
        raise IndexError(f"pixel {(x, y)} outside a {w}x{h} image")
    p0, p1 = _frame_params(scene, frame)
    m = p0.shape[0]
    alpha = scene.alpha
    fg_w: dict = {}
    bg_per_sample = []
    alpha_samples = []
    for k in range(m):
        taps1 = bilinear_taps(AffineMotion.from_array(p1[k]), x, y, scene.shape)
        a_k = 0.0
        for (qx, qy), wt in taps1.items():
            a_k += wt * alpha[qy, qx]
            fw = wt * (1.0 - alpha[qy, qx]) / m
            if fw != 0.0:
                fg_w[(qx, qy)] = fg_w.get((qx, qy), 0.0) + fw
        alpha_samples.append(a_k)
        bg_per_sample.append(bilinear_taps(AffineMotion.from_array(p0[k]), x, y, scene.shape))
    alpha_bar = sum(alpha_samples) / m
    bg_w: dict = {}
    for k, taps0 in enumerate(bg_per_sample):
        scale = alpha_samples[k] if kind is BlurModel.PROPOSED else alpha_bar
        if scale == 0.0:
            continue
        for q, wt in taps0.items():
            bg_w[q] = bg_w.get(q, 0.0) + scale * wt / m
    return fg_w, bg_w


def background_visibility(scene: Scene, kind: BlurModel = BlurModel.PROPOSED) -> np.ndarray:
    """Total weight each background pixel receives over all frames (``sum_i K_L0^T 1``)."""
    total = np.zeros(scene.shape)
    ones = np.ones(scene.shape)
    for i in range(scene.n_frames):
        op = LayerBlurOperator(scene, i, kind)
        total += op.adjoint(ones)[0]
    return total


def foreground_visibility(scene: Scene, kind: BlurModel = BlurModel.PROPOSED) -> np.ndarray:
    """Total weight each (non-premultiplied) foreground pixel receives over all frames."""
    total = np.zeros(scene.shape)
    ones = np.ones(scene.shape)
    for i in range(scene.n_frames):
        total += LayerBlurOperator(scene, i, kind).adjoint(ones)[1]
    return total
