"""Restoration quality measures against a known ground-truth scene."""
from __future__ import annotations

import math

import numpy as np

from .model import background_visibility, foreground_visibility
from .types import BACKGROUND, FOREGROUND, BlurModel, Scene, reference_index

PSNR_CAP = 99.0
VISIBLE = 1e-6


def psnr(a, b, mask=None) -> float:
    """``10 log10(1 / MSE)`` on [0, 1] intensities, capped at 99 dB."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if mask is not None:
        keep = np.asarray(mask, dtype=bool)
        if a.ndim == 3:
            keep = np.broadcast_to(keep[..., None], a.shape)
        a, b = a[keep], b[keep]
    if a.size == 0:
        raise ValueError("no pixels to compare")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * math.log10(1.0 / mse))


def recoverable_masks(gt: Scene, kind: BlurModel = BlurModel.PROPOSED):
    """Pixels of each layer that reach at least one frame: ``(background, foreground)``."""
    return background_visibility(gt, kind) > VISIBLE, foreground_visibility(gt, kind) > VISIBLE


def motion_errors(estimate: Scene, gt: Scene) -> dict:
    """Largest translation error (px) and linear-part Frobenius error over the frame motions.

    The auxiliary motion after the last frame is reported separately because
    it only shapes the tail of the last exposure.
    """
    est, ref = estimate.motion_params(), gt.motion_params()
    n = gt.n_frames
    out = {}
    for layer, name in ((BACKGROUND, "background"), (FOREGROUND, "foreground")):
        d = est[layer] - ref[layer]
        trans = np.hypot(d[:, 4], d[:, 5])
        lin = np.linalg.norm(d[:, :4], axis=1)
        out[name] = {"translation_px": float(trans[:n].max()),
                     "linear_frobenius": float(lin[:n].max()),
                     "extra_translation_px": float(trans[n:].max(initial=0.0))}
    return out


def evaluate(estimate: Scene, gt: Scene, frames=None) -> dict:
    """Metrics of ``estimate`` against ``gt``; optionally with the blurred-frame baseline.

    Layer PSNR is taken over recoverable pixels where that layer dominates
    the reference composite, which is also where the blurred middle frame
    is compared for the baseline.
    """
    vis_bg, vis_fg = recoverable_masks(gt)
    masks = {"L0": vis_bg & (gt.alpha >= 0.5), "L1": vis_fg & (gt.alpha < 0.5)}
    layers = {"L0": (estimate.bg, gt.bg), "L1": (estimate.fg, gt.fg)}
    report = {"mask_mae": float(np.mean(np.abs(estimate.alpha - gt.alpha)))}
    scored = [name for name in layers if masks[name].any()]
    report["psnr"] = {name: round(psnr(*layers[name], masks[name]), 2) if name in scored
                      else None for name in layers}
    if frames is not None:
        mid = np.asarray(frames[reference_index(len(frames))])
        report["baseline_psnr"] = {name: round(psnr(mid, layers[name][1], masks[name]), 2)
                                   if name in scored else None for name in layers}
    report["recoverable_pixels"] = {name: int(m.sum()) for name, m in masks.items()}
    if len(estimate.motions[0]) == len(gt.motions[0]):
        report["motion"] = motion_errors(estimate, gt)
    return report
