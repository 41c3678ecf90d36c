"""Bootstrapping a scene from blurred frames: motions, layers and mask."""
from __future__ import annotations

import numpy as np
from scipy import ndimage

from ..errors import DegenerateMaskError, ShapeError
from ..types import BACKGROUND, FOREGROUND, AffineMotion, CaptureTiming, Scene, reference_index
from ..warp import default_sample_count, warp_affine
from .flow import FlowField, compute_flow
from .ransac import LABEL_A, LABEL_B, OUTLIER, RansacConfig, ransac_two_affine


def aligned_average(images, trajectory) -> np.ndarray:
    """Mean of ``images[i]`` warped to reference coordinates by ``trajectory[i]``, clamped."""
    return np.clip(np.mean([warp_affine(img, trajectory[i].inverse())
                            for i, img in enumerate(images)], axis=0), 0.0, 1.0)


def init_scene(frames, motions, background_masks, timing: CaptureTiming) -> Scene:
    """Aligned-average layers and mask.

    ``motions[l]`` holds ``N + 1`` frame-to-reference motions of layer ``l``;
    ``background_masks[i]`` is 1 where frame ``i`` shows the background.
    Each layer is the mean of the frames warped into reference coordinates
    by its motion; the mask is the mean of the background masks aligned by
    the foreground motion.
    """
    frames = [np.asarray(f, dtype=np.float64) for f in frames]
    masks = [np.asarray(m, dtype=np.float64) for m in background_masks]
    n = len(frames)
    if n == 0 or len(masks) != n:
        raise ShapeError("need one background mask per frame")
    shape = frames[0].shape
    if any(f.shape != shape for f in frames) or any(m.shape != shape[:2] for m in masks):
        raise ShapeError("frames and masks must share dimensions")
    total = sum(float(m.sum()) for m in masks)
    if total == 0.0 or total == n * masks[0].size:
        raise DegenerateMaskError("label regions are empty: every pixel has the same layer")

    bg = aligned_average(frames, motions[BACKGROUND])
    fg = aligned_average(frames, motions[FOREGROUND])
    alpha = aligned_average(masks, motions[FOREGROUND])
    return Scene(fg, bg, alpha, [list(m) for m in motions], timing)


def _fill_outliers(labels, frame, target, motions, window=5):
    """Give each outlier the motion with the lower local warping residual."""
    outlier = labels == OUTLIER
    if not outlier.any():
        return labels
    gray = frame.mean(axis=2) if frame.ndim == 3 else frame
    tgray = target.mean(axis=2) if target.ndim == 3 else target
    res = [ndimage.uniform_filter(np.abs(gray - warp_affine(tgray, m)), window) for m in motions]
    return np.where(outlier, np.argmin(res, axis=0), labels)


def _match_layers(per_frame):
    """Swap per-frame motion pairs so label 0 tracks the same layer in every frame.

    Motions are compared as apparent velocities (translation divided by the
    frame gap of the flow), matched against the first frame's pair.
    """
    def velocities(entry):
        ma, mb, _, gap = entry
        return ma.offset / gap, mb.offset / gap

    ua, ub = velocities(per_frame[0])
    out = [per_frame[0]]
    for entry in per_frame[1:]:
        va, vb = velocities(entry)
        keep = np.linalg.norm(va - ua) + np.linalg.norm(vb - ub)
        swap = np.linalg.norm(va - ub) + np.linalg.norm(vb - ua)
        if swap < keep:
            ma, mb, lab, gap = entry
            lab = np.where(lab == OUTLIER, OUTLIER, 1 - lab)
            entry = (mb, ma, lab, gap)
        out.append(entry)
    return out


def extrapolate_last(motions):
    """Append the motion after the last frame by linear extrapolation."""
    if len(motions) < 2:
        return list(motions) + [motions[-1]]
    nxt = 2.0 * motions[-1].as_array() - motions[-2].as_array()
    candidate = AffineMotion.from_array(nxt)
    return list(motions) + [candidate if candidate.is_valid() else motions[-1]]


def choose_foreground(labels, fg_label: str = "auto") -> int:
    """Label value (0 or 1) of the foreground motion.

    ``auto`` picks the label with the smaller total area over all frames.
    """
    if fg_label == "a":
        return LABEL_A
    if fg_label == "b":
        return LABEL_B
    if fg_label != "auto":
        raise ValueError(f"fg_label must be 'a', 'b' or 'auto', not {fg_label!r}")
    area_a = sum(int((lab == LABEL_A).sum()) for lab in labels)
    area_b = sum(int((lab == LABEL_B).sum()) for lab in labels)
    return LABEL_A if area_a < area_b else LABEL_B


def initialize(frames, duty_cycle: float = 0.5, ransac: RansacConfig = RansacConfig(),
               fg_label: str = "auto", flows=None, samples: int | None = None) -> Scene:
    """Full initialization from blurred frames.

    For every non-reference frame a flow toward the reference frame is fitted
    with two affine motions, which are then frame-to-reference motions.  The
    reference frame is labelled from its flow toward a neighbour.  ``flows``
    optionally supplies precomputed :class:`FlowField` objects (one per
    frame, the reference entry being its flow toward the neighbour).
    ``fg_label`` ``a``/``b`` names the foreground by its RANSAC label in
    the first frame.
    """
    frames = [np.asarray(f, dtype=np.float64) for f in frames]
    n = len(frames)
    if n < 2:
        raise ShapeError("initialization needs at least two frames")
    ref = reference_index(n)
    per_frame = []
    for i in range(n):
        target = ref if i != ref else (ref + 1 if ref + 1 < n else ref - 1)
        flow = flows[i] if flows is not None else compute_flow(frames[i], frames[target])
        if not isinstance(flow, FlowField):
            flow = FlowField(*flow)
        ma, mb, lab = ransac_two_affine(flow, ransac)
        lab = _fill_outliers(lab, frames[i], frames[target], (ma, mb))
        per_frame.append((ma, mb, lab, target - i))
    per_frame = _match_layers(per_frame)

    labels = [lab for _, _, lab, _ in per_frame]
    fg = choose_foreground(labels, fg_label)
    fg_traj, bg_traj, masks = [], [], []
    for i, (ma, mb, lab, _) in enumerate(per_frame):
        pair = (ma, mb)
        if i == ref:
            fg_traj.append(AffineMotion.identity())
            bg_traj.append(AffineMotion.identity())
        else:
            fg_traj.append(pair[fg].validate())
            bg_traj.append(pair[1 - fg].validate())
        masks.append(lab == 1 - fg)
    motions = [extrapolate_last(bg_traj), extrapolate_last(fg_traj)]
    if samples is None:
        samples = default_sample_count(motions, duty_cycle, frames[0].shape[:2])
    timing = CaptureTiming(duty_cycle=duty_cycle, samples=samples, frames=n)
    return init_scene(frames, motions, masks, timing)
