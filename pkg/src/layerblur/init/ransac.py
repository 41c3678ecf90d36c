"""Sequential RANSAC for the two dominant affine motions of a flow field."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import SingleMotionError
from ..types import AffineMotion
from .flow import FlowField

LABEL_A, LABEL_B, OUTLIER = 0, 1, -1
_CHUNK = 256


@dataclass(frozen=True)
class RansacConfig:
    iterations: int = 2000
    inlier_threshold: float = 1.0
    min_inlier_fraction: float = 0.15
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be positive")
        if self.inlier_threshold <= 0:
            raise ValueError("inlier_threshold must be positive")
        if not 0 <= self.min_inlier_fraction <= 1:
            raise ValueError("min_inlier_fraction must lie in [0, 1]")


class OneMotionFound(SingleMotionError):
    """Second fit failed; ``motion`` and ``labels`` describe the one motion found."""

    def __init__(self, message, motion, labels):
        super().__init__(message)
        self.motion = motion
        self.labels = labels


def _design(src):
    return np.column_stack([src, np.ones(len(src))])


def fit_affine(src, dst) -> AffineMotion:
    """Least-squares affine map taking ``src`` points to ``dst`` points."""
    coef, *_ = np.linalg.lstsq(_design(src), dst, rcond=None)
    return AffineMotion(coef[0, 0], coef[1, 0], coef[0, 1], coef[1, 1], coef[2, 0], coef[2, 1])


def residuals(motion: AffineMotion, src, dst) -> np.ndarray:
    px, py = motion.apply(src[:, 0], src[:, 1])
    return np.hypot(px - dst[:, 0], py - dst[:, 1])


def _ransac_one(src, dst, cfg, rng):
    """Best affine over random 3-point samples, refit on its inliers."""
    n = len(src)
    design = _design(src)
    best_count, best_coef = -1, None
    for start in range(0, cfg.iterations, _CHUNK):
        k = min(_CHUNK, cfg.iterations - start)
        idx = rng.integers(0, n, size=(k, 3))
        mats = design[idx]
        dets = np.linalg.det(mats)
        good = np.abs(dets) > 1e-9
        if not good.any():
            continue
        coefs = np.linalg.solve(mats[good], dst[idx[good]])  # (g, 3, 2)
        pred = np.einsum("nk,gkc->gnc", design, coefs)
        err = np.hypot(pred[..., 0] - dst[:, 0], pred[..., 1] - dst[:, 1])
        counts = (err < cfg.inlier_threshold).sum(axis=1)
        j = int(np.argmax(counts))
        if counts[j] > best_count:
            best_count, best_coef = int(counts[j]), coefs[j]
    if best_coef is None:
        # every sample was collinear: fall back to a global fit
        motion = fit_affine(src, dst)
    else:
        motion = AffineMotion(best_coef[0, 0], best_coef[1, 0], best_coef[0, 1],
                              best_coef[1, 1], best_coef[2, 0], best_coef[2, 1])
    for _ in range(3):
        inliers = residuals(motion, src, dst) < cfg.inlier_threshold
        if inliers.sum() < 3:
            break
        motion = fit_affine(src[inliers], dst[inliers])
    return motion, residuals(motion, src, dst) < cfg.inlier_threshold


def flow_correspondences(flow: FlowField):
    h, w = flow.u.shape
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    src = np.column_stack([xs.ravel(), ys.ravel()])
    dst = src + np.column_stack([flow.u.ravel(), flow.v.ravel()])
    return src, dst


def ransac_two_affine(flow: FlowField, config: RansacConfig = RansacConfig()):
    """Two dominant affine motions of ``flow`` and a per-pixel label map.

    Motions map first-image pixels to their flow targets.  Labels are
    ``0`` (motion a, the larger support), ``1`` (motion b) or ``-1``
    (outlier).  Raises :class:`OneMotionFound` if the second motion explains
    less than ``min_inlier_fraction`` of the pixels.
    """
    rng = np.random.default_rng(config.seed)
    src, dst = flow_correspondences(flow)
    shape = flow.u.shape
    n = len(src)
    motion_a, inl_a = _ransac_one(src, dst, config, rng)
    rest = ~inl_a
    if rest.sum() < 3:
        labels = np.where(inl_a, LABEL_A, OUTLIER).reshape(shape)
        raise OneMotionFound("flow is explained by a single motion", motion_a, labels)
    motion_b, inl_b = _ransac_one(src[rest], dst[rest], config, rng)
    if inl_b.sum() < config.min_inlier_fraction * n:
        labels = np.where(inl_a, LABEL_A, OUTLIER).reshape(shape)
        raise OneMotionFound(
            f"second motion explains only {inl_b.sum() / n:.1%} of the pixels", motion_a, labels)

    motions = [motion_a, motion_b]
    for _ in range(2):
        errs = np.stack([residuals(m, src, dst) for m in motions])
        best = np.argmin(errs, axis=0)
        ok = errs[best, np.arange(n)] < config.inlier_threshold
        for k in (LABEL_A, LABEL_B):
            sel = ok & (best == k)
            if sel.sum() >= 3:
                motions[k] = fit_affine(src[sel], dst[sel])
    errs = np.stack([residuals(m, src, dst) for m in motions])
    best = np.argmin(errs, axis=0)
    ok = errs[best, np.arange(n)] < config.inlier_threshold
    labels = np.where(ok, best, OUTLIER)
    if (labels == LABEL_B).sum() > (labels == LABEL_A).sum():
        motions.reverse()
        labels = np.where(labels == OUTLIER, OUTLIER, 1 - labels)
    return motions[0], motions[1], labels.reshape(shape)
