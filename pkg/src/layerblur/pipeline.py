"""Coarse-to-fine deblurring: pyramid, initialization and alternation per level."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .init import RansacConfig, aligned_average, initialize
from .pyramid import downsample, level_shapes, resize_scene, scale_motions
from .solver import SolverConfig, alternate
from .types import BACKGROUND, FOREGROUND, BlurModel, CaptureTiming, Scene
from .warp import default_sample_count


@dataclass(frozen=True)
class RunConfig:
    """Settings of a deblurring run; loaded from JSON with unknown keys rejected."""

    solver: SolverConfig = field(default_factory=SolverConfig)
    pyramid_scale: float = 0.8
    min_level_size: int = 32
    duty_cycle: float = 0.5
    samples: int | str = "auto"
    model: str = "proposed"
    seed: int = 0
    ransac_iterations: int = 2000
    fg_label: str = "auto"

    def __post_init__(self):
        if not 0 < self.pyramid_scale < 1:
            raise ValueError("pyramid_scale must lie in (0, 1)")
        if not 0 < self.duty_cycle <= 1:
            raise ValueError("duty_cycle must lie in (0, 1]")
        if self.min_level_size < 1:
            raise ValueError("min_level_size must be positive")
        if not (self.samples == "auto" or (isinstance(self.samples, int) and self.samples > 0)):
            raise ValueError("samples must be a positive integer or 'auto'")
        if self.fg_label not in ("a", "b", "auto"):
            raise ValueError("fg_label must be 'a', 'b' or 'auto'")
        BlurModel(self.model)

    @property
    def kind(self) -> BlurModel:
        return BlurModel(self.model)

    @classmethod
    def from_dict(cls, doc: dict) -> RunConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        doc = dict(doc)
        if "solver" in doc:
            doc["solver"] = SolverConfig.from_dict(doc["solver"])
        return cls(**doc)

    @classmethod
    def load(cls, path) -> RunConfig:
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        doc = {f.name: getattr(self, f.name) for f in fields(self)}
        doc["solver"] = self.solver.to_dict()
        return doc

    def with_overrides(self, **kw) -> RunConfig:
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


@dataclass
class DeblurResult:
    scene: Scene
    trace: list
    level_shapes: list
    level_initial: dict = field(default_factory=dict)  # level -> EnergyBreakdown


def _level_timing(cfg: RunConfig, motions, shape, n_frames) -> CaptureTiming:
    if cfg.samples == "auto":
        m = default_sample_count(motions, cfg.duty_cycle, shape)
    else:
        m = int(cfg.samples)
    return CaptureTiming(duty_cycle=cfg.duty_cycle, samples=m, frames=n_frames)


def ground_truth_start(frames, gt: Scene) -> Scene:
    """Start from the true motions and mask with layers averaged from the frames.

    Layers are never copied from the truth, so they still have to be
    deblurred.
    """
    return Scene(aligned_average(frames, gt.motions[FOREGROUND]),
                 aligned_average(frames, gt.motions[BACKGROUND]),
                 gt.alpha.copy(), gt.motions, gt.timing)


def deblur(frames, config: RunConfig = RunConfig(), ground_truth: Scene | None = None,
           on_step=None) -> DeblurResult:
    """Restore layers, mask and motions from blurred ``frames``.

    With ``ground_truth`` the coarsest level starts from its motions and
    mask (see :func:`ground_truth_start`); otherwise from flow-based
    initialization.  ``on_step(label, energy)`` sees every trace entry.
    """
    frames = [np.asarray(f, dtype=np.float64) for f in frames]
    n = len(frames)
    if n < 2:
        raise ValueError("deblurring needs at least two frames")
    shape = frames[0].shape
    if any(f.shape != shape for f in frames):
        raise ValueError("all frames must share dimensions")
    shapes = level_shapes(shape, config.pyramid_scale, config.min_level_size)
    factors = [config.pyramid_scale ** k for k in range(len(shapes))]
    out = DeblurResult(None, [], shapes)
    scene = None
    for level in range(len(shapes) - 1, -1, -1):
        lshape = shapes[level]
        lframes = [downsample(f, lshape, factors[level]) if level else f for f in frames]
        if scene is None:
            if ground_truth is not None:
                motions = scale_motions(ground_truth.motions, factors[level])
                gt_level = Scene(downsample(ground_truth.fg, lshape, factors[level]),
                                 downsample(ground_truth.bg, lshape, factors[level]),
                                 downsample(ground_truth.alpha, lshape, factors[level]),
                                 motions, _level_timing(config, motions, lshape, n))
                scene = ground_truth_start(lframes, gt_level)
            else:
                scene = initialize(lframes, config.duty_cycle,
                                   RansacConfig(iterations=config.ransac_iterations,
                                                seed=config.seed),
                                   fg_label=config.fg_label,
                                   samples=None if config.samples == "auto" else config.samples)
        else:
            scene = resize_scene(scene, lshape, factors[level] / factors[level + 1])
        timing = _level_timing(config, scene.motions, lshape, n)
        scene = Scene(scene.fg, scene.bg, scene.alpha, scene.motions, timing)
        result = alternate(scene, lframes, config.solver, config.kind,
                           prefix=f"level{level}/", on_step=on_step)
        scene = result.scene
        out.trace.extend(result.trace)
        out.level_initial[level] = result.initial
    out.scene = scene
    return out
