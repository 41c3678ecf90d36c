"""Synthetic layered scenes and blurred sequences with known ground truth.

A :class:`SceneScript` describes two layer textures, a foreground mask and
per-layer trajectories; :func:`render_sequence` turns it into blurred frames.
Scripts round-trip through JSON::

    {
      "width": 64, "height": 64, "channels": 1, "frames": 5,
      "duty_cycle": 0.5, "samples": "auto", "noise_sigma": 0.0, "seed": 0,
      "foreground": {"type": "checkerboard", "period": 8, "low": 0.1, "high": 0.9},
      "background": {"type": "noise", "smooth": 2.0},
      "mask": {"type": "disk", "center": [32, 32], "radius": 12},
      "trajectories": {"foreground": {"velocity": [-4, 0]},
                       "background": [[1, 0, 0, 1, 0, 0], ...]}
    }

Textures: ``constant`` (value), ``checkerboard`` (period, low, high),
``noise`` (smooth, low, high, salt), ``file`` (path).  Masks mark the
foreground region (``A = 0`` inside): ``disk`` (center, radius), ``bar``
(x0, y0, x1, y1, inclusive), ``fence`` (period, bar_width, offset,
orientation), ``constant`` (value of ``A``), ``file`` (path, ``A = value/255``).
A trajectory is either ``frames + 1`` affine parameter rows or
``{"velocity": [vx, vy]}``: apparent image motion in pixels per frame,
zero at the middle (reference) frame.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import SizeError
from .io import read_png
from .model import LayerBlurOperator, render_blurred_frame
from .types import AffineMotion, BlurModel, CaptureTiming, Scene, reference_index
from .warp import default_sample_count

MAX_DENSE_PIXELS = 4096

_SCRIPT_KEYS = {"width", "height", "channels", "frames", "duty_cycle", "samples",
                "noise_sigma", "seed", "foreground", "background", "mask", "trajectories"}


@dataclass
class SceneScript:
    width: int
    height: int
    frames: int
    foreground: dict
    background: dict
    mask: dict
    trajectories: dict
    channels: int = 1
    duty_cycle: float = 0.5
    samples: int | str = "auto"
    noise_sigma: float = 0.0
    seed: int = 0
    base_dir: Path | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.width < 1 or self.height < 1 or self.frames < 1:
            raise ValueError("width, height and frames must be positive")
        if self.channels not in (1, 3):
            raise ValueError("channels must be 1 or 3")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        if not (self.samples == "auto" or (isinstance(self.samples, int) and self.samples > 0)):
            raise ValueError("samples must be a positive integer or 'auto'")
        if set(self.trajectories) != {"foreground", "background"}:
            raise ValueError("trajectories needs exactly 'foreground' and 'background'")
        for name in ("foreground", "background"):
            traj = self.trajectories[name]
            if isinstance(traj, list) and len(traj) != self.frames + 1:
                raise ValueError(f"{name} trajectory needs {self.frames + 1} motions, got {len(traj)}")

    @classmethod
    def from_dict(cls, doc: dict, base_dir=None) -> SceneScript:
        unknown = set(doc) - _SCRIPT_KEYS
        if unknown:
            raise ValueError(f"unknown script keys: {sorted(unknown)}")
        missing = {"width", "height", "frames", "foreground", "background", "mask",
                   "trajectories"} - set(doc)
        if missing:
            raise ValueError(f"missing script keys: {sorted(missing)}")
        return cls(**doc, base_dir=Path(base_dir) if base_dir else None)

    @classmethod
    def load(cls, path) -> SceneScript:
        path = Path(path)
        return cls.from_dict(json.loads(path.read_text()), base_dir=path.parent)

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc.pop("base_dir")
        return doc

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @property
    def shape(self):
        return (self.height, self.width)

    def trajectory(self, name: str) -> list[AffineMotion]:
        traj = self.trajectories[name]
        if isinstance(traj, dict):
            if set(traj) != {"velocity"}:
                raise ValueError(f"unsupported trajectory form for {name}: {sorted(traj)}")
            vx, vy = (float(v) for v in traj["velocity"])
            ref = reference_index(self.frames)
            return [AffineMotion.translation(-vx * (i - ref), -vy * (i - ref))
                    for i in range(self.frames + 1)]
        return [AffineMotion.from_array(p).validate() for p in traj]

    def _resolve(self, path) -> Path:
        p = Path(path)
        if not p.is_absolute() and self.base_dir is not None:
            p = self.base_dir / p
        return p

    def texture(self, spec: dict, salt: int) -> np.ndarray:
        h, w = self.shape
        kind = spec.get("type")
        if kind == "constant":
            value = np.broadcast_to(np.asarray(spec.get("value", 0.5), dtype=float), (self.channels,))
            img = np.ones((h, w, self.channels)) * value
        elif kind == "checkerboard":
            period = int(spec.get("period", 8))
            ys, xs = np.mgrid[0:h, 0:w]
            on = ((xs // period) + (ys // period)) % 2 == 1
            img = np.where(on, spec.get("high", 0.9), spec.get("low", 0.1)).astype(float)
            img = np.repeat(img[:, :, None], self.channels, axis=2)
        elif kind == "noise":
            rng = np.random.default_rng([self.seed, salt, int(spec.get("salt", 0))])
            img = rng.random((h, w, self.channels))
            smooth = float(spec.get("smooth", 0.0))
            if smooth > 0:
                img = ndimage.gaussian_filter(img, sigma=(smooth, smooth, 0), mode="reflect")
            lo, hi = float(spec.get("low", 0.0)), float(spec.get("high", 1.0))
            span = img.max() - img.min()
            img = lo + (hi - lo) * (img - img.min()) / (span if span > 0 else 1.0)
        elif kind == "file":
            img = read_png(self._resolve(spec["path"]))
            if img.ndim == 2:
                img = np.repeat(img[:, :, None], self.channels, axis=2)
            elif self.channels == 1:
                img = img.mean(axis=2, keepdims=True)
            if img.shape[:2] != (h, w):
                raise ValueError(f"{spec['path']}: size {img.shape[:2]} does not match script {(h, w)}")
        else:
            raise ValueError(f"unknown texture type {kind!r}")
        return img[:, :, 0] if self.channels == 1 else img

    def alpha(self) -> np.ndarray:
        h, w = self.shape
        spec = self.mask
        kind = spec.get("type")
        ys, xs = np.mgrid[0:h, 0:w]
        if kind == "disk":
            cx, cy = spec.get("center", [(w - 1) / 2, (h - 1) / 2])
            inside = (xs - cx) ** 2 + (ys - cy) ** 2 <= float(spec["radius"]) ** 2
        elif kind == "bar":
            inside = ((xs >= spec["x0"]) & (xs <= spec["x1"])
                      & (ys >= spec["y0"]) & (ys <= spec["y1"]))
        elif kind == "fence":
            coord = xs if spec.get("orientation", "vertical") == "vertical" else ys
            phase = (coord - int(spec.get("offset", 0))) % int(spec["period"])
            inside = phase < int(spec["bar_width"])
        elif kind == "constant":
            return np.full((h, w), float(spec["value"]))
        elif kind == "file":
            a = read_png(self._resolve(spec["path"]))
            a = a.mean(axis=2) if a.ndim == 3 else a
            if a.shape != (h, w):
                raise ValueError(f"{spec['path']}: size {a.shape} does not match script {(h, w)}")
            return a
        else:
            raise ValueError(f"unknown mask type {kind!r}")
        return np.where(inside, 0.0, 1.0)

    def build_scene(self) -> Scene:
        motions = [self.trajectory("background"), self.trajectory("foreground")]
        if self.samples == "auto":
            m = default_sample_count(motions, self.duty_cycle, self.shape)
        else:
            m = int(self.samples)
        timing = CaptureTiming(duty_cycle=self.duty_cycle, samples=m, frames=self.frames)
        return Scene(fg=self.texture(self.foreground, salt=1),
                     bg=self.texture(self.background, salt=0),
                     alpha=self.alpha(), motions=motions, timing=timing)


def render_sequence(script: SceneScript, kind: BlurModel = BlurModel.PROPOSED):
    """Blurred frames of ``script`` plus the exact scene that produced them.

    Gaussian noise of ``noise_sigma`` is added to the clamped render and the
    result is clamped again.
    """
    scene = script.build_scene()
    frames = [render_blurred_frame(scene, i, kind) for i in range(scene.n_frames)]
    if script.noise_sigma > 0:
        rng = np.random.default_rng([script.seed, 7919])
        frames = [np.clip(f + rng.normal(0.0, script.noise_sigma, f.shape), 0.0, 1.0)
                  for f in frames]
    return frames, scene


def dense_operator(scene: Scene, frame: int, kind: BlurModel = BlurModel.PROPOSED) -> np.ndarray:
    """Explicit ``[K_L0 | K_L1]`` of one frame, built column by column.

    Single-channel scenes only; intended for tiny test problems.
    """
    h, w = scene.shape
    n = h * w
    if n > MAX_DENSE_PIXELS:
        raise SizeError(f"{n} pixels exceeds the dense limit of {MAX_DENSE_PIXELS}")
    op = LayerBlurOperator(scene, frame, kind)
    zero = np.zeros((h, w))
    mat = np.empty((n, 2 * n))
    basis = np.zeros(n)
    for j in range(n):
        basis[j] = 1.0
        e = basis.reshape(h, w)
        mat[:, j] = op.forward(e, zero).ravel()
        mat[:, n + j] = op.forward(zero, e).ravel()
        basis[j] = 0.0
    return mat


def fence_script(size: int = 32, frames: int = 3, fg_speed: float = 16.0,
                 bg_speed: float = 8.0, period: int = 16, bar_width: int = 5) -> SceneScript:
    """Dark vertical bars sliding left over a bright texture that lags behind.

    Both layers move the same way, the near fence faster, as under camera
    parallax.  With the defaults every exposure sample shifts the fence by
    two pixels and the texture by one, so occlusion is exact and some
    background pixels stay behind a bar for the whole exposure while their
    neighbourhood is uncovered at other times.
    """
    return SceneScript(
        width=size, height=size, frames=frames, duty_cycle=0.5, samples=4, seed=3,
        foreground={"type": "constant", "value": 0.1},
        background={"type": "noise", "smooth": 1.0, "low": 0.0, "high": 1.0},
        mask={"type": "fence", "period": period, "bar_width": bar_width, "offset": 2},
        trajectories={"foreground": {"velocity": [-fg_speed, 0.0]},
                      "background": {"velocity": [-bg_speed, 0.0]}},
    )


def _random_trajectory(rng, frames, moving=True, max_speed=5.0):
    base = np.array([1, 0, 0, 1, 0, 0], dtype=float)
    if not moving:
        const = base + np.concatenate([rng.uniform(-0.02, 0.02, 4), rng.uniform(-2, 2, 2)])
        return [AffineMotion.from_array(const) for _ in range(frames + 1)]
    v = rng.uniform(-max_speed, max_speed, 2)
    drift = rng.uniform(-0.01, 0.01, 4)
    out = []
    for i in range(frames + 1):
        p = base.copy()
        p[:4] += drift * i
        p[4:] += v * i + rng.uniform(-0.5, 0.5, 2)
        out.append(AffineMotion.from_array(p))
    return out


def random_scene(rng, size: int = 64, condition: str = "control", frames: int = 2,
                 samples: int = 6, duty_cycle: float = 0.5) -> Scene:
    """Random scene satisfying one of the model-equivalence conditions.

    ``condition`` is ``static_background``, ``static_foreground``,
    ``homogeneous_background`` or ``control`` (both layers moving over a
    textured background).
    """
    fg = ndimage.gaussian_filter(rng.random((size, size)), 1.5)
    fg = (fg - fg.min()) / (np.ptp(fg) or 1.0)
    if condition == "homogeneous_background":
        bg = np.full((size, size), rng.uniform(0.1, 0.9))
    else:
        bg = ndimage.gaussian_filter(rng.random((size, size)), 1.0)
        bg = (bg - bg.min()) / (np.ptp(bg) or 1.0)
    ys, xs = np.mgrid[0:size, 0:size]
    cx, cy = rng.uniform(0.3, 0.7, 2) * size
    radius = rng.uniform(0.15, 0.3) * size
    alpha = np.where((xs - cx) ** 2 + (ys - cy) ** 2 <= radius ** 2, 0.0, 1.0)
    alpha = ndimage.gaussian_filter(alpha, rng.uniform(0.0, 1.0))
    motions = [_random_trajectory(rng, frames, moving=condition != "static_background"),
               _random_trajectory(rng, frames, moving=condition != "static_foreground")]
    timing = CaptureTiming(duty_cycle=duty_cycle, samples=samples, frames=frames)
    return Scene(fg=fg, bg=bg, alpha=np.clip(alpha, 0, 1), motions=motions, timing=timing)


@dataclass
class SpecialCaseReport:
    static_background: float
    static_foreground: float
    homogeneous_background: float
    control: float

    @property
    def passed(self) -> bool:
        eq = max(self.static_background, self.static_foreground, self.homogeneous_background)
        return eq < 1e-6 and self.control > 1e-3


def model_difference(scene: Scene) -> np.ndarray:
    """Per-frame absolute difference between the two blur models, ``(N, h, w[, c])``."""
    return np.stack([np.abs(render_blurred_frame(scene, i, BlurModel.PROPOSED)
                            - render_blurred_frame(scene, i, BlurModel.CONVENTIONAL))
                     for i in range(scene.n_frames)])


def check_special_cases(seed: int, size: int = 64) -> SpecialCaseReport:
    """Render both models on one random scene per equivalence condition."""
    rng = np.random.default_rng(seed)
    diffs = {}
    for cond in ("static_background", "static_foreground", "homogeneous_background", "control"):
        diffs[cond] = float(model_difference(random_scene(rng, size, cond)).max())
    return SpecialCaseReport(**diffs)
