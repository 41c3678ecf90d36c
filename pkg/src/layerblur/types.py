"""Domain types: affine motions, capture timing and the layered scene.

Images are plain float64 numpy arrays, ``(h, w)`` for single-channel data
and ``(h, w, c)`` for colour.  The alpha mask is always ``(h, w)`` and
``A == 1`` marks a background pixel.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidMotionError, ShapeError

BACKGROUND = 0
FOREGROUND = 1


class BlurModel(enum.Enum):
    """Which layered blur generative model to apply."""

    PROPOSED = "proposed"
    CONVENTIONAL = "conventional"


@dataclass(frozen=True)
class AffineMotion:
    """Map from frame coordinates to reference coordinates.

    ``p_ref = [[a11, a12], [a21, a22]] @ p_frame + (tx, ty)`` with points
    written as ``(x, y) = (column, row)``.
    """

    a11: float = 1.0
    a12: float = 0.0
    a21: float = 0.0
    a22: float = 1.0
    tx: float = 0.0
    ty: float = 0.0

    @classmethod
    def identity(cls) -> AffineMotion:
        return cls()

    @classmethod
    def translation(cls, tx: float, ty: float = 0.0) -> AffineMotion:
        return cls(tx=float(tx), ty=float(ty))

    @classmethod
    def from_array(cls, params) -> AffineMotion:
        p = [float(v) for v in np.asarray(params, dtype=np.float64).ravel()]
        if len(p) != 6:
            raise ValueError(f"expected 6 affine parameters, got {len(p)}")
        return cls(*p)

    def as_array(self) -> np.ndarray:
        return np.array([self.a11, self.a12, self.a21, self.a22, self.tx, self.ty])

    @property
    def linear(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a21, self.a22]])

    @property
    def offset(self) -> np.ndarray:
        return np.array([self.tx, self.ty])

    @property
    def determinant(self) -> float:
        return self.a11 * self.a22 - self.a12 * self.a21

    def is_valid(self) -> bool:
        return all(math.isfinite(v) for v in self.as_array()) and self.determinant > 0

    def validate(self) -> AffineMotion:
        if not self.is_valid():
            raise InvalidMotionError(f"motion is not invertible: {self}")
        return self

    def apply(self, x, y):
        return (self.a11 * x + self.a12 * y + self.tx,
                self.a21 * x + self.a22 * y + self.ty)

    def inverse(self) -> AffineMotion:
        self.validate()
        inv = np.linalg.inv(self.linear)
        t = -inv @ self.offset
        return AffineMotion(inv[0, 0], inv[0, 1], inv[1, 0], inv[1, 1], t[0], t[1])

    def compose(self, other: AffineMotion) -> AffineMotion:
        """Return ``self o other`` (apply ``other`` first)."""
        lin = self.linear @ other.linear
        t = self.linear @ other.offset + self.offset
        return AffineMotion(lin[0, 0], lin[0, 1], lin[1, 0], lin[1, 1], t[0], t[1])

    def scale_translation(self, factor: float) -> AffineMotion:
        return replace(self, tx=self.tx * factor, ty=self.ty * factor)


@dataclass(frozen=True)
class CaptureTiming:
    """Exposure sampling: ``samples`` times ``t_k = k / samples`` of the exposure."""

    duty_cycle: float = 0.5
    samples: int = 8
    frames: int = 1

    def __post_init__(self):
        if not 0.0 < self.duty_cycle <= 1.0:
            raise ValueError(f"duty cycle must lie in (0, 1], got {self.duty_cycle}")
        if int(self.samples) < 1:
            raise ValueError("sample count must be positive")
        if int(self.frames) < 1:
            raise ValueError("frame count must be positive")

    @property
    def fractions(self) -> np.ndarray:
        return np.arange(self.samples, dtype=np.float64) / self.samples


def as_image(data, name: str = "image") -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim not in (2, 3) or arr.size == 0:
        raise ShapeError(f"{name} must be a non-empty (h, w) or (h, w, c) array")
    if arr.ndim == 3 and arr.shape[2] not in (1, 3):
        raise ShapeError(f"{name} must have 1 or 3 channels")
    return arr


def as_mask(data, name: str = "mask") -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    if arr.ndim != 2 or arr.size == 0:
        raise ShapeError(f"{name} must be a single-channel (h, w) array")
    return arr


@dataclass
class Scene:
    """Unknowns of the layered model.

    ``fg`` is the foreground layer (not pre-multiplied by ``1 - A``), ``bg``
    the background, ``alpha`` the mask.  ``motions[l][i]`` is the motion of
    layer ``l`` (0 = background, 1 = foreground) at shutter opening of frame
    ``i``; each layer carries ``frames + 1`` motions so the last exposure can
    be interpolated.
    """

    fg: np.ndarray
    bg: np.ndarray
    alpha: np.ndarray
    motions: list[list[AffineMotion]]
    timing: CaptureTiming = field(default_factory=CaptureTiming)

    def __post_init__(self):
        self.fg = as_image(self.fg, "foreground layer")
        self.bg = as_image(self.bg, "background layer")
        self.alpha = as_mask(self.alpha, "alpha mask")
        if self.fg.shape != self.bg.shape:
            raise ShapeError(f"layer shapes differ: {self.fg.shape} vs {self.bg.shape}")
        if self.fg.shape[:2] != self.alpha.shape:
            raise ShapeError(f"mask shape {self.alpha.shape} does not match layers")
        if len(self.motions) != 2:
            raise ValueError("motions must hold one trajectory per layer")
        self.motions = [[m.validate() for m in traj] for traj in self.motions]
        for traj in self.motions:
            if len(traj) != self.timing.frames + 1:
                raise ValueError(
                    f"each trajectory needs {self.timing.frames + 1} motions, got {len(traj)}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.alpha.shape

    @property
    def n_frames(self) -> int:
        return self.timing.frames

    def motion_params(self) -> np.ndarray:
        """Motions as an array of shape ``(2, frames + 1, 6)``."""
        return np.array([[m.as_array() for m in traj] for traj in self.motions])

    def with_motion_params(self, params) -> Scene:
        params = np.asarray(params, dtype=np.float64)
        motions = [[AffineMotion.from_array(p) for p in traj] for traj in params]
        return replace(self, motions=motions)

    def copy(self) -> Scene:
        return Scene(self.fg.copy(), self.bg.copy(), self.alpha.copy(),
                     [list(t) for t in self.motions], self.timing)


def reference_index(n_frames: int) -> int:
    """0-based index of the middle frame used as the layer reference."""
    return (n_frames + 1) // 2 - 1
