"""PNG, motion JSON and raw flow file helpers."""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np
from PIL import Image

from .types import AffineMotion, CaptureTiming, Scene


def read_png(path) -> np.ndarray:
    """8-bit PNG -> float64 in [0, 1]; grayscale as ``(h, w)``, colour as ``(h, w, 3)``."""
    with Image.open(path) as im:
        mode = "L" if im.mode in ("1", "L", "LA", "I", "I;16") else "RGB"
        arr = np.asarray(im.convert(mode), dtype=np.float64)
    return arr / 255.0


def to_uint8(img) -> np.ndarray:
    return np.round(np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0) * 255.0).astype(np.uint8)


def write_png(path, img) -> None:
    arr = to_uint8(img)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    Image.fromarray(arr).save(path)


def motions_to_dict(scene: Scene, reference: int | None = None) -> dict:
    params = scene.motion_params()
    out = {
        "timing": {"duty_cycle": scene.timing.duty_cycle,
                   "samples": scene.timing.samples,
                   "frames": scene.timing.frames},
        "background": params[0].tolist(),
        "foreground": params[1].tolist(),
    }
    if reference is not None:
        out["reference_frame"] = reference
    return out


def write_motions(path, scene: Scene, reference: int | None = None) -> None:
    Path(path).write_text(json.dumps(motions_to_dict(scene, reference), indent=2))


def read_motions(path):
    """Returns ``(motions, timing)`` from a motions JSON file."""
    doc = json.loads(Path(path).read_text())
    timing = CaptureTiming(**doc["timing"])
    motions = [[AffineMotion.from_array(p) for p in doc["background"]],
               [AffineMotion.from_array(p) for p in doc["foreground"]]]
    return motions, timing


def write_flow(path, u, v) -> None:
    """Raw flow: uint32 LE width, uint32 LE height, then u and v planes as float32 LE."""
    u = np.asarray(u, dtype="<f4")
    v = np.asarray(v, dtype="<f4")
    h, w = u.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack("<II", w, h))
        fh.write(u.tobytes(order="C"))
        fh.write(v.tobytes(order="C"))


def read_flow(path):
    data = Path(path).read_bytes()
    if len(data) < 8:
        raise ValueError(f"{path}: truncated flow header")
    w, h = struct.unpack("<II", data[:8])
    expected = 8 + 2 * 4 * w * h
    if len(data) != expected:
        raise ValueError(f"{path}: expected {expected} bytes for {w}x{h} flow, got {len(data)}")
    planes = np.frombuffer(data[8:], dtype="<f4").reshape(2, h, w).astype(np.float64)
    return planes[0], planes[1]


def write_scene(directory, scene: Scene, reference: int | None = None) -> None:
    """Write ``L0.png``, ``L1.png``, ``A.png`` and ``motions.json`` into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_png(directory / "L0.png", scene.bg)
    write_png(directory / "L1.png", scene.fg)
    write_png(directory / "A.png", scene.alpha)
    write_motions(directory / "motions.json", scene, reference)


def read_scene(directory) -> Scene:
    """Inverse of :func:`write_scene` (8-bit precision)."""
    directory = Path(directory)
    motions, timing = read_motions(directory / "motions.json")
    alpha = read_png(directory / "A.png")
    if alpha.ndim == 3:
        alpha = alpha.mean(axis=2)
    return Scene(read_png(directory / "L1.png"), read_png(directory / "L0.png"), alpha,
                 motions, timing)
