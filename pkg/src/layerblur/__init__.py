"""Occlusion-aware layered motion blur: forward models and two-layer video deblurring."""
from .kernels import BACKEND
from .metrics import evaluate, psnr
from .model import (
    AlphaBlurOperator,
    LayerBlurOperator,
    composite,
    extract_pixel_kernels,
    image_gradient,
    image_gradient_adjoint,
    render_blurred_frame,
)
from .pipeline import RunConfig, deblur
from .synth import SceneScript, render_sequence
from .types import AffineMotion, BlurModel, CaptureTiming, Scene
from .warp import interpolate_motion, warp_adjoint, warp_affine

__all__ = [
    "BACKEND",
    "AffineMotion",
    "AlphaBlurOperator",
    "BlurModel",
    "CaptureTiming",
    "LayerBlurOperator",
    "RunConfig",
    "Scene",
    "SceneScript",
    "composite",
    "deblur",
    "evaluate",
    "extract_pixel_kernels",
    "image_gradient",
    "image_gradient_adjoint",
    "interpolate_motion",
    "psnr",
    "render_blurred_frame",
    "render_sequence",
    "warp_adjoint",
    "warp_affine",
]
