"""Initial motions, layers and mask from blurred frames."""
from .flow import FlowField, compute_flow, load_flow
from .initialization import aligned_average, choose_foreground, init_scene, initialize
from .ransac import LABEL_A, LABEL_B, OUTLIER, OneMotionFound, RansacConfig, ransac_two_affine

__all__ = [
    "FlowField", "LABEL_A", "LABEL_B", "OUTLIER", "OneMotionFound", "RansacConfig",
    "aligned_average", "choose_foreground", "compute_flow", "init_scene", "initialize", "load_flow",
    "ransac_two_affine",
]
