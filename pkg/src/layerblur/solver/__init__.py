"""Objective and alternating sub-solvers for layers, mask and motions."""
from .alpha import primal_dual_alpha, project_dual, solve_alpha
from .alternate import AlternationResult, alternate, write_trace
from .cg import conjugate_gradient
from .config import EnergyBreakdown, SolverConfig
from .latent import HyperLaplacianLUT, hyper_laplacian_prox, latent_data_gradient, solve_latent
from .motion import solve_motion
from .nelder_mead import nelder_mead
from .objective import objective

__all__ = [
    "AlternationResult", "EnergyBreakdown", "HyperLaplacianLUT", "SolverConfig", "alternate",
    "conjugate_gradient", "hyper_laplacian_prox", "latent_data_gradient", "nelder_mead",
    "objective", "primal_dual_alpha", "project_dual", "solve_alpha", "solve_latent",
    "solve_motion", "write_trace",
]
