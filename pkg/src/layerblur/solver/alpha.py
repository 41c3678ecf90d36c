"""Alpha mask update by a primal-dual scheme.

The total-variation term is dualised; each primal step is a quadratic
problem (data term, binary term and proximal coupling) solved by CG.
"""
from __future__ import annotations

import numpy as np

from ..errors import ConfigError
from ..model import AlphaBlurOperator, gradient_normal, image_gradient, image_gradient_adjoint
from ..types import BlurModel, Scene
from .cg import IndefiniteSystem, conjugate_gradient
from .config import SolverConfig
from .objective import binary_penalty, check_frames, gradient_sq_norm, total_variation


def project_dual(dx, dy):
    """Project each per-pixel vector ``(dx, dy)`` onto the unit disk."""
    scale = np.maximum(1.0, np.sqrt(dx * dx + dy * dy))
    return dx / scale, dy / scale


def alpha_energy(alpha, ops, targets, lam1, lam2, lam3) -> float:
    data = sum(gradient_sq_norm(t - op.forward(alpha)) for op, t in zip(ops, targets))
    return lam1 * data + lam2 * total_variation(alpha) + lam3 * binary_penalty(alpha)


def primal_dual_alpha(alpha0, ops, targets, lam1, lam2, lam3, sigma_d, tau,
                      iterations=20, cg_max_iter=25, cg_rel_tol=1e-4,
                      on_dual=None):
    """Minimise ``lam1 sum |grad(t_i - K_i A)|^2 + lam2 TV(A) + lam3 A.(1-A)`` over ``A``.

    ``ops`` expose ``forward``/``adjoint``; ``targets`` are the matching
    right-hand sides.  ``on_dual`` (if given) is called with the dual
    field after each ascent step.  Returns the clamped mask.
    """
    shape = np.shape(alpha0)
    diag = lam2 / tau - 2.0 * lam3
    if diag <= 0:
        raise ConfigError(
            f"binary weight {lam3:g} too large for the primal step (need lambda3 < {lam2 / (2 * tau):g})")

    rhs_data = np.zeros(shape)
    for op, t in zip(ops, targets):
        rhs_data += op.adjoint(gradient_normal(t))
    rhs_data *= 2.0 * lam1

    def normal(x):
        a = x.reshape(shape)
        out = diag * a
        for op in ops:
            out = out + 2.0 * lam1 * op.adjoint(gradient_normal(op.forward(a)))
        return out.ravel()

    alpha = np.clip(np.asarray(alpha0, dtype=np.float64), 0.0, 1.0)
    bar = alpha.copy()
    dx = np.zeros(shape)
    dy = np.zeros(shape)
    for _ in range(iterations):
        gx, gy = image_gradient(bar)
        dx, dy = project_dual(dx + sigma_d * gx, dy + sigma_d * gy)
        if on_dual is not None:
            on_dual(dx, dy)
        v = alpha - tau * image_gradient_adjoint(dx, dy)
        rhs = (lam2 / tau) * v + rhs_data - lam3
        try:
            x, _ = conjugate_gradient(normal, rhs.ravel(), alpha.ravel(), cg_max_iter, cg_rel_tol)
        except IndefiniteSystem as exc:
            raise ConfigError(f"alpha system is indefinite ({exc}); reduce lambda3") from exc
        new = np.clip(x.reshape(shape), 0.0, 1.0)
        bar = 2.0 * new - alpha
        alpha = new
    return alpha


def solve_alpha(scene: Scene, frames, config: SolverConfig,
                kind: BlurModel = BlurModel.PROPOSED) -> Scene:
    """Update the mask with layers and motions fixed; reverts if the energy rises."""
    check_frames(scene, frames)
    cfg = config.resolve(scene.n_frames)
    ops = [AlphaBlurOperator(scene, i, kind) for i in range(scene.n_frames)]
    targets = [np.asarray(b, dtype=np.float64) - op.offset() for op, b in zip(ops, frames)]
    alpha = primal_dual_alpha(scene.alpha, ops, targets, cfg.lambda1, cfg.lambda2, cfg.lambda3,
                              cfg.sigma_D, cfg.tau, cfg.pd_iterations,
                              cfg.cg_max_iter, cfg.cg_rel_tol)
    weights = (cfg.lambda1, cfg.lambda2, cfg.lambda3)
    if alpha_energy(alpha, ops, targets, *weights) > alpha_energy(scene.alpha, ops, targets, *weights):
        return scene.copy()
    return Scene(scene.fg.copy(), scene.bg.copy(), alpha, scene.motions, scene.timing)
