"""Latent layer update: hyper-Laplacian deconvolution by half-quadratic splitting.

For each coupling weight ``beta`` the gradients of both layers are replaced
by auxiliary variables ``w`` (solved elementwise through a lookup table of
the proximal map of ``|.|^p``) and the remaining quadratic problem in the
layers is solved by conjugate gradients on the normal equations.
"""
from __future__ import annotations

import functools

import numpy as np

from ..model import LayerBlurOperator, image_gradient, image_gradient_adjoint
from ..types import BlurModel, Scene
from .cg import conjugate_gradient
from .config import SolverConfig
from .objective import check_frames, data_misfit, hyper_laplacian_prior


def _prox_branch(v, t, p):
    """Largest stationary point of ``(x - v)^2 / (2t) + x^p`` for ``v > 0`` (nan if none)."""
    v = np.asarray(v, dtype=np.float64)
    x_turn = (t * p * (1.0 - p)) ** (1.0 / (2.0 - p)) if p < 1 else 0.0
    out = np.full(v.shape, np.nan)
    if p >= 1.0:
        return np.maximum(v - t, 0.0)
    g_turn = x_turn - v + t * p * x_turn ** (p - 1.0)
    ok = g_turn <= 0.0
    x = v[ok].copy()
    # g is convex on x > 0, so Newton from the right converges monotonically
    for _ in range(60):
        g = x - v[ok] + t * p * x ** (p - 1.0)
        dg = 1.0 + t * p * (p - 1.0) * x ** (p - 2.0)
        step = g / dg
        x = np.maximum(x - step, x_turn)
        if np.all(np.abs(step) <= 1e-15 * np.maximum(x, 1e-300)):
            break
    out[ok] = x
    return out


def hyper_laplacian_prox(v, t: float, p: float = 0.8) -> np.ndarray:
    """Exact ``argmin_x (x - v)^2 / (2t) + |x|^p``, elementwise."""
    v = np.asarray(v, dtype=np.float64)
    mag = np.abs(v)
    x = _prox_branch(mag, t, p)
    take = np.isfinite(x)
    with np.errstate(invalid="ignore"):
        f_branch = (x - mag) ** 2 / (2 * t) + np.where(take, x, 0.0) ** p
    take &= f_branch < mag ** 2 / (2 * t)
    return np.sign(v) * np.where(take, x, 0.0)


def prox_threshold(t: float, p: float = 0.8) -> float:
    """Smallest ``|v|`` whose proximal value is non-zero."""
    if p >= 1.0:
        return t
    x_turn = (t * p * (1.0 - p)) ** (1.0 / (2.0 - p))
    lo = x_turn + t * p * x_turn ** (p - 1.0)
    hi = 2.0 * lo + 1.0

    def wins(v):
        x = _prox_branch(np.array([v]), t, p)[0]
        return np.isfinite(x) and (x - v) ** 2 / (2 * t) + x ** p < v * v / (2 * t)

    while not wins(hi):
        hi *= 2.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if wins(mid):
            hi = mid
        else:
            lo = mid
    return hi


class HyperLaplacianLUT:
    """Tabulated proximal map of ``|.|^p`` for one weight ``t``.

    The table covers ``|v|`` from the zero/non-zero switching threshold to
    ``vmax`` with ``size`` entries so linear interpolation never straddles the
    jump; values below the threshold map to 0 and values beyond ``vmax`` are
    solved exactly.
    """

    def __init__(self, t: float, p: float = 0.8, size: int = 1024, vmax: float = 1.0):
        self.t, self.p, self.vmax = float(t), float(p), float(vmax)
        self.threshold = prox_threshold(self.t, self.p)
        if self.threshold < self.vmax:
            self.grid = np.linspace(self.threshold, self.vmax, size)
            self.values = _prox_branch(self.grid, self.t, self.p)
            self.values[0] = _prox_branch(np.array([self.threshold]), self.t, self.p)[0]
        else:
            self.grid = None
            self.values = None

    def __call__(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        mag = np.abs(v)
        out = np.zeros_like(mag)
        if self.grid is not None:
            inside = (mag >= self.threshold) & (mag <= self.vmax)
            out[inside] = np.interp(mag[inside], self.grid, self.values)
        beyond = mag > self.vmax
        if beyond.any():
            out[beyond] = np.abs(hyper_laplacian_prox(mag[beyond], self.t, self.p))
        return np.sign(v) * out


@functools.lru_cache(maxsize=64)
def lookup_table(beta: float, p: float, size: int) -> HyperLaplacianLUT:
    return HyperLaplacianLUT(1.0 / beta, p, size)


class _LatentSystem:
    """Normal equations of ``lam1 sum_i |grad B_i - grad K_i L|^2 + beta/2 |grad L - w|^2``."""

    def __init__(self, ops, frames, lam1):
        self.ops = ops
        self.lam1 = lam1
        self.layer_shape = np.shape(frames[0])
        self.size = int(np.prod(self.layer_shape))
        rhs_bg = np.zeros(self.layer_shape)
        rhs_fg = np.zeros(self.layer_shape)
        for op, b in zip(ops, frames):
            ab, af = op.adjoint(_grad_normal(np.asarray(b, dtype=np.float64)))
            rhs_bg += ab
            rhs_fg += af
        self.rhs_data = 2.0 * lam1 * self.pack(rhs_bg, rhs_fg)

    def pack(self, bg, fg):
        return np.concatenate([np.ravel(bg), np.ravel(fg)])

    def unpack(self, x):
        return x[:self.size].reshape(self.layer_shape), x[self.size:].reshape(self.layer_shape)

    def data_normal(self, x):
        bg, fg = self.unpack(x)
        out_bg = np.zeros(self.layer_shape)
        out_fg = np.zeros(self.layer_shape)
        for op in self.ops:
            ab, af = op.adjoint(_grad_normal(op.forward(bg, fg)))
            out_bg += ab
            out_fg += af
        return 2.0 * self.lam1 * self.pack(out_bg, out_fg)

    def data_gradient(self, x):
        """Gradient of the data term at ``x`` (flat layers)."""
        return self.data_normal(x) - self.rhs_data


def _grad_normal(u):
    return image_gradient_adjoint(*image_gradient(u))


def latent_data_gradient(scene: Scene, frames, config: SolverConfig,
                         kind: BlurModel = BlurModel.PROPOSED):
    """Gradient of the weighted data term with respect to ``(bg, fg)``."""
    cfg = config.resolve(scene.n_frames)
    ops = [LayerBlurOperator(scene, i, kind) for i in range(scene.n_frames)]
    system = _LatentSystem(ops, frames, cfg.lambda1)
    return system.unpack(system.data_gradient(system.pack(scene.bg, scene.fg)))


def latent_energy(scene: Scene, frames, cfg: SolverConfig, kind, use_prior=True) -> float:
    e = cfg.lambda1 * data_misfit(scene, frames, kind)
    if use_prior:
        e += (hyper_laplacian_prior(scene.bg, cfg.hyper_exponent)
              + hyper_laplacian_prior(scene.fg, cfg.hyper_exponent))
    return e


def solve_latent(scene: Scene, frames, config: SolverConfig,
                 kind: BlurModel = BlurModel.PROPOSED, use_prior: bool = True,
                 clamp: bool = True) -> Scene:
    """Update both layers with mask and motions fixed.

    With ``use_prior=False`` the hyper-Laplacian term is dropped and a single
    CG solve of the data normal equations is performed.  The update is kept
    only if it does not raise the (data + prior) energy.
    """
    check_frames(scene, frames)
    cfg = config.resolve(scene.n_frames)
    ops = [LayerBlurOperator(scene, i, kind) for i in range(scene.n_frames)]
    system = _LatentSystem(ops, frames, cfg.lambda1)
    x = system.pack(scene.bg, scene.fg)

    if not use_prior:
        x, _ = conjugate_gradient(system.data_normal, system.rhs_data, x,
                                  cfg.cg_max_iter, cfg.cg_rel_tol)
    else:
        for beta in cfg.beta_schedule:
            lut = lookup_table(beta, cfg.hyper_exponent, cfg.lut_size)
            bg, fg = system.unpack(x)
            rhs_prior = []
            for layer in (bg, fg):
                gx, gy = image_gradient(layer)
                rhs_prior.append(beta * image_gradient_adjoint(lut(gx), lut(gy)))
            rhs = system.rhs_data + system.pack(*rhs_prior)

            def normal(v, beta=beta):
                vb, vf = system.unpack(v)
                return system.data_normal(v) + beta * system.pack(_grad_normal(vb), _grad_normal(vf))

            x, _ = conjugate_gradient(normal, rhs, x, cfg.cg_max_iter, cfg.cg_rel_tol)
            if clamp:
                x = np.clip(x, 0.0, 1.0)
    if clamp:
        x = np.clip(x, 0.0, 1.0)

    bg, fg = system.unpack(x)
    candidate = Scene(fg, bg, scene.alpha, scene.motions, scene.timing)
    before = latent_energy(scene, frames, cfg, kind, use_prior)
    after = latent_energy(candidate, frames, cfg, kind, use_prior)
    return candidate if after <= before else scene.copy()
