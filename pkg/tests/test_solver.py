import csv

import numpy as np
import pytest
from scipy import ndimage

from layerblur.errors import ConfigError, NumericError, ShapeError
from layerblur.model import render_blurred_frame
from layerblur.solver import (
    HyperLaplacianLUT,
    SolverConfig,
    alternate,
    conjugate_gradient,
    hyper_laplacian_prox,
    latent_data_gradient,
    nelder_mead,
    objective,
    primal_dual_alpha,
    project_dual,
    solve_alpha,
    solve_latent,
    solve_motion,
    write_trace,
)
from layerblur.solver.cg import IndefiniteSystem
from layerblur.solver.motion import motion_blocks
from layerblur.solver.objective import data_misfit
from layerblur.synth import SceneScript, random_scene, render_sequence
from layerblur.types import AffineMotion, CaptureTiming, Scene
from layerblur.warp import warp_affine

from oracles import dense_frame_blocks, dense_gradient, hyper_laplacian_prox_brute


class Identity:
    def forward(self, a):
        return a

    def adjoint(self, y):
        return y


def textured_script(size=64, frames=3, fg_v=(-3, 1), bg_v=(2, -1), **kw):
    return SceneScript(
        width=size, height=size, frames=frames,
        foreground={"type": "noise", "smooth": 1.5},
        background={"type": "noise", "smooth": 1.5},
        mask={"type": "disk", "center": [size / 2, size / 2], "radius": size * 0.22},
        trajectories={"foreground": {"velocity": list(fg_v)},
                      "background": {"velocity": list(bg_v)}}, **kw)


def aligned_average_start(frames, gt):
    def avg(layer):
        return np.clip(np.mean([warp_affine(f, gt.motions[layer][i].inverse())
                                for i, f in enumerate(frames)], axis=0), 0, 1)
    return Scene(avg(1), avg(0), gt.alpha, gt.motions, gt.timing)


# --- configuration -------------------------------------------------------

def test_config_defaults_resolve():
    cfg = SolverConfig().resolve(5)
    assert cfg.lambda1 == pytest.approx(500.0)
    assert cfg.lambda2 == pytest.approx(27.5)
    assert cfg.lambda3 == pytest.approx(0.025)
    assert cfg.tau == cfg.sigma_A == 0.0125
    assert cfg.beta_schedule == (1, 2, 4, 8, 16, 32, 64, 128, 256)


def test_config_explicit_weights_kept():
    cfg = SolverConfig(lambda1=3.0, lambda2=0.5).resolve(5)
    assert (cfg.lambda1, cfg.lambda2, cfg.lambda3) == (3.0, 0.5, 3.0 / 20000)


@pytest.mark.parametrize("bad", [{"lambda1": -1}, {"hyper_exponent": 1.5}, {"cg_max_iter": 0},
                                 {"sigma_D": 0}, {"beta_schedule": [1, -2]}])
def test_config_rejects_invalid(bad):
    with pytest.raises(ValueError):
        SolverConfig(**bad)


def test_config_dict_round_trip_and_unknown_keys():
    cfg = SolverConfig(lambda1=2.0, pd_iterations=7)
    assert SolverConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ValueError, match="unknown"):
        SolverConfig.from_dict({"lambda9": 1})


# --- objective -----------------------------------------------------------

def test_objective_piecewise_constant_exact_model():
    h = w = 12
    alpha = np.ones((h, w))
    alpha[4:8, 3:9] = 0.0
    motions = [[AffineMotion.translation(1.0 * i) for i in range(3)],
               [AffineMotion.translation(-1.0 * i) for i in range(3)]]
    scene = Scene(np.full((h, w), 0.3), np.full((h, w), 0.7), alpha, motions,
                  CaptureTiming(0.5, 2, 2))
    frames = [render_blurred_frame(scene, i) for i in range(2)]
    e = objective(scene, frames, SolverConfig())
    cfg = SolverConfig().resolve(2)
    assert e.data_term == pytest.approx(0.0, abs=1e-20)
    assert e.layer_prior == 0.0
    assert e.alpha_binary == 0.0
    # isotropic TV of a 4x6 block: 2*(4+6) unit edges plus 2 corners counted once diagonally
    gx = np.diff(alpha, axis=1, append=alpha[:, -1:])
    gy = np.diff(alpha, axis=0, append=alpha[-1:, :])
    assert e.alpha_tv == pytest.approx(cfg.lambda2 * np.sum(np.hypot(gx, gy)))
    assert e.total == pytest.approx(e.alpha_tv)


def test_objective_binary_term_of_half_mask():
    scene = random_scene(np.random.default_rng(1), 10, frames=1)
    scene.alpha = np.full(scene.shape, 0.5)
    e = objective(scene, [scene.bg], SolverConfig())
    cfg = SolverConfig().resolve(1)
    assert e.alpha_binary == pytest.approx(cfg.lambda3 * 100 * 0.25)


def test_objective_matches_dense_reimplementation():
    rng = np.random.default_rng(5)
    scene = random_scene(rng, 8, frames=2, samples=3)
    frames = [rng.random((8, 8)) for _ in range(2)]
    cfg = SolverConfig(lambda1=3.0, lambda2=0.2, lambda3=0.01)
    g = dense_gradient(8, 8)
    n = 64
    data = 0.0
    for i in range(2):
        kl0, kl1, _, _ = dense_frame_blocks(scene, i)
        r = g @ (frames[i].ravel() - kl0 @ scene.bg.ravel() - kl1 @ scene.fg.ravel())
        data += r @ r
    prior = sum(np.sum(np.abs(g @ layer.ravel()) ** 0.8) for layer in (scene.bg, scene.fg))
    ga = g @ scene.alpha.ravel()
    tv = np.sum(np.sqrt(ga[:n] ** 2 + ga[n:] ** 2))
    a = scene.alpha.ravel()
    expected = 3.0 * data + prior + 0.2 * tv + 0.01 * a @ (1 - a)
    assert objective(scene, frames, cfg).total == pytest.approx(expected, abs=1e-10)


def test_objective_shape_errors():
    scene = random_scene(np.random.default_rng(0), 8, frames=2)
    with pytest.raises(ShapeError):
        objective(scene, [scene.bg], SolverConfig())
    with pytest.raises(ShapeError):
        objective(scene, [np.zeros((8, 9))] * 2, SolverConfig())


# --- conjugate gradient ----------------------------------------------------

def test_cg_solves_spd_system():
    rng = np.random.default_rng(0)
    q = rng.normal(size=(20, 20))
    a = q @ q.T + 20 * np.eye(20)
    b = rng.normal(size=20)
    x, _ = conjugate_gradient(lambda v: a @ v, b, np.zeros(20), 200, 1e-12)
    np.testing.assert_allclose(x, np.linalg.solve(a, b), atol=1e-9)


def test_cg_flags_indefinite_and_nonfinite():
    with pytest.raises(IndefiniteSystem):
        conjugate_gradient(lambda v: -v, np.ones(4), np.zeros(4))
    with pytest.raises(NumericError):
        conjugate_gradient(lambda v: v, np.array([1.0, np.nan]), np.zeros(2))


# --- hyper-Laplacian proximal map -----------------------------------------

@pytest.mark.parametrize("beta", [1, 2, 4, 8, 16, 32, 64, 128, 256])
def test_lut_matches_brute_force(beta):
    lut = HyperLaplacianLUT(1.0 / beta)
    vs = np.linspace(-1.0, 1.0, 401)
    brute = np.array([hyper_laplacian_prox_brute(v, 1.0 / beta) for v in vs])
    assert np.max(np.abs(lut(vs) - brute)) < 1e-3


def test_exact_prox_beyond_table_and_properties():
    t = 0.05
    lut = HyperLaplacianLUT(t)
    vs = np.linspace(-3, 3, 121)
    brute = np.array([hyper_laplacian_prox_brute(v, t) for v in vs])
    np.testing.assert_allclose(hyper_laplacian_prox(vs, t), brute, atol=1e-6)
    np.testing.assert_allclose(lut(vs), brute, atol=1e-3)
    assert lut(np.array([0.0]))[0] == 0.0
    grid = np.linspace(0, 1, 1001)
    np.testing.assert_array_equal(lut(-grid), -lut(grid))
    assert np.all(np.diff(lut(grid)) >= 0)


def test_prox_with_unit_exponent_is_soft_threshold():
    v = np.array([-2.0, -0.1, 0.0, 0.3, 1.5])
    np.testing.assert_allclose(hyper_laplacian_prox(v, 0.5, p=1.0), [-1.5, 0, 0, 0, 1.0])


# --- latent layers -----------------------------------------------------------

def test_latent_no_blur_limit():
    rng = np.random.default_rng(2)
    frame = ndimage.gaussian_filter(rng.random((16, 16)), 1.0)
    ident = [[AffineMotion()] * 2, [AffineMotion()] * 2]
    start = Scene(np.full((16, 16), 0.5), np.full((16, 16), frame.mean()), np.ones((16, 16)),
                  ident, CaptureTiming(0.5, 2, 1))
    out = solve_latent(start, [frame], SolverConfig(lambda1=1e5, cg_max_iter=200))
    assert np.max(np.abs(out.bg - frame)) < 1e-3


def _dense_latent_problem():
    script = SceneScript(
        width=16, height=16, frames=3, samples=2,
        foreground={"type": "noise", "smooth": 1.0, "low": 0.2, "high": 0.8},
        background={"type": "noise", "smooth": 1.0, "low": 0.2, "high": 0.8},
        mask={"type": "disk", "center": [7.5, 7.5], "radius": 4.5},
        trajectories={"foreground": {"velocity": [2, 1]}, "background": {"velocity": [-2, 2]}})
    return render_sequence(script)


def test_latent_without_prior_matches_dense_least_squares():
    frames, gt = _dense_latent_problem()
    n = 256
    lam1 = 2500 / 3
    g = dense_gradient(16, 16)
    hess = np.zeros((2 * n, 2 * n))
    rhs = np.zeros(2 * n)
    for i in range(3):
        kl0, kl1, _, _ = dense_frame_blocks(gt, i)
        k = g @ np.hstack([kl0, kl1])
        hess += 2 * lam1 * k.T @ k
        rhs += 2 * lam1 * k.T @ (g @ frames[i].ravel())
    x0 = np.full(2 * n, 0.5)
    # the gradient-domain data term has a null space; CG from x0 finds the solution nearest x0
    expected = x0 + np.linalg.pinv(hess, rcond=1e-9, hermitian=True) @ (rhs - hess @ x0)
    assert 0 <= expected.min() and expected.max() <= 1
    start = Scene(np.full((16, 16), 0.5), np.full((16, 16), 0.5), gt.alpha, gt.motions, gt.timing)
    cfg = SolverConfig(cg_max_iter=5000, cg_rel_tol=1e-14)
    out = solve_latent(start, frames, cfg, use_prior=False)
    got = np.concatenate([out.bg.ravel(), out.fg.ravel()])
    assert np.max(np.abs(got - expected)) < 1e-6


def test_latent_data_gradient_matches_finite_differences():
    rng = np.random.default_rng(11)
    for _ in range(3):
        scene = random_scene(rng, 8, frames=2, samples=3)
        frames = [rng.random((8, 8)) for _ in range(2)]
        cfg = SolverConfig(lambda1=2.0)
        g_bg, g_fg = latent_data_gradient(scene, frames, cfg)
        d_bg, d_fg = rng.normal(size=(2, 8, 8))
        eps = 1e-4

        def data(s):
            trial = scene.copy()
            trial.bg = scene.bg + s * d_bg
            trial.fg = scene.fg + s * d_fg
            return 2.0 * data_misfit(trial, frames)

        fd = (data(eps) - data(-eps)) / (2 * eps)
        analytic = np.sum(g_bg * d_bg) + np.sum(g_fg * d_fg)
        assert abs(fd - analytic) <= 1e-5 * abs(analytic)


def test_latent_update_is_monotone_and_clamped():
    frames, gt = render_sequence(textured_script(32))
    start = aligned_average_start(frames, gt)
    cfg = SolverConfig()
    before = objective(start, frames, cfg).total
    out = solve_latent(start, frames, cfg)
    assert objective(out, frames, cfg).total <= before + 1e-6
    for layer in (out.bg, out.fg):
        assert layer.min() >= 0 and layer.max() <= 1


def test_latent_nonfinite_frames_raise_numeric_error():
    frames, gt = _dense_latent_problem()
    frames[0] = frames[0].copy()
    frames[0][3, 3] = np.nan
    with pytest.raises(NumericError):
        solve_latent(gt, frames, SolverConfig())


# --- alpha mask --------------------------------------------------------------

def test_dual_projection_identity_inside_ball():
    rng = np.random.default_rng(0)
    dx, dy = rng.uniform(-0.7, 0.7, (2, 5, 5))
    px, py = project_dual(dx, dy)
    np.testing.assert_array_equal(px, dx)
    np.testing.assert_array_equal(py, dy)
    qx, qy = project_dual(3 * dx, 3 * dy)
    assert np.max(np.hypot(qx, qy)) <= 1 + 1e-12


def _soft_disk(size=32):
    ys, xs = np.mgrid[0:size, 0:size]
    disk = np.where((xs - 15.5) ** 2 + (ys - 15.5) ** 2 <= 81, 0.0, 1.0)
    return np.clip(ndimage.gaussian_filter(disk, 1.5), 0, 1)


def test_alpha_denoising_limit():
    gt = _soft_disk()
    seen = []
    out = primal_dual_alpha(np.full(gt.shape, gt.mean()), [Identity()], [gt], 1.0, 1e-3, 0.0,
                            10.0, 0.0125, iterations=100, cg_max_iter=100, cg_rel_tol=1e-10,
                            on_dual=lambda dx, dy: seen.append(np.max(np.hypot(dx, dy))))
    assert np.max(np.abs(out - gt)) < 1e-2
    assert max(seen) <= 1 + 1e-12


def test_alpha_binary_pressure():
    xs = np.mgrid[0:32, 0:32][1]
    edge = ndimage.gaussian_filter(np.where(xs < 16, 0.0, 1.0), 3.0, mode="nearest")

    def near_endpoint(a):
        return np.mean(np.minimum(a, 1 - a) <= 0.1)

    assert near_endpoint(edge) < 0.9
    soft = primal_dual_alpha(edge, [Identity()], [edge], 1.0, 0.05, 0.0, 10.0, 0.0125, 100)
    hard = primal_dual_alpha(edge, [Identity()], [edge], 1.0, 0.05, 1.5, 10.0, 0.0125, 100)
    assert near_endpoint(soft) < 0.9
    assert near_endpoint(hard) >= 0.9


def test_alpha_rejects_too_large_binary_weight():
    with pytest.raises(ConfigError, match="lambda3"):
        primal_dual_alpha(np.zeros((4, 4)), [Identity()], [np.zeros((4, 4))],
                          1.0, 0.05, 3.0, 10.0, 0.0125)


def test_alpha_update_is_monotone_and_clamped():
    frames, gt = render_sequence(textured_script(32))
    start = gt.copy()
    start.alpha = np.clip(ndimage.gaussian_filter(gt.alpha, 2.0), 0, 1)
    cfg = SolverConfig()
    out = solve_alpha(start, frames, cfg)
    assert objective(out, frames, cfg).total <= objective(start, frames, cfg).total + 1e-6
    assert out.alpha.min() >= 0 and out.alpha.max() <= 1
    assert np.abs(out.alpha - gt.alpha).mean() < np.abs(start.alpha - gt.alpha).mean()


# --- motions -----------------------------------------------------------------

def test_nelder_mead_minimises_quadratic():
    target = np.array([1.0, -2.0, 0.5])
    x, fx, evals = nelder_mead(lambda x: np.sum((x - target) ** 2), np.zeros(3),
                               [0.5, 0.5, 0.5], max_evals=400)
    np.testing.assert_allclose(x, target, atol=1e-3)
    assert evals <= 400


def test_nelder_mead_respects_budget_and_rejects_nan():
    calls = []
    nelder_mead(lambda x: calls.append(1) or float(np.sum(x ** 2)), np.ones(6), [0.1] * 6, 30)
    assert len(calls) <= 30
    with pytest.raises(NumericError):
        nelder_mead(lambda x: np.nan, np.zeros(2), [1, 1])


def test_motion_blocks_order_and_fixed_reference():
    blocks = motion_blocks(5)
    assert blocks[0] == (0, 0) and blocks[-1] == (1, 5)
    assert (0, 2) not in blocks and (1, 2) not in blocks
    assert len(motion_blocks(5, fix_reference=False)) == 12


def test_motion_ground_truth_is_fixed_point():
    frames, gt = render_sequence(textured_script())
    out = solve_motion(gt, frames, SolverConfig())
    drift = np.abs(out.motion_params() - gt.motion_params())[..., 4:]
    assert drift.max() < 0.05


@pytest.mark.parametrize("layer,index", [(0, 0), (1, 2)])
def test_motion_recovers_one_pixel_perturbation(layer, index):
    frames, gt = render_sequence(textured_script())
    params = gt.motion_params()
    params[layer, index, 4] += 1.0
    out = solve_motion(gt.with_motion_params(params), frames, SolverConfig(nm_max_evals=400))
    err = out.motion_params()[layer, index, 4:] - gt.motion_params()[layer, index, 4:]
    assert np.max(np.abs(err)) < 0.1


def test_motion_data_term_never_increases():
    rng = np.random.default_rng(4)
    frames, gt = render_sequence(textured_script(32))
    for _ in range(3):
        params = gt.motion_params()
        params[:, :, 4:] += rng.normal(0, 0.7, params[:, :, 4:].shape)
        start = gt.with_motion_params(params)
        out = solve_motion(start, frames, SolverConfig(nm_max_evals=40))
        assert data_misfit(out, frames) <= data_misfit(start, frames)


# --- alternation -------------------------------------------------------------

def test_alternate_fixed_point_trace_is_flat():
    # piecewise-constant layers make data and prior vanish; with a negligible
    # mask regulariser the truth is then a minimiser
    script = textured_script(32)
    script.foreground = {"type": "constant", "value": 0.2}
    script.background = {"type": "constant", "value": 0.8}
    frames, gt = render_sequence(script)
    result = alternate(gt, frames, SolverConfig(lambda2=1e-6, lambda3=1e-9))
    totals = [result.initial.total] + [e.total for _, e in result.trace]
    assert max(totals) - min(totals) <= 1e-6 * result.initial.total


def test_alternate_default_weights_trade_mask_edges_for_tv():
    # with default weights the TV term pulls the exact mask edge, but never upward
    script = textured_script(32)
    script.foreground = {"type": "constant", "value": 0.2}
    script.background = {"type": "constant", "value": 0.8}
    frames, gt = render_sequence(script)
    result = alternate(gt, frames, SolverConfig(inner_iterations=1))
    totals = [result.initial.total] + [e.total for _, e in result.trace]
    assert all(b <= a + 1e-6 for a, b in zip(totals, totals[1:]))
    assert np.abs(result.scene.alpha - gt.alpha).mean() < 0.05


def test_alternate_decreases_energy_and_records_trace(tmp_path):
    frames, gt = render_sequence(textured_script(32))
    start = aligned_average_start(frames, gt)
    result = alternate(start, frames, SolverConfig(), prefix="level0/")
    labels = [label for label, _ in result.trace]
    assert len(labels) == 9
    assert labels[:3] == ["level0/iter1/latent", "level0/iter1/alpha", "level0/iter1/motion"]
    totals = [result.initial.total] + [e.total for _, e in result.trace]
    assert all(b <= a + 1e-6 for a, b in zip(totals, totals[1:]))
    assert totals[-1] < totals[0]
    path = tmp_path / "trace.csv"
    write_trace(path, result.trace)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["step", "data_term", "layer_prior", "alpha_tv", "alpha_binary", "total"]
    assert len(rows) == 10
