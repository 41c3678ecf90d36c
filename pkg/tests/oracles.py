"""Independent reference constructions used only by the tests.

Everything here is written with explicit Python loops over pixels and
samples and never calls the vectorised operators it is compared against.
"""
import math

import numpy as np


def dense_warp(params, h, w):
    """Dense ``(n, n)`` bilinear gather matrix for one affine parameter row."""
    a11, a12, a21, a22, tx, ty = [float(v) for v in params]
    mat = np.zeros((h * w, h * w))
    for y in range(h):
        for x in range(w):
            sx = min(max(a11 * x + a12 * y + tx, 0.0), w - 1.0)
            sy = min(max(a21 * x + a22 * y + ty, 0.0), h - 1.0)
            x0, y0 = int(math.floor(sx)), int(math.floor(sy))
            x1 = min(x0 + 1, w - 1)
            y1 = min(y0 + 1, h - 1)
            fx, fy = sx - x0, sy - y0
            row = y * w + x
            mat[row, y0 * w + x0] += (1 - fy) * (1 - fx)
            mat[row, y0 * w + x1] += (1 - fy) * fx
            mat[row, y1 * w + x0] += fy * (1 - fx)
            mat[row, y1 * w + x1] += fy * fx
    return mat


def sample_rows(theta_i, theta_next, duty, m):
    a = np.asarray(theta_i, dtype=float)
    b = np.asarray(theta_next, dtype=float)
    return [a + (k / m) * duty * (b - a) for k in range(m)]


def dense_frame_blocks(scene, frame, conventional=False):
    """Dense ``(K_L0, K_L1, K_A, offset)`` for a single-channel scene."""
    h, w = scene.shape
    n = h * w
    params = scene.motion_params()
    duty, m = scene.timing.duty_cycle, scene.timing.samples
    w0 = [dense_warp(p, h, w) for p in sample_rows(params[0, frame], params[0, frame + 1], duty, m)]
    w1 = [dense_warp(p, h, w) for p in sample_rows(params[1, frame], params[1, frame + 1], duty, m)]
    a = scene.alpha.ravel()
    l0 = scene.bg.ravel()
    l1 = scene.fg.ravel()
    k0 = sum(w0) / m
    k1 = sum(w1) / m
    if conventional:
        kl0 = np.diag(k1 @ a) @ k0
        ka = np.diag(k0 @ l0) @ k1 - k1 @ np.diag(l1)
    else:
        kl0 = sum(np.diag(w1k @ a) @ w0k for w0k, w1k in zip(w0, w1)) / m
        ka = sum(np.diag(w0k @ l0) @ w1k - w1k @ np.diag(l1) for w0k, w1k in zip(w0, w1)) / m
    kl1 = k1 @ np.diag(1.0 - a)
    offset = k1 @ l1
    assert kl0.shape == (n, n)
    return kl0, kl1, ka, offset


def dense_gradient(h, w):
    """Stacked forward-difference matrix ``[Dx; Dy]`` with zero last column/row."""
    n = h * w
    dx = np.zeros((n, n))
    dy = np.zeros((n, n))
    for y in range(h):
        for x in range(w):
            i = y * w + x
            if x < w - 1:
                dx[i, i] = -1.0
                dx[i, i + 1] = 1.0
            if y < h - 1:
                dy[i, i] = -1.0
                dy[i, i + w] = 1.0
    return np.vstack([dx, dy])


def hyper_laplacian_prox_brute(v, t, alpha=0.8, grid=20001):
    """argmin_x (x - v)^2 / (2 t) + |x|^alpha by grid search plus golden-section refinement."""
    s = 1.0 if v >= 0 else -1.0
    v = abs(v)
    if v == 0.0:
        return 0.0

    def f(x):
        return (x - v) ** 2 / (2 * t) + abs(x) ** alpha

    xs = np.linspace(0.0, v, grid)
    vals = (xs - v) ** 2 / (2 * t) + xs ** alpha
    j = int(np.argmin(vals))
    lo = xs[max(j - 1, 0)]
    hi = xs[min(j + 1, grid - 1)]
    g = (math.sqrt(5) - 1) / 2
    c, d = hi - g * (hi - lo), lo + g * (hi - lo)
    for _ in range(200):
        if f(c) < f(d):
            hi = d
        else:
            lo = c
        c, d = hi - g * (hi - lo), lo + g * (hi - lo)
    best = 0.5 * (lo + hi)
    if f(0.0) <= f(best):
        best = 0.0
    return s * best


def psnr_reference(a, b, mask=None):
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if mask is not None:
        keep = np.asarray(mask, dtype=bool).ravel()
        a, b = a[keep], b[keep]
    total = 0.0
    for u, v in zip(a, b):
        total += (u - v) * (u - v)
    mse = total / len(a)
    if mse == 0:
        return 99.0
    return min(99.0, 10.0 * math.log10(1.0 / mse))
