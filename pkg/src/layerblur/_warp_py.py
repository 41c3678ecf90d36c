"""Pure-numpy bilinear gather/scatter kernels.

Coordinates are (x, y) = (column, row) with the origin at the centre of the
top-left pixel.  Output pixel ``(x, y)`` of sample ``k`` reads the source at
``(a11*x + a12*y + tx, a21*x + a22*y + ty)`` with the sample position clamped
into ``[0, w-1] x [0, h-1]`` (edge replication).

``warp_adjoint_sum`` is the exact transpose of ``warp_stack`` summed over
samples.  Both functions take float64 C-contiguous arrays and are mirrored
one-for-one by the compiled ``_cwarp`` extension.
"""
import numpy as np


def _taps(params, h, w):
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    p = params[:, :, None, None]
    sx = p[:, 0] * xs + p[:, 1] * ys + p[:, 4]
    sy = p[:, 2] * xs + p[:, 3] * ys + p[:, 5]
    sx = np.clip(sx, 0.0, w - 1)
    sy = np.clip(sy, 0.0, h - 1)
    x0 = sx.astype(np.intp)
    y0 = sy.astype(np.intp)
    x1 = np.where(x0 < w - 1, x0 + 1, x0)
    y1 = np.where(y0 < h - 1, y0 + 1, y0)
    return x0, x1, y0, y1, sx - x0, sy - y0


def warp_stack(src, params):
    src = np.ascontiguousarray(src, dtype=np.float64)
    params = np.ascontiguousarray(params, dtype=np.float64).reshape(-1, 6)
    h, w = src.shape
    x0, x1, y0, y1, fx, fy = _taps(params, h, w)
    return ((1.0 - fy) * ((1.0 - fx) * src[y0, x0] + fx * src[y0, x1])
            + fy * ((1.0 - fx) * src[y1, x0] + fx * src[y1, x1]))


def warp_adjoint_sum(stack, params):
    stack = np.ascontiguousarray(stack, dtype=np.float64)
    params = np.ascontiguousarray(params, dtype=np.float64).reshape(-1, 6)
    m, h, w = stack.shape
    if params.shape[0] != m:
        raise ValueError("stack and params disagree on the number of samples")
    x0, x1, y0, y1, fx, fy = _taps(params, h, w)
    idx = np.concatenate([(y0 * w + x0).ravel(), (y0 * w + x1).ravel(),
                          (y1 * w + x0).ravel(), (y1 * w + x1).ravel()])
    wts = np.concatenate([((1.0 - fy) * (1.0 - fx) * stack).ravel(),
                          ((1.0 - fy) * fx * stack).ravel(),
                          (fy * (1.0 - fx) * stack).ravel(),
                          (fy * fx * stack).ravel()])
    return np.bincount(idx, weights=wts, minlength=h * w).reshape(h, w)
