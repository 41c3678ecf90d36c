# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled bilinear gather/scatter kernels.

Same contract as ``layerblur._warp_py``; see that module for the
coordinate convention and clamping rules.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline void _taps(double a11, double a12, double a21, double a22,
                       double tx, double ty, Py_ssize_t x, Py_ssize_t y,
                       Py_ssize_t h, Py_ssize_t w,
                       Py_ssize_t* x0, Py_ssize_t* x1, Py_ssize_t* y0, Py_ssize_t* y1,
                       double* fx, double* fy) noexcept nogil:
    cdef double xs = a11 * x + a12 * y + tx
    cdef double ys = a21 * x + a22 * y + ty
    if xs < 0.0:
        xs = 0.0
    elif xs > w - 1:
        xs = w - 1
    if ys < 0.0:
        ys = 0.0
    elif ys > h - 1:
        ys = h - 1
    x0[0] = <Py_ssize_t>xs
    y0[0] = <Py_ssize_t>ys
    x1[0] = x0[0] + 1 if x0[0] < w - 1 else x0[0]
    y1[0] = y0[0] + 1 if y0[0] < h - 1 else y0[0]
    fx[0] = xs - x0[0]
    fy[0] = ys - y0[0]


def warp_stack(const double[:, ::1] src, const double[:, ::1] params):
    cdef Py_ssize_t h = src.shape[0], w = src.shape[1], m = params.shape[0]
    out_arr = np.empty((m, h, w), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t k, x, y, x0, x1, y0, y1
    cdef double fx, fy
    with nogil:
        for k in range(m):
            for y in range(h):
                for x in range(w):
                    _taps(params[k, 0], params[k, 1], params[k, 2], params[k, 3],
                          params[k, 4], params[k, 5], x, y, h, w,
                          &x0, &x1, &y0, &y1, &fx, &fy)
                    out[k, y, x] = ((1.0 - fy) * ((1.0 - fx) * src[y0, x0] + fx * src[y0, x1])
                                    + fy * ((1.0 - fx) * src[y1, x0] + fx * src[y1, x1]))
    return out_arr


def warp_adjoint_sum(const double[:, :, ::1] stack, const double[:, ::1] params):
    cdef Py_ssize_t m = stack.shape[0], h = stack.shape[1], w = stack.shape[2]
    if params.shape[0] != m:
        raise ValueError("stack and params disagree on the number of samples")
    out_arr = np.zeros((h, w), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t k, x, y, x0, x1, y0, y1
    cdef double fx, fy, v
    with nogil:
        for k in range(m):
            for y in range(h):
                for x in range(w):
                    _taps(params[k, 0], params[k, 1], params[k, 2], params[k, 3],
                          params[k, 4], params[k, 5], x, y, h, w,
                          &x0, &x1, &y0, &y1, &fx, &fy)
                    v = stack[k, y, x]
                    out[y0, x0] += (1.0 - fy) * (1.0 - fx) * v
                    out[y0, x1] += (1.0 - fy) * fx * v
                    out[y1, x0] += fy * (1.0 - fx) * v
                    out[y1, x1] += fy * fx * v
    return out_arr
