# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled kernel core.

Convolution forward/backward dispatch to the C microkernels in
_conv_kernels.c (AVX-512 register tiles when available); 2x2 max pooling is
implemented here. Contracts match origin_lens.kernels._fallback; results may
differ from the fallback in the last float ulps because summation order
differs.
"""

import numpy as np

from cython.parallel cimport prange
from openmp cimport omp_set_num_threads

cdef extern from "_conv_kernels.h" nogil:
    void ol_conv3x3_fwd_f32(const float *xp, const float *w, const float *bias,
                            float *y, ptrdiff_t B, ptrdiff_t H, ptrdiff_t W,
                            ptrdiff_t Ci, ptrdiff_t Co)
    void ol_conv3x3_fwd_f64(const double *xp, const double *w, const double *bias,
                            double *y, ptrdiff_t B, ptrdiff_t H, ptrdiff_t W,
                            ptrdiff_t Ci, ptrdiff_t Co)
    void ol_conv3x3_gw_f32(const float *xp, const float *gy, float *gw,
                           ptrdiff_t B, ptrdiff_t H, ptrdiff_t W,
                           ptrdiff_t Ci, ptrdiff_t Co)
    void ol_conv3x3_gw_f64(const double *xp, const double *gy, double *gw,
                           ptrdiff_t B, ptrdiff_t H, ptrdiff_t W,
                           ptrdiff_t Ci, ptrdiff_t Co)

BACKEND_NAME = "compiled"

# the C microkernels use fixed-size stack accumulators
MAX_CHANNELS = 2048

ctypedef fused real:
    float
    double


def set_num_threads(n):
    omp_set_num_threads(int(n))


cdef void _pool_fwd(const real[:, :, :, ::1] x, real[:, :, :, ::1] y,
                    unsigned char[:, :, :, ::1] idx) noexcept nogil:
    cdef Py_ssize_t bsz = y.shape[0], ho = y.shape[1], wo = y.shape[2], c = y.shape[3]
    cdef Py_ssize_t bb, oh, ow, ch, k, ii, jj
    cdef real best, v
    cdef unsigned char arg
    for bb in prange(bsz, schedule='static'):
        for oh in range(ho):
            for ow in range(wo):
                for ch in range(c):
                    best = x[bb, 2 * oh, 2 * ow, ch]
                    arg = 0
                    for k in range(1, 4):
                        ii = k >> 1
                        jj = k & 1
                        v = x[bb, 2 * oh + ii, 2 * ow + jj, ch]
                        if v > best:
                            best = v
                            arg = <unsigned char> k
                    y[bb, oh, ow, ch] = best
                    idx[bb, oh, ow, ch] = arg


cdef void _pool_bwd(const real[:, :, :, ::1] gy, const unsigned char[:, :, :, ::1] idx,
                    real[:, :, :, ::1] gx) noexcept nogil:
    cdef Py_ssize_t bsz = gy.shape[0], ho = gy.shape[1], wo = gy.shape[2], c = gy.shape[3]
    cdef Py_ssize_t bb, oh, ow, ch
    cdef unsigned char k
    for bb in prange(bsz, schedule='static'):
        for oh in range(ho):
            for ow in range(wo):
                for ch in range(c):
                    k = idx[bb, oh, ow, ch]
                    gx[bb, 2 * oh + (k >> 1), 2 * ow + (k & 1), ch] = gy[bb, oh, ow, ch]


def _check_channels(ci, co):
    if ci > MAX_CHANNELS or co > MAX_CHANNELS:
        raise ValueError(
            f"compiled conv kernels support at most {MAX_CHANNELS} channels, "
            f"got Ci={ci}, Co={co}"
        )


def conv2d_forward(x, w, b):
    cdef Py_ssize_t bsz = x.shape[0], h = x.shape[1], wd = x.shape[2], ci = x.shape[3]
    cdef Py_ssize_t co = w.shape[3]
    _check_channels(ci, co)
    w = np.ascontiguousarray(w)
    b = np.ascontiguousarray(b)
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
    y = np.empty((bsz, h, wd, co), dtype=x.dtype)
    if bsz == 0:
        return y
    cdef float[:, :, :, ::1] xf, wf, yf
    cdef float[::1] bf
    cdef double[:, :, :, ::1] xd, wdv, yd
    cdef double[::1] bd
    if x.dtype == np.float32:
        xf, wf, bf, yf = xp, w, b, y
        with nogil:
            ol_conv3x3_fwd_f32(&xf[0, 0, 0, 0], &wf[0, 0, 0, 0], &bf[0],
                               &yf[0, 0, 0, 0], bsz, h, wd, ci, co)
    else:
        xd, wdv, bd, yd = xp, w, b, y
        with nogil:
            ol_conv3x3_fwd_f64(&xd[0, 0, 0, 0], &wdv[0, 0, 0, 0], &bd[0],
                               &yd[0, 0, 0, 0], bsz, h, wd, ci, co)
    return y


def conv2d_backward(x, w, gy, need_input_grad=True):
    cdef Py_ssize_t bsz = x.shape[0], h = x.shape[1], wd = x.shape[2], ci = x.shape[3]
    cdef Py_ssize_t co = w.shape[3]
    _check_channels(ci, co)
    w = np.ascontiguousarray(w)
    gy = np.ascontiguousarray(gy)
    gb = gy.reshape(-1, co).sum(axis=0)
    gw = np.zeros_like(w)
    if bsz == 0:
        gx = np.zeros_like(x) if need_input_grad else None
        return gx, gw, gb
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))

    cdef float[:, :, :, ::1] af, bf4, cf
    cdef float[::1] zf
    cdef double[:, :, :, ::1] ad, bd4, cd
    cdef double[::1] zd
    if x.dtype == np.float32:
        af, bf4, cf = xp, gy, gw
        with nogil:
            ol_conv3x3_gw_f32(&af[0, 0, 0, 0], &bf4[0, 0, 0, 0], &cf[0, 0, 0, 0],
                              bsz, h, wd, ci, co)
    else:
        ad, bd4, cd = xp, gy, gw
        with nogil:
            ol_conv3x3_gw_f64(&ad[0, 0, 0, 0], &bd4[0, 0, 0, 0], &cd[0, 0, 0, 0],
                              bsz, h, wd, ci, co)

    gx = None
    if need_input_grad:
        # input gradient = same-padding correlation of gy with the flipped,
        # channel-transposed filter bank
        w_flip = np.ascontiguousarray(w[::-1, ::-1].transpose(0, 1, 3, 2))
        gyp = np.pad(gy, ((0, 0), (1, 1), (1, 1), (0, 0)))
        zero_bias = np.zeros(ci, dtype=x.dtype)
        gx = np.empty_like(x)
        if x.dtype == np.float32:
            af, bf4, cf, zf = gyp, w_flip, gx, zero_bias
            with nogil:
                ol_conv3x3_fwd_f32(&af[0, 0, 0, 0], &bf4[0, 0, 0, 0], &zf[0],
                                   &cf[0, 0, 0, 0], bsz, h, wd, co, ci)
        else:
            ad, bd4, cd, zd = gyp, w_flip, gx, zero_bias
            with nogil:
                ol_conv3x3_fwd_f64(&ad[0, 0, 0, 0], &bd4[0, 0, 0, 0], &zd[0],
                                   &cd[0, 0, 0, 0], bsz, h, wd, co, ci)
    return gx, gw, gb


def maxpool2x2_forward(x):
    cdef Py_ssize_t bsz = x.shape[0], h = x.shape[1], wd = x.shape[2], c = x.shape[3]
    x = np.ascontiguousarray(x)
    y = np.empty((bsz, h // 2, wd // 2, c), dtype=x.dtype)
    idx = np.empty((bsz, h // 2, wd // 2, c), dtype=np.uint8)
    if bsz == 0:
        return y, idx
    if x.dtype == np.float32:
        _pool_fwd[float](x, y, idx)
    else:
        _pool_fwd[double](x, y, idx)
    return y, idx


def maxpool2x2_backward(gy, idx):
    cdef Py_ssize_t bsz = gy.shape[0], ho = gy.shape[1], wo = gy.shape[2], c = gy.shape[3]
    gy = np.ascontiguousarray(gy)
    idx = np.ascontiguousarray(idx)
    gx = np.zeros((bsz, ho * 2, wo * 2, c), dtype=gy.dtype)
    if bsz == 0:
        return gx
    if gy.dtype == np.float32:
        _pool_bwd[float](gy, idx, gx)
    else:
        _pool_bwd[double](gy, idx, gx)
    return gx
