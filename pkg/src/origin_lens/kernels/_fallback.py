"""Pure-numpy kernel implementations.

Convolutions are computed as nine shifted GEMMs (one per filter tap) over the
zero-padded input, which avoids materializing a full im2col matrix. Shapes
and dtypes are validated by the caller (origin_lens.layers).
"""

import numpy as np

BACKEND_NAME = "python"


def set_num_threads(n):
    """No-op: BLAS threading is controlled by the environment."""


def conv2d_forward(x, w, b):
    """3x3 stride-1 same-padding cross-correlation.

    x: (B,H,W,Ci), w: (3,3,Ci,Co), b: (Co,) -> (B,H,W,Co)
    """
    bsz, h, wd, ci = x.shape
    co = w.shape[3]
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
    out = np.zeros((bsz * h * wd, co), dtype=x.dtype)
    for ki in range(3):
        for kj in range(3):
            win = xp[:, ki : ki + h, kj : kj + wd, :].reshape(-1, ci)
            out += win @ w[ki, kj]
    out += b
    return out.reshape(bsz, h, wd, co)


def conv2d_backward(x, w, gy, need_input_grad=True):
    """Gradients of conv2d_forward. Returns (gx, gw, gb); gx is None when skipped."""
    bsz, h, wd, ci = x.shape
    co = w.shape[3]
    gyf = gy.reshape(-1, co)
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
    gw = np.empty_like(w)
    gb = gyf.sum(axis=0)
    gxp = np.zeros_like(xp) if need_input_grad else None
    for ki in range(3):
        for kj in range(3):
            win = xp[:, ki : ki + h, kj : kj + wd, :].reshape(-1, ci)
            gw[ki, kj] = win.T @ gyf
            if need_input_grad:
                gxp[:, ki : ki + h, kj : kj + wd, :] += (gyf @ w[ki, kj].T).reshape(
                    bsz, h, wd, ci
                )
    gx = gxp[:, 1:-1, 1:-1, :].copy() if need_input_grad else None
    return gx, gw, gb


def maxpool2x2_forward(x):
    """2x2 stride-2 max pooling; ties go to the first index in row-major window order.

    Returns (y, idx) with idx in {0,1,2,3} flat within each window.
    """
    bsz, h, wd, c = x.shape
    win = (
        x.reshape(bsz, h // 2, 2, wd // 2, 2, c)
        .transpose(0, 1, 3, 5, 2, 4)
        .reshape(bsz, h // 2, wd // 2, c, 4)
    )
    idx = win.argmax(axis=-1)
    y = np.take_along_axis(win, idx[..., None], axis=-1)[..., 0]
    return y, idx.astype(np.uint8)


def maxpool2x2_backward(gy, idx):
    """Route pooled gradients back to the argmax positions."""
    bsz, ho, wo, c = gy.shape
    g = np.zeros((bsz, ho, wo, c, 4), dtype=gy.dtype)
    np.put_along_axis(g, idx[..., None].astype(np.intp), gy[..., None], axis=-1)
    return (
        g.reshape(bsz, ho, wo, c, 2, 2)
        .transpose(0, 1, 4, 2, 5, 3)
        .reshape(bsz, ho * 2, wo * 2, c)
    )
