"""Pure-numpy kernels, the fallback when the compiled extension is absent.

Convolution goes through im2col + matmul with float64 accumulation, matching
the compiled backend to within one float32 ulp.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

# Cap on the transient float64 im2col block, in elements.
_BLOCK_ELEMS = 4_000_000


def conv2d_forward(x, k, bias):
    oc, ic, kh, kw = k.shape
    oh = x.shape[1] - kh + 1
    ow = x.shape[2] - kw + 1
    win = sliding_window_view(x, (kh, kw), axis=(1, 2))  # (c, oh, ow, kh, kw)
    kmat = k.reshape(oc, -1).astype(np.float64).T
    b64 = bias.astype(np.float64)
    out = np.empty((oh, ow, oc), np.float64)
    step = max(1, _BLOCK_ELEMS // max(ow * ic * kh * kw, 1))
    for ys in range(0, oh, step):
        block = win[:, ys : ys + step]
        rows = block.shape[1]
        cols = block.transpose(1, 2, 0, 3, 4).reshape(rows * ow, ic * kh * kw)
        out[ys : ys + rows] = (cols.astype(np.float64) @ kmat).reshape(rows, ow, oc)
    out += b64
    return out.transpose(2, 0, 1).astype(x.dtype)


def conv2d_backward(x, k, gy, need_input_grad=True):
    # Backward sums stay in the tensor dtype (float64 in verification mode).
    oc, ic, kh, kw = k.shape
    gb = gy.sum(axis=(1, 2))

    win = sliding_window_view(x, (kh, kw), axis=(1, 2))
    gk = np.tensordot(gy, win, axes=([1, 2], [1, 2]))  # (oc, ic, kh, kw)

    if need_input_grad:
        gyp = np.pad(gy, ((0, 0), (kh - 1, kh - 1), (kw - 1, kw - 1)))
        gwin = sliding_window_view(gyp, (kh, kw), axis=(1, 2))  # (oc, h, w, kh, kw)
        kflip = np.ascontiguousarray(k[:, :, ::-1, ::-1])
        gx = np.tensordot(gwin, kflip, axes=([0, 3, 4], [0, 2, 3]))  # (h, w, ic)
        gx = np.ascontiguousarray(gx.transpose(2, 0, 1))
    else:
        gx = np.zeros(x.shape, x.dtype)
    return gx, np.ascontiguousarray(gk), gb


def maxpool2_forward(x):
    c, h, w = x.shape
    oh, ow = h // 2, w // 2
    blocks = x.reshape(c, oh, 2, ow, 2).transpose(0, 1, 3, 2, 4).reshape(c, oh, ow, 4)
    idx = blocks.argmax(axis=3)  # first max wins, matching row-major tie rule
    y = np.take_along_axis(blocks, idx[..., None], axis=3)[..., 0]
    return np.ascontiguousarray(y), idx.astype(np.uint8)


def maxpool2_backward(idx, gy):
    c, oh, ow = gy.shape
    scattered = np.zeros((c, oh, ow, 4), gy.dtype)
    np.put_along_axis(scattered, idx[..., None].astype(np.intp), gy[..., None], axis=3)
    gx = scattered.reshape(c, oh, ow, 2, 2).transpose(0, 1, 3, 2, 4)
    return np.ascontiguousarray(gx.reshape(c, oh * 2, ow * 2))
