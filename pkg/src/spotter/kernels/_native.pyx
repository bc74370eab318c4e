"""Compiled inner loops for valid convolution and 2x2 max pooling.

Forward sums are accumulated in double precision and rounded once at the
final store; every output element accumulates its terms in (channel, dy,
dx) order, so a window crop and the matching region of a dense pass go
through bit-identical arithmetic. Backward sums run in the tensor dtype.
Parallel loops only split disjoint output slices across threads, which
keeps results independent of the thread count.
"""

from cython.parallel cimport prange
from libc.stdlib cimport free, malloc

ctypedef fused real_t:
    float
    double


def conv2d_forward(real_t[:, :, ::1] x, real_t[:, :, :, ::1] k,
                   real_t[::1] bias, real_t[:, :, ::1] out):
    cdef Py_ssize_t ic = x.shape[0]
    cdef Py_ssize_t oc = k.shape[0], kh = k.shape[2], kw = k.shape[3]
    cdef Py_ssize_t oh = out.shape[1], ow = out.shape[2]
    cdef Py_ssize_t o, i, dy, dx, yy, xx
    cdef double kv
    cdef double* acc
    cdef int oom = 0
    cdef bint par = oc * ic * kh * kw * oh * ow >= 8_000_000
    for o in prange(oc, nogil=True, schedule="static", use_threads_if=par):
        acc = <double*> malloc(ow * sizeof(double))
        if acc == NULL:
            oom += 1
            continue
        for yy in range(oh):
            for xx in range(ow):
                acc[xx] = <double> bias[o]
            for i in range(ic):
                for dy in range(kh):
                    for dx in range(kw):
                        kv = <double> k[o, i, dy, dx]
                        for xx in range(ow):
                            acc[xx] = acc[xx] + kv * <double> x[i, yy + dy, xx + dx]
            for xx in range(ow):
                out[o, yy, xx] = <real_t> acc[xx]
        free(acc)
    if oom:
        raise MemoryError()


def conv2d_backward(real_t[:, :, ::1] x, real_t[:, :, :, ::1] k,
                    real_t[:, :, ::1] gy, real_t[:, :, ::1] gx,
                    real_t[:, :, :, ::1] gk, real_t[::1] gb,
                    bint need_input_grad):
    # gx must arrive zero-filled; gk and gb are fully overwritten.
    # Accumulation runs in the tensor dtype: training gradients tolerate
    # float32 sums, and the 64-bit verification path passes doubles.
    cdef Py_ssize_t ic = x.shape[0]
    cdef Py_ssize_t oc = k.shape[0], kh = k.shape[2], kw = k.shape[3]
    cdef Py_ssize_t oh = gy.shape[1], ow = gy.shape[2]
    cdef Py_ssize_t o, i, dy, dx, yy, xx, x0
    cdef real_t acc, a0, a1, a2, a3, kv
    cdef bint par = oc * ic * kh * kw * oh * ow >= 64_000_000
    for o in prange(oc, nogil=True, schedule="static", use_threads_if=par):
        acc = 0.0
        for yy in range(oh):
            for xx in range(ow):
                acc = acc + gy[o, yy, xx]
        gb[o] = acc
        for i in range(ic):
            for dy in range(kh):
                for dx in range(kw):
                    # four interleaved partial sums break the add latency
                    # chain; the combination order is fixed, so the result
                    # is deterministic
                    a0 = 0.0
                    a1 = 0.0
                    a2 = 0.0
                    a3 = 0.0
                    for yy in range(oh):
                        x0 = 0
                        while x0 + 4 <= ow:
                            a0 = a0 + x[i, yy + dy, x0 + dx] * gy[o, yy, x0]
                            a1 = a1 + x[i, yy + dy, x0 + 1 + dx] * gy[o, yy, x0 + 1]
                            a2 = a2 + x[i, yy + dy, x0 + 2 + dx] * gy[o, yy, x0 + 2]
                            a3 = a3 + x[i, yy + dy, x0 + 3 + dx] * gy[o, yy, x0 + 3]
                            x0 = x0 + 4
                        for xx in range(x0, ow):
                            a0 = a0 + x[i, yy + dy, xx + dx] * gy[o, yy, xx]
                    gk[o, i, dy, dx] = ((a0 + a1) + (a2 + a3))
    if need_input_grad:
        for i in prange(ic, nogil=True, schedule="static", use_threads_if=par):
            for o in range(oc):
                for dy in range(kh):
                    for dx in range(kw):
                        kv = k[o, i, dy, dx]
                        for yy in range(oh):
                            for xx in range(ow):
                                gx[i, yy + dy, xx + dx] += kv * gy[o, yy, xx]


def maxpool2_forward(real_t[:, :, ::1] x, real_t[:, :, ::1] out,
                     unsigned char[:, :, ::1] idx):
    cdef Py_ssize_t c = out.shape[0], oh = out.shape[1], ow = out.shape[2]
    cdef Py_ssize_t ch, py, px, r, s, j
    cdef real_t best, v
    cdef unsigned char bj
    cdef bint par = c * oh * ow >= 2_000_000
    for ch in prange(c, nogil=True, schedule="static", use_threads_if=par):
        for py in range(oh):
            for px in range(ow):
                best = x[ch, 2 * py, 2 * px]
                bj = 0
                j = 0
                for r in range(2):
                    for s in range(2):
                        v = x[ch, 2 * py + r, 2 * px + s]
                        if v > best:  # strict: ties keep the earliest cell
                            best = v
                            bj = <unsigned char> j
                        j = j + 1
                out[ch, py, px] = best
                idx[ch, py, px] = bj


def maxpool2_backward(unsigned char[:, :, ::1] idx, real_t[:, :, ::1] gy,
                      real_t[:, :, ::1] gx):
    # gx must arrive zero-filled.
    cdef Py_ssize_t c = gy.shape[0], oh = gy.shape[1], ow = gy.shape[2]
    cdef Py_ssize_t ch, py, px
    cdef unsigned char bj
    cdef bint par = c * oh * ow >= 2_000_000
    for ch in prange(c, nogil=True, schedule="static", use_threads_if=par):
        for py in range(oh):
            for px in range(ow):
                bj = idx[ch, py, px]
                gx[ch, 2 * py + (bj >> 1), 2 * px + (bj & 1)] = gy[ch, py, px]
