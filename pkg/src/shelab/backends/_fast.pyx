# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled stepping kernels.

Mirror of backends/pyref.py with identical floating-point semantics: same
tap order in the convolution, sequential reductions, power-of-two rescaling.
Compiled with -ffp-contract=off so no FMA contraction can change rounding.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport frexp, ldexp

cnp.import_array()

NAME = "compiled"

cdef double LN2 = 0.6931471805599453094172321214581766  # 0x1.62e42fefa39efp-1


cdef void _conv_leak(double[::1] v, double[::1] out, double[::1] kern,
                     Py_ssize_t radius, double* leak, double* total) nogil:
    cdef Py_ssize_t n = v.shape[0]
    cdef Py_ssize_t j, m
    cdef double acc, w
    for j in range(n):
        out[j] = 0.0
    for m in range(-radius, radius + 1):
        w = kern[m + radius]
        if m >= 0:
            for j in range(n - m):
                out[j] = out[j] + w * v[j + m]
        else:
            for j in range(-m, n):
                out[j] = out[j] + w * v[j + m]
    acc = 0.0
    for j in range(n):
        acc = acc + v[j]
    total[0] = acc
    cdef double lk = 0.0
    cdef double acc_pre = 0.0
    cdef double acc_suf = 0.0
    cdef Py_ssize_t mcap = radius if radius < n else n
    for m in range(1, mcap + 1):
        acc_pre = acc_pre + v[m - 1]
        acc_suf = acc_suf + v[n - m]
        lk = lk + kern[radius + m] * acc_pre
        lk = lk + kern[radius - m] * acc_suf
    leak[0] = lk


cdef double _renorm(double[::1] v, double dlog) nogil:
    cdef Py_ssize_t n = v.shape[0]
    cdef Py_ssize_t j
    cdef double mx = 0.0
    cdef int ex = 0
    for j in range(n):
        if v[j] > mx:
            mx = v[j]
    if mx > 0.0 and (mx < 0.5 or mx >= 2.0):
        frexp(mx, &ex)
        for j in range(n):
            v[j] = ldexp(v[j], -ex + 1)
        dlog = dlog + (ex - 1) * LN2
    return dlog


def propagate_span(values, kernel, mult, adjoint=False):
    """See backends.pyref.propagate_span; identical contract and bytes."""
    cdef cnp.ndarray[double, ndim=1] v = np.array(values, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] kern_arr = np.ascontiguousarray(kernel, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2] mrows = np.ascontiguousarray(mult, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] buf = np.empty_like(v)
    cdef double[::1] vv = v
    cdef double[::1] bb = buf
    cdef double[::1] kk = kern_arr
    cdef double[:, ::1] mm = mrows
    cdef Py_ssize_t radius = (kern_arr.shape[0] - 1) // 2
    cdef Py_ssize_t n = v.shape[0]
    cdef Py_ssize_t nsteps = mrows.shape[0]
    cdef Py_ssize_t i, j
    cdef bint adj = bool(adjoint)
    cdef double dlog = 0.0
    cdef double max_leak = 0.0
    cdef double leak = 0.0
    cdef double total = 0.0
    cdef double frac
    with nogil:
        for i in range(nsteps):
            if adj:
                for j in range(n):
                    vv[j] = vv[j] * mm[i, j]
                _conv_leak(vv, bb, kk, radius, &leak, &total)
                for j in range(n):
                    vv[j] = bb[j]
            else:
                _conv_leak(vv, bb, kk, radius, &leak, &total)
                for j in range(n):
                    vv[j] = bb[j] * mm[i, j]
            if total > 0.0:
                frac = leak / total
                if frac > max_leak:
                    max_leak = frac
            dlog = _renorm(vv, dlog)
    return v, dlog, max_leak


def heat_span(values, kernel, n_steps):
    """See backends.pyref.heat_span; identical contract and bytes."""
    cdef cnp.ndarray[double, ndim=1] v = np.array(values, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] kern_arr = np.ascontiguousarray(kernel, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] buf = np.empty_like(v)
    cdef double[::1] vv = v
    cdef double[::1] bb = buf
    cdef double[::1] kk = kern_arr
    cdef Py_ssize_t radius = (kern_arr.shape[0] - 1) // 2
    cdef Py_ssize_t n = v.shape[0]
    cdef Py_ssize_t steps = int(n_steps)
    cdef Py_ssize_t i, j
    cdef double dlog = 0.0
    cdef double max_leak = 0.0
    cdef double leak = 0.0
    cdef double total = 0.0
    cdef double frac
    with nogil:
        for i in range(steps):
            _conv_leak(vv, bb, kk, radius, &leak, &total)
            for j in range(n):
                vv[j] = bb[j]
            if total > 0.0:
                frac = leak / total
                if frac > max_leak:
                    max_leak = frac
            dlog = _renorm(vv, dlog)
    return v, dlog, max_leak
