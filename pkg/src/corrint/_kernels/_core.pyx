# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled five-path wavegroup kernel.

Same contract as the numpy fallback in ``_py.py``: the amplitude at point x
is  sum_p amp_p * exp( sum_j [ -(y_pj - b_j)^2 c_j + i kbar_j y_pj ] )  with
y_p = T_p @ x + s_p.  The complex exponential is expanded into
exp(re) * (cos(im) + i sin(im)) so the loop stays nogil and allocation-free.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp

cdef extern from "math.h" nogil:
    void sincos(double x, double *sin_out, double *cos_out)

cnp.import_array()


def eval_amplitude(points, amps, maps, shifts, b, c, kbar, out=None):
    """See ``corrint._kernels._py.eval_amplitude``."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] pts = \
        np.ascontiguousarray(points, dtype=np.float64)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] amps_a = \
        np.ascontiguousarray(amps, dtype=np.complex128)
    cdef cnp.ndarray[cnp.float64_t, ndim=3, mode="c"] maps_a = \
        np.ascontiguousarray(maps, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] shifts_a = \
        np.ascontiguousarray(shifts, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] b_a = \
        np.ascontiguousarray(b, dtype=np.float64)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] c_a = \
        np.ascontiguousarray(c, dtype=np.complex128)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] kbar_a = \
        np.ascontiguousarray(kbar, dtype=np.float64)

    cdef Py_ssize_t n = pts.shape[0]
    if out is None:
        out = np.empty(n, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out_a = out

    cdef double amp_re[5]
    cdef double amp_im[5]
    cdef int active[5]
    cdef double t_flat[45]
    cdef double s_flat[15]
    cdef double b_l[3]
    cdef double c_re[3]
    cdef double c_im[3]
    cdef double k_l[3]
    cdef Py_ssize_t i, p, j, l

    for p in range(5):
        amp_re[p] = amps_a[p].real
        amp_im[p] = amps_a[p].imag
        active[p] = 1 if (amp_re[p] != 0.0 or amp_im[p] != 0.0) else 0
        for j in range(3):
            s_flat[p * 3 + j] = shifts_a[p, j]
            for l in range(3):
                t_flat[p * 9 + j * 3 + l] = maps_a[p, j, l]
    for j in range(3):
        b_l[j] = b_a[j]
        c_re[j] = c_a[j].real
        c_im[j] = c_a[j].imag
        k_l[j] = kbar_a[j]

    cdef double x0, x1, x2, y, d, re, im, er, pre, pim, acc_re, acc_im
    with nogil:
        for i in range(n):
            x0 = pts[i, 0]
            x1 = pts[i, 1]
            x2 = pts[i, 2]
            acc_re = 0.0
            acc_im = 0.0
            for p in range(5):
                if not active[p]:
                    continue
                re = 0.0
                im = 0.0
                for j in range(3):
                    y = (t_flat[p * 9 + j * 3 + 0] * x0
                         + t_flat[p * 9 + j * 3 + 1] * x1
                         + t_flat[p * 9 + j * 3 + 2] * x2
                         + s_flat[p * 3 + j])
                    d = y - b_l[j]
                    d = d * d
                    re += -d * c_re[j]
                    im += -d * c_im[j] + k_l[j] * y
                if re < -46.0:
                    # term below 1e-20 of its own prefactor: drop it before
                    # paying for exp/cos/sin (quadrature boxes are +-8 sigma,
                    # so this only trims paths far from their own envelope)
                    continue
                er = exp(re)
                sincos(im, &pim, &pre)
                pre = er * pre
                pim = er * pim
                acc_re += amp_re[p] * pre - amp_im[p] * pim
                acc_im += amp_re[p] * pim + amp_im[p] * pre
            out_a[i].real = acc_re
            out_a[i].imag = acc_im
    return out
