"""Pure-numpy evaluation of the five-path wavegroup amplitude.

Reference implementation for the optional C kernel; both must agree to
near machine precision (enforced by tests).  The amplitude at point x is

    sum_p  amp_p * exp( sum_j [ -(y_pj - b_j)^2 * c_j + i * kbar_j * y_pj ] )

with y_p = T_p @ x + s_p, where amp_p already folds the path weight and all
point-independent packet prefactors/phases.
"""

from __future__ import annotations

import numpy as np

_CHUNK = 1 << 19


def eval_amplitude(points, amps, maps, shifts, b, c, kbar, out=None):
    """Five-path amplitude at each row of ``points``.

    points : (n, 3) float64, coordinate triples (x1, X, x2)
    amps   : (5,) complex128, path weight times packet prefactor product
    maps   : (5, 3, 3) float64, per-path coordinate transforms
    shifts : (5, 3) float64, per-path affine offsets
    b      : (3,) float64, packet envelope centers at the evaluation time
    c      : (3,) complex128, inverse complex variances 1/(4 sigma^2 (1+i tau))
    kbar   : (3,) float64, central wavevectors
    out    : optional (n,) complex128 destination
    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if out is None:
        out = np.empty(n, dtype=np.complex128)
    for start in range(0, max(n, 1), _CHUNK):
        x = points[start:start + _CHUNK]
        acc = np.zeros(x.shape[0], dtype=np.complex128)
        for p in range(5):
            if amps[p] == 0:
                continue
            y = x @ maps[p].T + shifts[p]
            d = y - b
            arg = -(d * d) @ c + 1j * (y @ kbar)
            acc += amps[p] * np.exp(arg)
        out[start:start + _CHUNK] = acc
    return out
