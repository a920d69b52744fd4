"""Fringe metrics: turn sampled PDF slices into testable numbers.

All routines work on plain uniformly-sampled arrays; they know nothing about
where a slice came from.  ``fringe_period`` returns None (not an error) when
no significant spectral peak exists, so "no fringes" is a first-class result.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .errors import AnalysisError


def _windowed_spectrum(values: np.ndarray) -> np.ndarray:
    y = (values - values.mean()) * np.hanning(values.size)
    return np.abs(np.fft.rfft(y))


def _peak_bin(spec: np.ndarray):
    """Dominant non-DC bin, or None when the peak is not significant."""
    if spec.size < 4:
        return None
    k = 1 + int(np.argmax(spec[1:]))
    floor = float(np.median(spec[1:]))
    if k < 2:
        # fewer than two cycles fit the window; period would be meaningless
        return None
    if spec[k] < 5.0 * floor:
        return None
    return k


def _interp_bin(spec: np.ndarray, k: int) -> float:
    """3-point quadratic refinement of the peak position, in bins."""
    if k <= 0 or k >= spec.size - 1:
        return float(k)
    with np.errstate(divide="ignore"):
        sl, sc, sr = np.log(spec[k - 1 : k + 2] + 1e-300)
    denom = sl - 2.0 * sc + sr
    if denom == 0.0:
        return float(k)
    delta = 0.5 * (sl - sr) / denom
    return float(k) + float(np.clip(delta, -0.5, 0.5))


def fringe_period(values, ds: float = 1.0):
    """Dominant oscillation period of a uniformly sampled slice.

    Returns the period in the units of ``ds``, or None when the slice has no
    significant fringe (flat, pure envelope, or fewer than two cycles).
    """
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size < 8:
        raise AnalysisError("fringe_period needs a 1D slice with >= 8 samples")
    if not ds > 0:
        raise AnalysisError("sample spacing must be positive")
    spec = _windowed_spectrum(v)
    scale = float(np.abs(v).max())
    if scale == 0.0:
        return None
    k = _peak_bin(spec)
    if k is None or spec[k] < 1e-9 * v.size * scale:
        return None
    kf = _interp_bin(spec, k)
    return float(v.size * ds / kf)


def half_max_window(values) -> tuple:
    """Contiguous index range around the global max where values >= max/2."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0 or not np.any(v > 0):
        raise AnalysisError("cannot window an empty or non-positive slice")
    j = int(np.argmax(v))
    half = 0.5 * v[j]
    i0 = j
    while i0 > 0 and v[i0 - 1] >= half:
        i0 -= 1
    i1 = j + 1
    while i1 < v.size and v[i1] >= half:
        i1 += 1
    return i0, i1


def visibility(values, window=None, ds: float = 1.0, period_hint=None) -> float:
    """(max - min)/(max + min) after envelope flattening.

    window : (i0, i1) index range, or None for the whole slice.
    period_hint : known fringe period (same units as ds); when absent the
        period is estimated first.  With a period in hand the slice is
        divided by a moving-average envelope of width >= 3 periods and the
        contrast is measured on the flattened interior; without one the raw
        ratio is returned (correct for slow envelopes, conservative
        otherwise).
    """
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise AnalysisError("visibility works on 1D slices")
    if window is not None:
        i0, i1 = int(window[0]), int(window[1])
        v = v[i0:i1]
    if v.size == 0:
        raise AnalysisError("empty visibility window")
    if np.all(v == 0.0):
        raise AnalysisError("all-zero visibility window")

    period = period_hint
    if period is None:
        period = fringe_period(v, ds)
    if period is not None:
        width = int(np.ceil(3.0 * period / ds))
        width += 1 - (width % 2)  # odd
        if 3 <= width < v.size:
            kernel = np.full(width, 1.0 / width)
            env = np.convolve(v, kernel, mode="valid")
            core = v[width // 2 : v.size - (width // 2)]
            good = env > 1e-300
            if good.any():
                flat = core[good] / env[good]
                vmax, vmin = float(flat.max()), float(flat.min())
                if vmax + vmin > 0:
                    return min(1.0, max(0.0, (vmax - vmin) / (vmax + vmin)))

    vmax, vmin = float(v.max()), float(v.min())
    if vmax + vmin == 0.0:
        raise AnalysisError("degenerate window (max + min = 0)")
    return min(1.0, max(0.0, (vmax - vmin) / (vmax + vmin)))


def ridge_count(values2d, threshold_frac: float) -> int:
    """Number of 8-connected components above threshold_frac * global max."""
    if not 0.0 < threshold_frac < 1.0:
        raise AnalysisError("threshold_frac must be in (0, 1)")
    v = np.asarray(values2d, dtype=np.float64)
    if v.ndim != 2 or v.size == 0 or not np.any(v > 0):
        raise AnalysisError("ridge_count needs a nonempty 2D field with mass")
    mask = v >= threshold_frac * v.max()
    _, count = ndimage.label(mask, structure=np.ones((3, 3), dtype=bool))
    return int(count)


def phase_shift(slice_a, slice_b, ds: float = 1.0) -> float:
    """Relative fringe phase between two slices sharing one grid.

    Phase of the cross-spectrum conj(A)*B at the common fringe frequency,
    in (-pi, pi]; positive means slice_b's pattern is advanced relative to
    slice_a.  Errors when either slice has no fringe or the two periods
    disagree by more than 2%.
    """
    a = np.asarray(slice_a, dtype=np.float64)
    b = np.asarray(slice_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise AnalysisError("phase_shift needs two 1D slices on one grid")
    pa = fringe_period(a, ds)
    pb = fringe_period(b, ds)
    if pa is None or pb is None:
        raise AnalysisError("phase_shift needs detectable fringes in both slices")
    if abs(pa - pb) > 0.02 * max(pa, pb):
        raise AnalysisError(
            f"fringe periods differ by more than 2% ({pa:.6g} vs {pb:.6g})"
        )
    win = np.hanning(a.size)
    fa = np.fft.rfft((a - a.mean()) * win)
    fb = np.fft.rfft((b - b.mean()) * win)
    spec = np.abs(fa) * np.abs(fb)
    k = 1 + int(np.argmax(spec[1:]))
    return float(np.angle(np.conj(fa[k]) * fb[k]))
