"""Batched adaptive Simpson integration.

One engine integrates many independent cells at once: all pending
subintervals across all cells are evaluated in a single callback per
refinement wave, which keeps the integrand vectorized (the five-path kernel
is fastest on large point batches).  Each subinterval is accepted when its
Richardson error estimate (S_fine - S_coarse)/15 is within its share of the
cell tolerance, the share halving on every split, so accepted error sums to
at most the requested tolerance per cell.
"""

from __future__ import annotations

import numpy as np


def integrate_batch(
    f,
    lo,
    hi,
    abs_tol: float,
    max_depth: int = 24,
    min_intervals=1,
    eval_chunk: int = 1 << 18,
):
    """Integrate ``f`` over [lo[i], hi[i]] for every cell i.

    f : callable(cells, x) -> values; ``cells`` is an int array naming the
        cell each abscissa belongs to, so the callback can look up per-cell
        context.  Must be vectorized over its arguments.
    lo, hi : per-cell bounds; cells with hi <= lo integrate to zero.
    min_intervals : scalar or per-cell array of initial panel counts
        (callers supply >= 8 panels per shortest oscillation period).
    eval_chunk : max abscissas per ``f`` call.  Nested integrals (where f
        itself runs integrate_batch per abscissa) pass a small chunk here so
        the inner worklists stay memory-bounded.

    Returns ``(values, errors, converged)``; ``converged[i]`` is False when
    cell i hit ``max_depth`` before meeting its tolerance (its best estimate
    is still returned).
    """
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)

    def call_f(cell_ids, xs):
        m = xs.shape[0]
        if m <= eval_chunk:
            return np.asarray(f(cell_ids, xs), dtype=np.float64)
        out = np.empty(m)
        for i in range(0, m, eval_chunk):
            out[i : i + eval_chunk] = f(
                cell_ids[i : i + eval_chunk], xs[i : i + eval_chunk]
            )
        return out
    n = lo.shape[0]
    values = np.zeros(n)
    errors = np.zeros(n)
    converged = np.ones(n, dtype=bool)

    panels = np.broadcast_to(np.asarray(min_intervals, dtype=np.int64), (n,))
    panels = np.maximum(panels, 1)
    live = hi > lo
    if not live.any():
        return values, errors, converged

    # Build the initial worklist: `panels[i]` equal subintervals per live cell.
    idx = np.nonzero(live)[0]
    counts = panels[idx]
    cells = np.repeat(idx, counts).astype(np.intp)
    widths = (hi[idx] - lo[idx]) / counts
    h = np.repeat(widths, counts)
    tol = np.repeat(abs_tol / counts, counts)
    # within-cell panel ranks: 0..k-1 for each cell in turn
    ends = np.cumsum(counts)
    ranks = np.arange(ends[-1]) - np.repeat(ends - counts, counts)
    a = np.repeat(lo[idx], counts) + ranks * h

    pts = np.concatenate([a, a + 0.5 * h, a + h])
    pcells = np.concatenate([cells, cells, cells])
    vals = call_f(pcells, pts)
    m = cells.shape[0]
    fa, fm, fb = vals[:m], vals[m:2 * m], vals[2 * m:]

    for depth in range(max_depth + 1):
        if cells.shape[0] == 0:
            break
        xm1 = a + 0.25 * h
        xm2 = a + 0.75 * h
        vals = call_f(np.concatenate([cells, cells]), np.concatenate([xm1, xm2]))
        m = cells.shape[0]
        fm1, fm2 = vals[:m], vals[m:]

        s_whole = (h / 6.0) * (fa + 4.0 * fm + fb)
        s_left = (h / 12.0) * (fa + 4.0 * fm1 + fm)
        s_right = (h / 12.0) * (fm + 4.0 * fm2 + fb)
        err = (s_left + s_right - s_whole) / 15.0

        done = np.abs(err) <= tol
        if depth == max_depth:
            exhausted = ~done
            if exhausted.any():
                np.logical_and.at(converged, cells[exhausted], False)
            done = np.ones_like(done)
        if done.any():
            idx = cells[done]
            np.add.at(values, idx, (s_left + s_right + err)[done])
            np.add.at(errors, idx, np.abs(err[done]))

        keep = ~done
        if not keep.any():
            break
        cells = np.concatenate([cells[keep], cells[keep]])
        half = 0.5 * h[keep]
        a = np.concatenate([a[keep], a[keep] + half])
        h = np.concatenate([half, half])
        tol = np.concatenate([0.5 * tol[keep], 0.5 * tol[keep]])
        fa = np.concatenate([fa[keep], fm[keep]])
        fb = np.concatenate([fm[keep], fb[keep]])
        fm = np.concatenate([fm1[keep], fm2[keep]])

    return values, errors, converged
