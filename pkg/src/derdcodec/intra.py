"""Intra prediction: Planar, DC, and 33 angular modes with two-tap interpolation.

Mode numbering: 0 = Planar, 1 = DC, 2..34 = angular (10 pure horizontal,
26 pure vertical). Unavailable reference samples are substituted with 128;
availability means inside the frame and already coded, tracked on a 4x4 luma
cell grid shared by encoder and decoder. No boundary smoothing or reference
filtering is applied, so predictions are the raw mode equations.
"""

from __future__ import annotations

import numpy as np
from numba import njit

PLANAR = 0
DC = 1
N_MODES = 35
HORIZONTAL = 10
VERTICAL = 26

# Class indices used by the energy model maps: DC, Planar, Angular.
CLS_DC = 0
CLS_PLANAR = 1
CLS_ANGULAR = 2

# Displacement per row/column in 1/32 sample units, modes 2..34.
PRED_ANGLES = np.array(
    [32, 26, 21, 17, 13, 9, 5, 2, 0, -2, -5, -9, -13, -17, -21, -26, -32,
     -26, -21, -17, -13, -9, -5, -2, 0, 2, 5, 9, 13, 17, 21, 26, 32],
    dtype=np.int64,
)
# 8192/|angle| rounded, negated: projection of the side reference for
# negative angles. Indexed by |angle|; zeros where unused.
_INV = np.zeros(33, dtype=np.int64)
for _a in (2, 5, 9, 13, 17, 21, 26, 32):
    _INV[_a] = -int(np.rint(8192.0 / _a))
INV_ANGLES = _INV
del _INV

PAD_VALUE = 128


@njit(cache=True)
def mode_class(mode):
    if mode == DC:
        return CLS_DC
    if mode == PLANAR:
        return CLS_PLANAR
    return CLS_ANGULAR


@njit(cache=True)
def build_refs(plane, coded, cell_shift, x, y, n, top_ref, left_ref):
    """Fill top_ref/left_ref (length 2n+1 each, [0] is the corner sample)."""
    h, w = plane.shape
    for i in range(2 * n + 1):
        px = x - 1 + i
        py = y - 1
        if 0 <= px < w and 0 <= py < h and coded[py >> cell_shift, px >> cell_shift]:
            top_ref[i] = plane[py, px]
        else:
            top_ref[i] = PAD_VALUE
    for j in range(2 * n + 1):
        px = x - 1
        py = y - 1 + j
        if 0 <= px < w and 0 <= py < h and coded[py >> cell_shift, px >> cell_shift]:
            left_ref[j] = plane[py, px]
        else:
            left_ref[j] = PAD_VALUE


@njit(cache=True)
def _log2n(n):
    r = 0
    t = n
    while t > 1:
        t >>= 1
        r += 1
    return r


@njit(cache=True)
def predict_block(top_ref, left_ref, n, mode, out):
    """Predict an n x n block into out (int64 2-D)."""
    shift = _log2n(n) + 1
    if mode == PLANAR:
        tr = top_ref[1 + n]
        bl = left_ref[1 + n]
        for yy in range(n):
            ly = left_ref[1 + yy]
            for xx in range(n):
                out[yy, xx] = (
                    (n - 1 - xx) * ly + (xx + 1) * tr
                    + (n - 1 - yy) * top_ref[1 + xx] + (yy + 1) * bl + n
                ) >> shift
        return
    if mode == DC:
        acc = n
        for i in range(1, n + 1):
            acc += top_ref[i] + left_ref[i]
        dc = acc >> shift
        for yy in range(n):
            for xx in range(n):
                out[yy, xx] = dc
        return

    angle = PRED_ANGLES[mode - 2]
    vertical = mode >= 18
    main = top_ref if vertical else left_ref
    side = left_ref if vertical else top_ref
    # Main reference line with offset n: mref[n + k] for k in [-n, 2n].
    mref = np.empty(3 * n + 2, dtype=np.int64)
    for k in range(0, 2 * n + 1):
        mref[n + k] = main[k]
    mref[3 * n + 1] = main[2 * n]
    if angle < 0:
        inv = INV_ANGLES[-angle]
        kmin = (n * angle) >> 5
        for k in range(-1, kmin - 1, -1):
            idx = (k * inv + 128) >> 8
            if idx > 2 * n:
                idx = 2 * n
            mref[n + k] = side[idx]
    for q in range(n):
        delta = (q + 1) * angle
        idx = delta >> 5
        fact = delta & 31
        for p in range(n):
            r0 = mref[n + p + idx + 1]
            if fact == 0:
                val = r0
            else:
                r1 = mref[n + p + idx + 2]
                val = ((32 - fact) * r0 + fact * r1 + 16) >> 5
            if vertical:
                out[q, p] = val
            else:
                out[p, q] = val


@njit(cache=True)
def mpm_list(modemap, cell_y, cell_x):
    """3-entry most-probable-mode list from the left and above neighbor modes."""
    left = np.int64(DC)
    above = np.int64(DC)
    if cell_x > 0 and modemap[cell_y, cell_x - 1] >= 0:
        left = np.int64(modemap[cell_y, cell_x - 1])
    if cell_y > 0 and modemap[cell_y - 1, cell_x] >= 0:
        above = np.int64(modemap[cell_y - 1, cell_x])
    if left == above:
        if left < 2:
            return np.int64(PLANAR), np.int64(DC), np.int64(VERTICAL)
        return left, 2 + ((left + 29) % 32), 2 + ((left - 2 + 1) % 32)
    if left != PLANAR and above != PLANAR:
        m2 = np.int64(PLANAR)
    elif left != DC and above != DC:
        m2 = np.int64(DC)
    else:
        m2 = np.int64(VERTICAL)
    return left, above, m2
