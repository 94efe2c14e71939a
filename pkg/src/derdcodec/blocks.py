"""Block-level syntax shared by encoder and decoder.

Context set (adaptive binary contexts, see entropy.py):
  split_cu_flag x2 (by depth), part_mode, prev_intra_pred_flag,
  cbf luma/chroma, transform_skip luma/chroma, coded-subblock luma/chroma,
  sig_coeff luma/chroma x3 frequency classes, greater1 luma/chroma.
mpm_idx, remainder mode bits, coefficient magnitudes (Exp-Golomb order 0) and
signs are bypass-coded.

Coefficients scan in raster order: 4x4 subblocks raster within the block, and
positions raster within each subblock. Blocks of size >= 8 code one
coded-subblock flag per 4x4 group; 4x4 blocks have a single implicit group.

Each syntax routine also accumulates the feature-count deltas the decoder side
would observe, in the exact same order on both sides so that the float-valued
sum of log2 magnitudes matches bit for bit.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .energy_model import (
    FEAT_COEFF, FEAT_CSBF, FEAT_G1, FEAT_NOMPM, FEAT_TSF, FEAT_VAL,
)
from .entropy import (
    ST_BITS, dec_bin, dec_bypass, dec_eg0, enc_bin, enc_bypass, enc_eg0,
)
from .transform import inv_dct

CTX_SPLIT = 0        # +depth (0: 32->16, 1: 16->8)
CTX_PART = 2
CTX_MPM = 3
CTX_CBF_LUMA = 4
CTX_CBF_CHROMA = 5
CTX_TSF_LUMA = 6
CTX_TSF_CHROMA = 7
CTX_CSBF = 8         # +1 for chroma
CTX_SIG = 10         # +3*chroma +frequency class (DC, low, high)
CTX_G1 = 16          # +1 for chroma
NCTX = 18


@njit(cache=True, inline="always")
def _sig_ctx(is_chroma, ty, tx):
    if ty == 0 and tx == 0:
        cls = 0
    elif ty + tx <= 2:
        cls = 1
    else:
        cls = 2
    return CTX_SIG + 3 * is_chroma + cls


@njit(cache=True)
def _enc_coeff_group(state, buf, ctx, levels, by, bx, is_chroma, counts,
                     bits_limit):
    for i in range(4):
        if state[ST_BITS] > bits_limit:
            return 1
        for j in range(4):
            ty = by + i
            tx = bx + j
            lvl = levels[ty, tx]
            sig = 1 if lvl != 0 else 0
            enc_bin(state, buf, ctx, _sig_ctx(is_chroma, ty, tx), sig)
            if sig:
                al = lvl if lvl > 0 else -lvl
                g1 = 1 if al > 1 else 0
                enc_bin(state, buf, ctx, CTX_G1 + is_chroma, g1)
                if g1:
                    enc_eg0(state, buf, al - 2)
                enc_bypass(state, buf, 1 if lvl < 0 else 0)
                counts[FEAT_COEFF] += 1.0
                counts[FEAT_G1] += g1
                counts[FEAT_VAL] += np.log2(np.float64(al))
    return 0


@njit(cache=True)
def _dec_coeff_group(state, buf, ctx, levels, by, bx, is_chroma, counts):
    for i in range(4):
        for j in range(4):
            ty = by + i
            tx = bx + j
            sig = dec_bin(state, buf, ctx, _sig_ctx(is_chroma, ty, tx))
            if sig:
                g1 = dec_bin(state, buf, ctx, CTX_G1 + is_chroma)
                al = 1
                if g1:
                    al = dec_eg0(state, buf) + 2
                neg = dec_bypass(state, buf)
                levels[ty, tx] = -al if neg else al
                counts[FEAT_COEFF] += 1.0
                counts[FEAT_G1] += g1
                counts[FEAT_VAL] += np.log2(np.float64(al))
            else:
                levels[ty, tx] = 0


@njit(cache=True)
def enc_coeff_block(state, buf, ctx, levels, n, is_chroma, counts, bits_limit):
    """Residual syntax for one TB with cbf=1 (csbf per 4x4 group when n >= 8).

    Stops and returns 1 once the absolute bit counter passes bits_limit; the
    caller is probing a candidate that already lost and will discard the
    engine state. Returns 0 when fully coded.
    """
    if n == 4:
        return _enc_coeff_group(state, buf, ctx, levels, 0, 0, is_chroma,
                                counts, bits_limit)
    for by in range(0, n, 4):
        for bx in range(0, n, 4):
            if state[ST_BITS] > bits_limit:
                return 1
            csbf = 0
            for i in range(4):
                for j in range(4):
                    if levels[by + i, bx + j] != 0:
                        csbf = 1
            enc_bin(state, buf, ctx, CTX_CSBF + is_chroma, csbf)
            counts[FEAT_CSBF] += 1.0
            if csbf:
                if _enc_coeff_group(state, buf, ctx, levels, by, bx, is_chroma,
                                    counts, bits_limit):
                    return 1
    return 0


@njit(cache=True)
def dec_coeff_block(state, buf, ctx, levels, n, is_chroma, counts):
    if n == 4:
        _dec_coeff_group(state, buf, ctx, levels, 0, 0, is_chroma, counts)
        return
    for by in range(0, n, 4):
        for bx in range(0, n, 4):
            csbf = dec_bin(state, buf, ctx, CTX_CSBF + is_chroma)
            counts[FEAT_CSBF] += 1.0
            if csbf:
                _dec_coeff_group(state, buf, ctx, levels, by, bx, is_chroma, counts)
            else:
                for i in range(4):
                    for j in range(4):
                        levels[by + i, bx + j] = 0


@njit(cache=True)
def count_coeff_block(levels, n, counts):
    """Feature counts of enc_coeff_block without running the entropy coder.

    Must mirror the syntax routines' accumulation order exactly (the sum of
    log2 magnitudes is a float).
    """
    if n == 4:
        for i in range(4):
            for j in range(4):
                lvl = levels[i, j]
                if lvl != 0:
                    al = lvl if lvl > 0 else -lvl
                    counts[FEAT_COEFF] += 1.0
                    if al > 1:
                        counts[FEAT_G1] += 1.0
                    counts[FEAT_VAL] += np.log2(np.float64(al))
        return
    for by in range(0, n, 4):
        for bx in range(0, n, 4):
            counts[FEAT_CSBF] += 1.0
            for i in range(4):
                for j in range(4):
                    lvl = levels[by + i, bx + j]
                    if lvl != 0:
                        al = lvl if lvl > 0 else -lvl
                        counts[FEAT_COEFF] += 1.0
                        if al > 1:
                            counts[FEAT_G1] += 1.0
                        counts[FEAT_VAL] += np.log2(np.float64(al))


@njit(cache=True)
def enc_mode_signal(state, buf, ctx, mode, mpm0, mpm1, mpm2, counts):
    """Luma mode: MPM flag + index, or 5 fixed bits over the 32 non-MPM modes."""
    if mode == mpm0 or mode == mpm1 or mode == mpm2:
        enc_bin(state, buf, ctx, CTX_MPM, 1)
        if mode == mpm0:
            enc_bypass(state, buf, 0)
        else:
            enc_bypass(state, buf, 1)
            enc_bypass(state, buf, 0 if mode == mpm1 else 1)
    else:
        enc_bin(state, buf, ctx, CTX_MPM, 0)
        counts[FEAT_NOMPM] += 1.0
        rem = mode
        # Subtract the MPMs above `mode`, largest first.
        hi = mpm0 if mpm0 > mpm1 else mpm1
        if mpm2 > hi:
            hi = mpm2
        lo = mpm0 if mpm0 < mpm1 else mpm1
        if mpm2 < lo:
            lo = mpm2
        mid = mpm0 + mpm1 + mpm2 - hi - lo
        if rem > hi:
            rem -= 1
        if rem > mid:
            rem -= 1
        if rem > lo:
            rem -= 1
        for i in range(4, -1, -1):
            enc_bypass(state, buf, (rem >> i) & 1)


@njit(cache=True)
def dec_mode_signal(state, buf, ctx, mpm0, mpm1, mpm2, counts):
    if dec_bin(state, buf, ctx, CTX_MPM):
        if dec_bypass(state, buf) == 0:
            return mpm0
        return mpm2 if dec_bypass(state, buf) else mpm1
    counts[FEAT_NOMPM] += 1.0
    rem = np.int64(0)
    for _ in range(5):
        rem = (rem << 1) | dec_bypass(state, buf)
    lo = mpm0 if mpm0 < mpm1 else mpm1
    if mpm2 < lo:
        lo = mpm2
    hi = mpm0 if mpm0 > mpm1 else mpm1
    if mpm2 > hi:
        hi = mpm2
    mid = mpm0 + mpm1 + mpm2 - hi - lo
    if rem >= lo:
        rem += 1
    if rem >= mid:
        rem += 1
    if rem >= hi:
        rem += 1
    return rem


@njit(cache=True)
def residual_from_levels(levels, step, tsf, out, t4, t8, t16, t32):
    """Reconstructed residual from quantized levels (shared encoder/decoder)."""
    n = levels.shape[0]
    if tsf:
        for i in range(n):
            for j in range(n):
                out[i, j] = np.int64(np.rint(levels[i, j] * step))
    else:
        deq = np.empty((n, n), dtype=np.float64)
        for i in range(n):
            for j in range(n):
                deq[i, j] = levels[i, j] * step
        res = np.empty((n, n), dtype=np.float64)
        inv_dct(deq, res, t4, t8, t16, t32)
        for i in range(n):
            for j in range(n):
                out[i, j] = np.int64(res[i, j])


@njit(cache=True)
def write_recon(plane, x, y, n, pred, res):
    """Clip pred+res to [0,255] and store into the reconstruction plane."""
    for i in range(n):
        for j in range(n):
            v = pred[i, j] + res[i, j]
            if v < 0:
                v = 0
            elif v > 255:
                v = 255
            plane[y + i, x + j] = np.uint8(v)
