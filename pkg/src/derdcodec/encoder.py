"""Intra encoder: full-RD mode search over a 32->4 quadtree.

Every leaf decision is an exact argmin of J = D + lambda_r*R + lambda_e*E over
all 35 intra modes x residual options (DCT-coded, transform-skip on 4x4,
forced-zero residual), with R measured by running the entropy coder from a
cloned state and D the true SSE of the reconstruction. Split decisions compare
the summed J of greedily coded children against the leaf J, including the
split/partition flag bits. Ties resolve to the earliest candidate in
(mode index, no-skip before skip before forced-zero, no-split before split)
order.

The frame is decided on a count-only entropy engine; chosen decisions are then
re-emitted into the byte-writing engine, whose context trajectory is identical
because the syntax is identical. Reconstruction, mode and coded-cell maps are
shared between the two passes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .blocks import (
    CTX_CBF_CHROMA, CTX_CBF_LUMA, CTX_PART, CTX_SPLIT, CTX_TSF_CHROMA,
    CTX_TSF_LUMA, NCTX, count_coeff_block, enc_coeff_block, enc_mode_signal,
    residual_from_levels, write_recon,
)
from .energy_model import (
    FEAT_COMP0, FEAT_MODE0, FEAT_NOMPM, FEAT_SLICE, FEAT_TSF, NFEAT,
)
from .entropy import ST_BITS, ST_FLAGS, enc_bin, enc_flush, enc_init, new_contexts, new_state
from .errors import CodecError
from .frames import Frame
from .intra import build_refs, mode_class, mpm_list, predict_block
from .transform import (
    _T4, _T8, _T16, _T32, INTRA_DEADZONE, fwd_dct, qp_step,
)

CTU_SIZE = 32


@njit(cache=True)
def _size_idx(n):
    if n == 4:
        return 0
    if n == 8:
        return 1
    if n == 16:
        return 2
    return 3


@njit(cache=True)
def _quantize_int(coeff, step, deadzone, out):
    n = coeff.shape[0]
    nz = 0
    for i in range(n):
        for j in range(n):
            c = coeff[i, j]
            q = np.int64(np.floor(abs(c) / step + deadzone))
            if c < 0:
                q = -q
            out[i, j] = q
            if q != 0:
                nz = 1
    return nz


_NO_BITS_LIMIT = np.int64(1) << 60


@njit(cache=True)
def enc_luma_pb_payload(st, buf, ctx, mode, mpm0, mpm1, mpm2, cbf, tsf,
                        levels, n, cnt, bits_limit):
    """Luma PB syntax + the feature-count delta the decoder will observe.

    Returns 1 if aborted because the bit counter passed bits_limit (candidate
    probing only; committed blocks pass an effectively infinite limit).
    """
    cnt[FEAT_MODE0 + mode_class(mode) * 4 + _size_idx(n)] += 1.0
    enc_mode_signal(st, buf, ctx, mode, mpm0, mpm1, mpm2, cnt)
    enc_bin(st, buf, ctx, CTX_CBF_LUMA, cbf)
    if cbf:
        if n == 4:
            enc_bin(st, buf, ctx, CTX_TSF_LUMA, tsf)
            cnt[FEAT_TSF] += tsf
        if enc_coeff_block(st, buf, ctx, levels, n, 0, cnt, bits_limit):
            return 1
        if tsf == 0:
            cnt[FEAT_COMP0 + _size_idx(n)] += 1.0
    return 0


@njit(cache=True)
def enc_chroma_tb_payload(st, buf, ctx, comp_idx, cls, cbf, tsf, levels, n,
                          cnt, bits_limit):
    """Chroma TB syntax (mode is derived, nothing to signal) + count delta."""
    cnt[FEAT_MODE0 + cls * 4 + _size_idx(n)] += 1.0
    enc_bin(st, buf, ctx, CTX_CBF_CHROMA, cbf)
    if cbf:
        if n == 4:
            enc_bin(st, buf, ctx, CTX_TSF_CHROMA, tsf)
            cnt[FEAT_TSF] += tsf
        if enc_coeff_block(st, buf, ctx, levels, n, 1, cnt, bits_limit):
            return 1
        if tsf == 0:
            cnt[FEAT_COMP0 + comp_idx * 4 + _size_idx(n)] += 1.0
    return 0


@njit(cache=True)
def count_luma_pb_payload(mode, in_mpm, cbf, tsf, levels, n, cnt):
    """enc_luma_pb_payload's count delta without running the entropy coder.

    Used when lambda_r is zero: J carries no rate term, so per-candidate
    syntax simulation would only burn time. Accumulation order matches the
    syntax routine exactly.
    """
    cnt[FEAT_MODE0 + mode_class(mode) * 4 + _size_idx(n)] += 1.0
    if in_mpm == 0:
        cnt[FEAT_NOMPM] += 1.0
    if cbf:
        if n == 4:
            cnt[FEAT_TSF] += tsf
        count_coeff_block(levels, n, cnt)
        if tsf == 0:
            cnt[FEAT_COMP0 + _size_idx(n)] += 1.0


@njit(cache=True)
def count_chroma_tb_payload(comp_idx, cls, cbf, tsf, levels, n, cnt):
    cnt[FEAT_MODE0 + cls * 4 + _size_idx(n)] += 1.0
    if cbf:
        if n == 4:
            cnt[FEAT_TSF] += tsf
        count_coeff_block(levels, n, cnt)
        if tsf == 0:
            cnt[FEAT_COMP0 + comp_idx * 4 + _size_idx(n)] += 1.0


@njit(cache=True)
def _sse_recon(src, x, y, n, pred, res):
    d = np.int64(0)
    for i in range(n):
        for j in range(n):
            v = pred[i, j] + res[i, j]
            if v < 0:
                v = 0
            elif v > 255:
                v = 255
            diff = src[y + i, x + j] - v
            d += diff * diff
    return d


@njit(cache=True)
def _dot_counts(wvec, cnt):
    e = 0.0
    for k in range(NFEAT):
        e += wvec[k] * cnt[k]
    return e


@njit(cache=True)
def search_luma_pb(src, recon, coded, modemap, x, y, n, qp, lambda_r, lambda_e,
                   wvec, ctx, st, buf, best_levels, best_cnt,
                   t4, t8, t16, t32):
    """Argmin over modes x residual options for one luma PB.

    Advances the engine (ctx/st) along the winning candidate, writes the
    winner's reconstruction and updates the mode/coded maps. Returns
    (mode, tsf, cbf, bits, d, energy, j, mpm0, mpm1, mpm2).
    """
    step = qp_step_nb(qp)
    cy = y >> 2
    cx = x >> 2
    mpm0, mpm1, mpm2 = mpm_list(modemap, cy, cx)
    top_ref = np.empty(2 * n + 1, dtype=np.int64)
    left_ref = np.empty(2 * n + 1, dtype=np.int64)
    build_refs(recon, coded, 2, x, y, n, top_ref, left_ref)

    ctx0 = ctx.copy()
    st0 = st.copy()
    pred = np.empty((n, n), dtype=np.int64)
    resid = np.empty((n, n), dtype=np.float64)
    coeff = np.empty((n, n), dtype=np.float64)
    lev_dct = np.empty((n, n), dtype=np.int64)
    lev_ts = np.empty((n, n), dtype=np.int64)
    zeros = np.zeros((n, n), dtype=np.int64)
    res_rec = np.zeros((n, n), dtype=np.int64)
    cnt = np.empty(NFEAT, dtype=np.float64)
    scnt = np.empty(NFEAT, dtype=np.float64)

    best_j = np.inf
    best_mode = np.int64(0)
    best_tsf = np.int64(0)
    best_cbf = np.int64(0)
    best_bits = np.int64(0)
    best_d = np.int64(0)
    best_e = 0.0
    measure_rate = lambda_r != 0.0

    for mode in range(35):
        predict_block(top_ref, left_ref, n, mode, pred)
        for i in range(n):
            for j in range(n):
                resid[i, j] = np.float64(src[y + i, x + j] - pred[i, j])
        fwd_dct(resid, coeff, t4, t8, t16, t32)
        nz_dct = _quantize_int(coeff, step, INTRA_DEADZONE, lev_dct)
        nz_ts = 0
        if n == 4:
            nz_ts = _quantize_int(resid, step, INTRA_DEADZONE, lev_ts)
        in_mpm = 1 if (mode == mpm0 or mode == mpm1 or mode == mpm2) else 0

        # Variant order fixes tie-breaking: coded, transform-skip, forced zero.
        for variant in range(3):
            if variant == 0:
                cbf = nz_dct
                tsf = np.int64(0)
                levels = lev_dct
            elif variant == 1:
                if n != 4 or nz_ts == 0:
                    continue
                cbf = np.int64(1)
                tsf = np.int64(1)
                levels = lev_ts
            else:
                if nz_dct == 0:
                    continue  # already evaluated as the zero candidate
                cbf = np.int64(0)
                tsf = np.int64(0)
                levels = zeros

            for k in range(NFEAT):
                cnt[k] = 0.0
            count_luma_pb_payload(mode, in_mpm, cbf, tsf, levels, n, cnt)
            energy = _dot_counts(wvec, cnt)
            if cbf:
                residual_from_levels(levels, step, tsf, res_rec, t4, t8, t16, t32)
            else:
                for i in range(n):
                    for j in range(n):
                        res_rec[i, j] = 0
            d = _sse_recon(src, x, y, n, pred, res_rec)
            if d + lambda_e * energy > best_j:
                continue  # cannot win even at zero rate
            if measure_rate:
                ctx[:] = ctx0
                st[:] = st0
                bits_a = st[ST_BITS]
                budget = (best_j - d - lambda_e * energy) / lambda_r
                limit = bits_a + (np.int64(budget) + 2 if budget < 1e15
                                  else _NO_BITS_LIMIT)
                for k in range(NFEAT):
                    scnt[k] = 0.0  # syntax recomputes counts; discarded
                if enc_luma_pb_payload(st, buf, ctx, mode, mpm0, mpm1, mpm2,
                                       cbf, tsf, levels, n, scnt, limit):
                    continue  # rate already above budget, candidate lost
                bits = st[ST_BITS] - bits_a
            else:
                bits = np.int64(0)
            j_cost = d + lambda_r * bits + lambda_e * energy
            if j_cost < best_j:
                best_j = j_cost
                best_mode = np.int64(mode)
                best_tsf = tsf
                best_cbf = cbf
                best_bits = bits
                best_d = d
                best_e = energy
                for i in range(n):
                    for j in range(n):
                        best_levels[i, j] = levels[i, j]
                for k in range(NFEAT):
                    best_cnt[k] = cnt[k]

    # Re-walk the winner to advance the engine and commit the reconstruction.
    ctx[:] = ctx0
    st[:] = st0
    for k in range(NFEAT):
        cnt[k] = 0.0
    bits_a = st[ST_BITS]
    enc_luma_pb_payload(st, buf, ctx, best_mode, mpm0, mpm1, mpm2,
                        best_cbf, best_tsf, best_levels, n, cnt, _NO_BITS_LIMIT)
    if not measure_rate:
        best_bits = st[ST_BITS] - bits_a
    predict_block(top_ref, left_ref, n, best_mode, pred)
    if best_cbf:
        residual_from_levels(best_levels, step, best_tsf, res_rec, t4, t8, t16, t32)
    else:
        for i in range(n):
            for j in range(n):
                res_rec[i, j] = 0
    write_recon(recon, x, y, n, pred, res_rec)
    nc = n >> 2
    for i in range(nc):
        for j in range(nc):
            coded[cy + i, cx + j] = 1
            modemap[cy + i, cx + j] = np.int8(best_mode)
    return best_mode, best_tsf, best_cbf, best_bits, best_d, best_e, best_j, mpm0, mpm1, mpm2


@njit(cache=True)
def search_chroma_tb(src, recon, coded, x, y, n, comp_idx, mode, qp,
                     lambda_r, lambda_e, wvec, ctx, st, buf,
                     best_levels, best_cnt, t4, t8, t16, t32):
    """Residual decision for one chroma TB (mode derived from luma)."""
    step = qp_step_nb(qp)
    cls = mode_class(mode)
    top_ref = np.empty(2 * n + 1, dtype=np.int64)
    left_ref = np.empty(2 * n + 1, dtype=np.int64)
    build_refs(recon, coded, 1, x, y, n, top_ref, left_ref)
    pred = np.empty((n, n), dtype=np.int64)
    predict_block(top_ref, left_ref, n, mode, pred)

    resid = np.empty((n, n), dtype=np.float64)
    for i in range(n):
        for j in range(n):
            resid[i, j] = np.float64(src[y + i, x + j] - pred[i, j])
    coeff = np.empty((n, n), dtype=np.float64)
    fwd_dct(resid, coeff, t4, t8, t16, t32)
    lev_dct = np.empty((n, n), dtype=np.int64)
    lev_ts = np.empty((n, n), dtype=np.int64)
    nz_dct = _quantize_int(coeff, step, INTRA_DEADZONE, lev_dct)
    nz_ts = 0
    if n == 4:
        nz_ts = _quantize_int(resid, step, INTRA_DEADZONE, lev_ts)
    zeros = np.zeros((n, n), dtype=np.int64)
    res_rec = np.zeros((n, n), dtype=np.int64)
    cnt = np.empty(NFEAT, dtype=np.float64)
    scnt = np.empty(NFEAT, dtype=np.float64)
    ctx0 = ctx.copy()
    st0 = st.copy()

    best_j = np.inf
    best_tsf = np.int64(0)
    best_cbf = np.int64(0)
    best_bits = np.int64(0)
    best_d = np.int64(0)
    best_e = 0.0
    measure_rate = lambda_r != 0.0

    for variant in range(3):
        if variant == 0:
            cbf = nz_dct
            tsf = np.int64(0)
            levels = lev_dct
        elif variant == 1:
            if n != 4 or nz_ts == 0:
                continue
            cbf = np.int64(1)
            tsf = np.int64(1)
            levels = lev_ts
        else:
            if nz_dct == 0:
                continue
            cbf = np.int64(0)
            tsf = np.int64(0)
            levels = zeros
        for k in range(NFEAT):
            cnt[k] = 0.0
        count_chroma_tb_payload(comp_idx, cls, cbf, tsf, levels, n, cnt)
        energy = _dot_counts(wvec, cnt)
        if cbf:
            residual_from_levels(levels, step, tsf, res_rec, t4, t8, t16, t32)
        else:
            for i in range(n):
                for j in range(n):
                    res_rec[i, j] = 0
        d = _sse_recon(src, x, y, n, pred, res_rec)
        if d + lambda_e * energy > best_j:
            continue
        if measure_rate:
            ctx[:] = ctx0
            st[:] = st0
            bits_a = st[ST_BITS]
            budget = (best_j - d - lambda_e * energy) / lambda_r
            limit = bits_a + (np.int64(budget) + 2 if budget < 1e15
                              else _NO_BITS_LIMIT)
            for k in range(NFEAT):
                scnt[k] = 0.0
            if enc_chroma_tb_payload(st, buf, ctx, comp_idx, cls, cbf, tsf,
                                     levels, n, scnt, limit):
                continue
            bits = st[ST_BITS] - bits_a
        else:
            bits = np.int64(0)
        j_cost = d + lambda_r * bits + lambda_e * energy
        if j_cost < best_j:
            best_j = j_cost
            best_tsf = tsf
            best_cbf = cbf
            best_bits = bits
            best_d = d
            best_e = energy
            for i in range(n):
                for j in range(n):
                    best_levels[i, j] = levels[i, j]
            for k in range(NFEAT):
                best_cnt[k] = cnt[k]

    ctx[:] = ctx0
    st[:] = st0
    for k in range(NFEAT):
        cnt[k] = 0.0
    bits_a = st[ST_BITS]
    enc_chroma_tb_payload(st, buf, ctx, comp_idx, cls, best_cbf, best_tsf,
                          best_levels, n, cnt, _NO_BITS_LIMIT)
    if not measure_rate:
        best_bits = st[ST_BITS] - bits_a
    if best_cbf:
        residual_from_levels(best_levels, step, best_tsf, res_rec, t4, t8, t16, t32)
    else:
        for i in range(n):
            for j in range(n):
                res_rec[i, j] = 0
    write_recon(recon, x, y, n, pred, res_rec)
    return best_tsf, best_cbf, best_bits, best_d, best_e, best_j


@njit(cache=True)
def qp_step_nb(qp):
    return 2.0 ** ((qp - 4) / 6.0)


@dataclass
class LumaPB:
    x: int
    y: int
    n: int
    mode: int
    tsf: int
    cbf: int
    mpm: tuple
    levels: np.ndarray
    bits: int
    d: int
    energy: float
    j: float


@dataclass
class ChromaTB:
    comp_idx: int
    x: int
    y: int
    n: int
    mode: int
    tsf: int
    cbf: int
    levels: np.ndarray
    bits: int
    d: int
    energy: float
    j: float


@dataclass
class CUNode:
    x: int
    y: int
    size: int
    depth: int
    split: bool
    flag_coded: bool
    part_nxn: bool = False
    pbs: list = field(default_factory=list)
    chroma: list = field(default_factory=list)
    children: list = field(default_factory=list)
    j: float = 0.0


class FrameEncoder:
    """Encodes one frame; owns reconstruction state and both entropy engines."""

    def __init__(self, frame: Frame, qp: int, lambda_r: float, lambda_e: float,
                 weight_vec: np.ndarray):
        if not 0 <= qp <= 51:
            raise CodecError(f"QP {qp} out of range [0, 51]")
        self.w = frame.width
        self.h = frame.height
        self.qp = qp
        self.lambda_r = float(lambda_r)
        self.lambda_e = float(lambda_e)
        self.wvec = np.asarray(weight_vec, dtype=np.float64)
        if self.wvec.shape != (NFEAT,):
            raise CodecError("weight vector has wrong shape")

        self.src_y = frame.y.astype(np.int64)
        self.src_u = frame.u.astype(np.int64)
        self.src_v = frame.v.astype(np.int64)
        self.rec_y = np.zeros_like(frame.y)
        self.rec_u = np.zeros_like(frame.u)
        self.rec_v = np.zeros_like(frame.v)
        self.coded = np.zeros((self.h // 4, self.w // 4), dtype=np.uint8)
        self.modemap = np.full((self.h // 4, self.w // 4), -1, dtype=np.int8)

        # Count-only engine for mode decisions, byte-writing engine for output.
        self.t_ctx = new_contexts(NCTX)
        self.t_st = new_state()
        self.t_buf = np.zeros(1, dtype=np.uint8)
        enc_init(self.t_st, 0)
        self.r_ctx = new_contexts(NCTX)
        self.r_st = new_state()
        self.r_buf = np.zeros(self.w * self.h * 6 + 4096, dtype=np.uint8)
        enc_init(self.r_st, 1)

        self.counts = np.zeros(NFEAT, dtype=np.float64)
        self.counts[FEAT_SLICE] = 1.0
        self.log_rows = []

    # -- trial-state snapshots -------------------------------------------------

    def _snap(self, x, y, size):
        cs = size // 2
        c = 4
        return (
            self.rec_y[y:y + size, x:x + size].copy(),
            self.rec_u[y // 2:y // 2 + cs, x // 2:x // 2 + cs].copy(),
            self.rec_v[y // 2:y // 2 + cs, x // 2:x // 2 + cs].copy(),
            self.coded[y // c:(y + size) // c, x // c:(x + size) // c].copy(),
            self.modemap[y // c:(y + size) // c, x // c:(x + size) // c].copy(),
            self.t_ctx.copy(),
            self.t_st.copy(),
        )

    def _restore(self, x, y, size, snap):
        ry, ru, rv, cd, mm, ctx, st = snap
        cs = size // 2
        c = 4
        self.rec_y[y:y + size, x:x + size] = ry
        self.rec_u[y // 2:y // 2 + cs, x // 2:x // 2 + cs] = ru
        self.rec_v[y // 2:y // 2 + cs, x // 2:x // 2 + cs] = rv
        self.coded[y // c:(y + size) // c, x // c:(x + size) // c] = cd
        self.modemap[y // c:(y + size) // c, x // c:(x + size) // c] = mm
        self.t_ctx[:] = ctx
        self.t_st[:] = st

    # -- decision pass ---------------------------------------------------------

    def _leaf(self, x, y, size, depth, flag_coded, part_nxn):
        node = CUNode(x, y, size, depth, split=False, flag_coded=flag_coded,
                      part_nxn=part_nxn)
        bits0 = self.t_st[ST_BITS]
        if flag_coded:
            enc_bin(self.t_st, self.t_buf, self.t_ctx, CTX_SPLIT + depth, 0)
        if size == 8:
            enc_bin(self.t_st, self.t_buf, self.t_ctx, CTX_PART,
                    0 if part_nxn else 1)
        d_total = 0
        e_total = 0.0
        if part_nxn:
            pb_geo = [(x, y, 4), (x + 4, y, 4), (x, y + 4, 4), (x + 4, y + 4, 4)]
        else:
            pb_geo = [(x, y, size)]
        for px, py, pn in pb_geo:
            levels = np.empty((pn, pn), dtype=np.int64)
            cnt = np.empty(NFEAT, dtype=np.float64)
            (mode, tsf, cbf, bits, d, energy, j, m0, m1, m2) = search_luma_pb(
                self.src_y, self.rec_y, self.coded, self.modemap, px, py, pn,
                self.qp, self.lambda_r, self.lambda_e, self.wvec,
                self.t_ctx, self.t_st, self.t_buf, levels, cnt,
                _T4, _T8, _T16, _T32)
            node.pbs.append(LumaPB(px, py, pn, int(mode), int(tsf), int(cbf),
                                   (int(m0), int(m1), int(m2)), levels,
                                   int(bits), int(d), float(energy), float(j)))
            d_total += int(d)
            e_total += float(energy)
        # Chroma at CU level, derived from the first PB's mode.
        derived = node.pbs[0].mode
        cn = size // 2 if size > 8 else 4
        cx, cy = x // 2, y // 2
        for comp_idx, (splane, rplane) in ((1, (self.src_u, self.rec_u)),
                                           (2, (self.src_v, self.rec_v))):
            levels = np.empty((cn, cn), dtype=np.int64)
            cnt = np.empty(NFEAT, dtype=np.float64)
            (tsf, cbf, bits, d, energy, j) = search_chroma_tb(
                splane, rplane, self.coded, cx, cy, cn, comp_idx, derived,
                self.qp, self.lambda_r, self.lambda_e, self.wvec,
                self.t_ctx, self.t_st, self.t_buf, levels, cnt,
                _T4, _T8, _T16, _T32)
            node.chroma.append(ChromaTB(comp_idx, cx, cy, cn, derived, int(tsf),
                                        int(cbf), levels, int(bits), int(d),
                                        float(energy), float(j)))
            d_total += int(d)
            e_total += float(energy)
        bits_cu = int(self.t_st[ST_BITS] - bits0)
        node.j = d_total + self.lambda_r * bits_cu + self.lambda_e * e_total
        return node

    def _split(self, x, y, size, depth, flag_coded):
        node = CUNode(x, y, size, depth, split=True, flag_coded=flag_coded)
        bits0 = self.t_st[ST_BITS]
        if flag_coded:
            enc_bin(self.t_st, self.t_buf, self.t_ctx, CTX_SPLIT + depth, 1)
        half = size // 2
        j = self.lambda_r * float(self.t_st[ST_BITS] - bits0)
        for cy, cx in ((y, x), (y, x + half), (y + half, x), (y + half, x + half)):
            child = self._decide_cu(cx, cy, half, depth + 1)
            if child is not None:
                node.children.append(child)
                j += child.j
        node.j = j
        return node

    def _decide_cu(self, x, y, size, depth):
        if x >= self.w or y >= self.h:
            return None
        fits = (x + size <= self.w) and (y + size <= self.h)
        if size == 8:
            # Partition choice plays the role of the last split level.
            pre = self._snap(x, y, size)
            n0 = self._leaf(x, y, size, depth, flag_coded=False, part_nxn=False)
            post0 = self._snap(x, y, size)
            self._restore(x, y, size, pre)
            n1 = self._leaf(x, y, size, depth, flag_coded=False, part_nxn=True)
            if n0.j <= n1.j:
                self._restore(x, y, size, post0)
                return n0
            return n1
        if not fits:
            return self._split(x, y, size, depth, flag_coded=False)
        pre = self._snap(x, y, size)
        leaf = self._leaf(x, y, size, depth, flag_coded=True, part_nxn=False)
        post = self._snap(x, y, size)
        self._restore(x, y, size, pre)
        split = self._split(x, y, size, depth, flag_coded=True)
        if leaf.j <= split.j:
            self._restore(x, y, size, post)
            return leaf
        return split

    # -- commit pass -----------------------------------------------------------

    def _apply(self, node):
        if node.flag_coded:
            enc_bin(self.r_st, self.r_buf, self.r_ctx, CTX_SPLIT + node.depth,
                    1 if node.split else 0)
        if node.split:
            for child in node.children:
                self._apply(child)
            return
        if node.size == 8:
            enc_bin(self.r_st, self.r_buf, self.r_ctx, CTX_PART,
                    0 if node.part_nxn else 1)
        for pb in node.pbs:
            cnt = np.zeros(NFEAT, dtype=np.float64)
            enc_luma_pb_payload(self.r_st, self.r_buf, self.r_ctx, pb.mode,
                                pb.mpm[0], pb.mpm[1], pb.mpm[2], pb.cbf, pb.tsf,
                                pb.levels, pb.n, cnt, _NO_BITS_LIMIT)
            self.counts += cnt
            self.log_rows.append((pb.x, pb.y, pb.n, pb.mode, pb.tsf, pb.d,
                                  pb.bits, pb.energy, pb.j))
        for ctb in node.chroma:
            cnt = np.zeros(NFEAT, dtype=np.float64)
            enc_chroma_tb_payload(self.r_st, self.r_buf, self.r_ctx,
                                  ctb.comp_idx, mode_class(ctb.mode), ctb.cbf,
                                  ctb.tsf, ctb.levels, ctb.n, cnt,
                                  _NO_BITS_LIMIT)
            self.counts += cnt

    def encode(self):
        for ty in range(0, self.h, CTU_SIZE):
            for tx in range(0, self.w, CTU_SIZE):
                node = self._decide_cu(tx, ty, CTU_SIZE, 0)
                self._apply(node)
        enc_flush(self.r_st, self.r_buf)
        if self.r_st[ST_FLAGS] & 2:
            raise CodecError("internal: entropy buffer overflow")
        from .entropy import ST_POS
        nbytes = (int(self.r_st[ST_POS]) + 7) // 8
        payload = bytes(self.r_buf[:nbytes])
        recon = Frame(self.rec_y.copy(), self.rec_u.copy(), self.rec_v.copy())
        return payload, self.counts.copy(), recon, self.log_rows


@dataclass(frozen=True)
class EncodedFrame:
    payload: bytes
    counts_vec: np.ndarray
    recon: Frame
    log_rows: list
    payload_bits: int


def encode_frame(frame: Frame, qp: int, lambda_r: float, lambda_e: float,
                 weight_vec: np.ndarray) -> EncodedFrame:
    enc = FrameEncoder(frame, qp, lambda_r, lambda_e, weight_vec)
    payload, counts, recon, rows = enc.encode()
    return EncodedFrame(payload, counts, recon, rows, len(payload) * 8)
