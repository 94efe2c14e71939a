"""Intra decoder: parses the entropy payload and rebuilds the frame.

The decoder maintains its own reconstruction, mode map and coded-cell map,
which evolve exactly as the encoder's did, and independently re-counts every
decoder-side feature event (the audit invariant: decoder counts must equal
encoder counts bit for bit, including the float-valued sum of log2
coefficient magnitudes).
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .blocks import (
    CTX_CBF_CHROMA, CTX_CBF_LUMA, CTX_PART, CTX_SPLIT, CTX_TSF_CHROMA,
    CTX_TSF_LUMA, NCTX, dec_coeff_block, dec_mode_signal, residual_from_levels,
    write_recon,
)
from .encoder import CTU_SIZE, _size_idx, qp_step_nb
from .energy_model import FEAT_COMP0, FEAT_MODE0, FEAT_SLICE, FEAT_TSF, NFEAT
from .entropy import ST_FLAGS, dec_bin, dec_init, new_contexts, new_state
from .errors import BitstreamError
from .frames import Frame
from .intra import build_refs, mode_class, mpm_list, predict_block
from .transform import _T4, _T8, _T16, _T32


@njit(cache=True)
def dec_luma_pb_payload(st, buf, ctx, mpm0, mpm1, mpm2, levels, n, cnt):
    mode = dec_mode_signal(st, buf, ctx, mpm0, mpm1, mpm2, cnt)
    cnt[FEAT_MODE0 + mode_class(mode) * 4 + _size_idx(n)] += 1.0
    cbf = dec_bin(st, buf, ctx, CTX_CBF_LUMA)
    tsf = np.int64(0)
    if cbf:
        if n == 4:
            tsf = np.int64(dec_bin(st, buf, ctx, CTX_TSF_LUMA))
            cnt[FEAT_TSF] += tsf
        dec_coeff_block(st, buf, ctx, levels, n, 0, cnt)
        if tsf == 0:
            cnt[FEAT_COMP0 + _size_idx(n)] += 1.0
    else:
        for i in range(n):
            for j in range(n):
                levels[i, j] = 0
    return mode, np.int64(cbf), tsf


@njit(cache=True)
def dec_chroma_tb_payload(st, buf, ctx, comp_idx, cls, levels, n, cnt):
    cnt[FEAT_MODE0 + cls * 4 + _size_idx(n)] += 1.0
    cbf = dec_bin(st, buf, ctx, CTX_CBF_CHROMA)
    tsf = np.int64(0)
    if cbf:
        if n == 4:
            tsf = np.int64(dec_bin(st, buf, ctx, CTX_TSF_CHROMA))
            cnt[FEAT_TSF] += tsf
        dec_coeff_block(st, buf, ctx, levels, n, 1, cnt)
        if tsf == 0:
            cnt[FEAT_COMP0 + comp_idx * 4 + _size_idx(n)] += 1.0
    else:
        for i in range(n):
            for j in range(n):
                levels[i, j] = 0
    return np.int64(cbf), tsf


@njit(cache=True)
def _recon_pb(plane, coded, cell_shift, x, y, n, mode, levels, cbf, tsf, step,
              t4, t8, t16, t32):
    top_ref = np.empty(2 * n + 1, dtype=np.int64)
    left_ref = np.empty(2 * n + 1, dtype=np.int64)
    build_refs(plane, coded, cell_shift, x, y, n, top_ref, left_ref)
    pred = np.empty((n, n), dtype=np.int64)
    predict_block(top_ref, left_ref, n, mode, pred)
    res = np.zeros((n, n), dtype=np.int64)
    if cbf:
        residual_from_levels(levels, step, tsf, res, t4, t8, t16, t32)
    write_recon(plane, x, y, n, pred, res)


class FrameDecoder:
    def __init__(self, payload: bytes, width: int, height: int, qp: int):
        self.w = width
        self.h = height
        self.qp = qp
        self.step = qp_step_nb(qp)
        self.rec_y = np.zeros((height, width), dtype=np.uint8)
        self.rec_u = np.zeros((height // 2, width // 2), dtype=np.uint8)
        self.rec_v = np.zeros((height // 2, width // 2), dtype=np.uint8)
        self.coded = np.zeros((height // 4, width // 4), dtype=np.uint8)
        self.modemap = np.full((height // 4, width // 4), -1, dtype=np.int8)
        self.ctx = new_contexts(NCTX)
        self.st = new_state()
        self.buf = np.frombuffer(bytes(payload), dtype=np.uint8).copy()
        dec_init(self.st, self.buf, len(payload) * 8)
        self.counts = np.zeros(NFEAT, dtype=np.float64)
        self.counts[FEAT_SLICE] = 1.0

    def _check(self):
        if self.st[ST_FLAGS] & 1:
            raise BitstreamError(
                f"truncated payload: read past end at bit {int(self.st[3])}",
                position=int(self.st[3]),
            )

    def _decode_cu(self, x, y, size, depth):
        if x >= self.w or y >= self.h:
            return
        fits = (x + size <= self.w) and (y + size <= self.h)
        if size > 8:
            if not fits:
                split = True
            else:
                split = bool(dec_bin(self.st, self.buf, self.ctx, CTX_SPLIT + depth))
            if split:
                half = size // 2
                for cy, cx in ((y, x), (y, x + half), (y + half, x), (y + half, x + half)):
                    self._decode_cu(cx, cy, half, depth + 1)
                return
            part_nxn = False
        else:
            part_nxn = dec_bin(self.st, self.buf, self.ctx, CTX_PART) == 0
        self._check()
        if part_nxn:
            pb_geo = [(x, y, 4), (x + 4, y, 4), (x, y + 4, 4), (x + 4, y + 4, 4)]
        else:
            pb_geo = [(x, y, size)]
        derived = -1
        for px, py, pn in pb_geo:
            cy, cx = py >> 2, px >> 2
            m0, m1, m2 = mpm_list(self.modemap, cy, cx)
            levels = np.empty((pn, pn), dtype=np.int64)
            cnt = np.zeros(NFEAT, dtype=np.float64)
            mode, cbf, tsf = dec_luma_pb_payload(
                self.st, self.buf, self.ctx, m0, m1, m2, levels, pn, cnt)
            self._check()
            self.counts += cnt
            _recon_pb(self.rec_y, self.coded, 2, px, py, pn, mode, levels,
                      cbf, tsf, self.step, _T4, _T8, _T16, _T32)
            nc = pn >> 2
            self.coded[cy:cy + nc, cx:cx + nc] = 1
            self.modemap[cy:cy + nc, cx:cx + nc] = np.int8(mode)
            if derived < 0:
                derived = int(mode)
        cn = size // 2 if size > 8 else 4
        ccx, ccy = x // 2, y // 2
        for comp_idx, plane in ((1, self.rec_u), (2, self.rec_v)):
            levels = np.empty((cn, cn), dtype=np.int64)
            cnt = np.zeros(NFEAT, dtype=np.float64)
            cbf, tsf = dec_chroma_tb_payload(
                self.st, self.buf, self.ctx, comp_idx, mode_class(derived),
                levels, cn, cnt)
            self._check()
            self.counts += cnt
            _recon_pb(plane, self.coded, 1, ccx, ccy, cn, derived, levels,
                      cbf, tsf, self.step, _T4, _T8, _T16, _T32)

    def decode(self):
        for ty in range(0, self.h, CTU_SIZE):
            for tx in range(0, self.w, CTU_SIZE):
                self._decode_cu(tx, ty, CTU_SIZE, 0)
        frame = Frame(self.rec_y, self.rec_u, self.rec_v)
        return frame, self.counts.copy()


def decode_frame(payload: bytes, width: int, height: int, qp: int):
    """Decode one frame payload; returns (Frame, feature-count vector)."""
    return FrameDecoder(payload, width, height, qp).decode()
