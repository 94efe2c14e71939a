"""Lagrangian decision machinery: objectives, lambda-QP laws, cost evaluation,
and the CTU-level QP-search experiment behind the lambda_E-QP relation.

Cost function: J = D + lambda_r * R + lambda_e * E_hat, where E_hat is the
modeled decoding energy of the candidate's feature-count delta (stream
constants excluded). RDO fixes lambda_e = 0, DEDO fixes lambda_r = 0 (rate is
dropped from every decision), DERDO uses both.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .encoder import _quantize_int, _size_idx, qp_step_nb
from .energy_model import (
    FEAT_COEFF, FEAT_COMP0, FEAT_CSBF, FEAT_G1, FEAT_MODE0, FEAT_TSF, FEAT_VAL,
    NFEAT, FeatureCounts, SpecificEnergyProfile, block_energy,
)
from .errors import CodecError
from .frames import Frame
from .intra import build_refs, mode_class, predict_block
from .transform import _T4, _T8, _T16, _T32, INTRA_DEADZONE, fwd_dct
from .blocks import residual_from_levels

OBJECTIVE_KINDS = ("rdo", "dedo", "derdo")

LAMBDA_C = 0.57
LAMBDA_E_C = 0.57e7


def lambda_r_from_qp(qp: int) -> float:
    """Rate Lagrange multiplier: 0.57 * 2^((QP-12)/3)."""
    if not 0 <= qp <= 51:
        raise CodecError(f"QP {qp} out of range [0, 51]")
    return LAMBDA_C * 2.0 ** ((qp - 12) / 3.0)


def lambda_e_from_qp(qp: int) -> float:
    """Energy Lagrange multiplier: 0.57e7 * 2^((QP-12)/3)."""
    if not 0 <= qp <= 51:
        raise CodecError(f"QP {qp} out of range [0, 51]")
    return LAMBDA_E_C * 2.0 ** ((qp - 12) / 3.0)


def default_lambda_e_grid():
    """Eleven lambda_E values spanning [5.65e5, 5.84e9].

    Five-million times the rate multiplier at QP0 in {5, 9, ..., 45}; each
    grid point carries its natural QP window center QP0.
    """
    return [(5e6 * lambda_r_from_qp(qp0), qp0) for qp0 in range(5, 46, 4)]


@dataclass(frozen=True)
class Objective:
    """Decision objective: kind plus the two Lagrange multipliers."""

    kind: str
    lambda_r: float
    lambda_e: float
    profile: SpecificEnergyProfile

    def __post_init__(self):
        if self.kind not in OBJECTIVE_KINDS:
            raise CodecError(f"unknown objective kind {self.kind!r}")
        if self.lambda_r < 0 or self.lambda_e < 0:
            raise CodecError("Lagrange multipliers must be non-negative")
        if self.kind == "rdo" and self.lambda_e != 0:
            raise CodecError("RDO requires lambda_e = 0")
        if self.kind == "dedo" and self.lambda_r != 0:
            raise CodecError("DEDO requires lambda_r = 0 (rate is not considered)")

    @classmethod
    def for_qp(cls, kind: str, qp: int, profile: SpecificEnergyProfile,
               lambda_e: float | None = None) -> "Objective":
        """Standard construction from the QP laws.

        DERDO accepts an explicit lambda_e override (>= 0); passing 0 reduces
        it to RDO decision-for-decision, which the acceptance suite exercises.
        """
        if kind == "rdo":
            if lambda_e not in (None, 0, 0.0):
                raise CodecError("RDO cannot take a lambda_e override")
            return cls(kind, lambda_r_from_qp(qp), 0.0, profile)
        if kind == "dedo":
            le = lambda_e_from_qp(qp) if lambda_e is None else float(lambda_e)
            return cls(kind, 0.0, le, profile)
        if kind == "derdo":
            le = lambda_e_from_qp(qp) if lambda_e is None else float(lambda_e)
            return cls(kind, lambda_r_from_qp(qp), le, profile)
        raise CodecError(f"unknown objective kind {kind!r}")


@dataclass(frozen=True)
class CandidateCoding:
    """One coding alternative for a block, with its exact D, R and counts."""

    mode: int
    transform_skip: bool
    qp: int
    levels: np.ndarray
    reconstruction: np.ndarray
    distortion: int
    rate_bits: int
    counts: FeatureCounts


@dataclass(frozen=True)
class CostBreakdown:
    d: float
    r_bits: float
    energy: float
    lambda_r_term: float
    lambda_e_term: float
    j: float


def evaluate_candidate(candidate: CandidateCoding, objective: Objective) -> CostBreakdown:
    """Assemble J for a candidate; E_hat excludes the e0/slice stream constants."""
    energy = block_energy(objective.profile, candidate.counts)
    lr_term = objective.lambda_r * candidate.rate_bits
    le_term = objective.lambda_e * energy
    j = candidate.distortion + lr_term + le_term
    return CostBreakdown(candidate.distortion, candidate.rate_bits, energy,
                         lr_term, le_term, j)


def choose_candidate(candidates, objective: Objective):
    """Deterministic argmin over a candidate list.

    Ties break to the smaller mode index, then no-skip. Returns
    (index, CostBreakdown of the winner).
    """
    if not candidates:
        raise CodecError("empty candidate list")
    best = None
    for i, cand in enumerate(candidates):
        cost = evaluate_candidate(cand, objective)
        key = (cost.j, cand.mode, 1 if cand.transform_skip else 0)
        if best is None or key < best[0]:
            best = (key, i, cost)
    return best[1], best[2]


# ---------------------------------------------------------------------------
# CTU-level QP search experiment (open-loop: source samples as references).
# ---------------------------------------------------------------------------

_VAR_COUNT = 3  # coded, transform-skip, forced-zero


@njit(cache=True)
def _fill_pb_table(src, allcoded, cell_shift, x, y, n, qp, wvec, comp_idx,
                   table, t4, t8, t16, t32):
    """(35, 3, 2) table of (distortion, block energy) per mode x variant.

    Invalid variants get d = +inf. Mode-signaling energy (e_noMPM) is not
    modeled here; everything else matches the encoder's accounting.
    """
    step = qp_step_nb(qp)
    top_ref = np.empty(2 * n + 1, dtype=np.int64)
    left_ref = np.empty(2 * n + 1, dtype=np.int64)
    build_refs(src, allcoded, cell_shift, x, y, n, top_ref, left_ref)
    pred = np.empty((n, n), dtype=np.int64)
    resid = np.empty((n, n), dtype=np.float64)
    coeff = np.empty((n, n), dtype=np.float64)
    lev_dct = np.empty((n, n), dtype=np.int64)
    lev_ts = np.empty((n, n), dtype=np.int64)
    res_rec = np.zeros((n, n), dtype=np.int64)
    sidx = _size_idx(n)
    n_csbf = (n // 4) * (n // 4) if n >= 8 else 0

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
        e_pred = wvec[FEAT_MODE0 + mode_class(mode) * 4 + sidx]
        for variant in range(_VAR_COUNT):
            if variant == 0:
                cbf = nz_dct
                tsf = 0
                levels = lev_dct
            elif variant == 1:
                if n != 4 or nz_ts == 0:
                    table[mode, variant, 0] = np.inf
                    table[mode, variant, 1] = 0.0
                    continue
                cbf = 1
                tsf = 1
                levels = lev_ts
            else:
                if nz_dct == 0:
                    table[mode, variant, 0] = np.inf
                    table[mode, variant, 1] = 0.0
                    continue
                cbf = 0
                tsf = 0
                levels = lev_dct  # unused
            energy = e_pred
            if cbf:
                residual_from_levels(levels, step, tsf, res_rec, t4, t8, t16, t32)
                for i in range(n):
                    for j in range(n):
                        lvl = levels[i, j]
                        if lvl != 0:
                            al = lvl if lvl > 0 else -lvl
                            energy += wvec[FEAT_COEFF]
                            if al > 1:
                                energy += wvec[FEAT_G1]
                            energy += wvec[FEAT_VAL] * np.log2(np.float64(al))
                energy += wvec[FEAT_CSBF] * n_csbf
                if tsf:
                    energy += wvec[FEAT_TSF]  # negative weight: skip saves energy
                else:
                    energy += wvec[FEAT_COMP0 + comp_idx * 4 + sidx]
            else:
                for i in range(n):
                    for j in range(n):
                        res_rec[i, j] = 0
            d = np.int64(0)
            for i in range(n):
                for j in range(n):
                    v = pred[i, j] + res_rec[i, j]
                    if v < 0:
                        v = 0
                    elif v > 255:
                        v = 255
                    diff = src[y + i, x + j] - v
                    d += diff * diff
            table[mode, variant, 0] = np.float64(d)
            table[mode, variant, 1] = energy
    return


class _RootTables:
    """Per-(root, qp) candidate tables for the open-loop DP."""

    def __init__(self, srcs, allcoded_y, allcoded_c, x0, y0, qp, wvec):
        src_y, src_u, src_v = srcs
        t = lambda: np.empty((35, _VAR_COUNT, 2), dtype=np.float64)
        fill = _fill_pb_table
        self.lum = {}
        self.chu = {}
        self.chv = {}
        self.lum4 = {}
        for size in (32, 16, 8):
            for yy in range(y0, y0 + 32, size):
                for xx in range(x0, x0 + 32, size):
                    tab = t()
                    fill(src_y, allcoded_y, 2, xx, yy, size, qp, wvec, 0, tab,
                         _T4, _T8, _T16, _T32)
                    self.lum[(xx, yy, size)] = tab
                    cn = size // 2 if size > 8 else 4
                    tu = t()
                    tv = t()
                    fill(src_u, allcoded_c, 1, xx // 2, yy // 2, cn, qp, wvec, 1,
                         tu, _T4, _T8, _T16, _T32)
                    fill(src_v, allcoded_c, 1, xx // 2, yy // 2, cn, qp, wvec, 2,
                         tv, _T4, _T8, _T16, _T32)
                    self.chu[(xx, yy, size)] = tu
                    self.chv[(xx, yy, size)] = tv
                    if size == 8:
                        for sy in (yy, yy + 4):
                            for sx in (xx, xx + 4):
                                tab4 = t()
                                fill(src_y, allcoded_y, 2, sx, sy, 4, qp, wvec,
                                     0, tab4, _T4, _T8, _T16, _T32)
                                self.lum4[(sx, sy)] = tab4

    def j_ded(self, x0, y0, lambda_e):
        """Tree DP: min_J(D + lambda_e * E) over the 32->4 quadtree."""
        def per_mode(tab):
            return (tab[:, :, 0] + lambda_e * tab[:, :, 1]).min(axis=1)

        def cu_cost(xx, yy, size):
            lum_m = per_mode(self.lum[(xx, yy, size)])
            chu_m = per_mode(self.chu[(xx, yy, size)])
            chv_m = per_mode(self.chv[(xx, yy, size)])
            leaf = float((lum_m + chu_m + chv_m).min())
            if size == 8:
                pb0 = per_mode(self.lum4[(xx, yy)])
                nxn = float((pb0 + chu_m + chv_m).min())
                for sx, sy in ((xx + 4, yy), (xx, yy + 4), (xx + 4, yy + 4)):
                    nxn += float(per_mode(self.lum4[(sx, sy)]).min())
                return min(leaf, nxn)
            half = size // 2
            split = 0.0
            for sy in (yy, yy + half):
                for sx in (xx, xx + half):
                    split += cu_cost(sx, sy, half)
            return min(leaf, split)

        return cu_cost(x0, y0, 32)


@dataclass
class ExperimentResult:
    """QP histograms per (label, lambda_e) plus pooled "ALL" aggregation."""

    lambda_grid: list          # (lambda_e, qp_window_center) pairs
    labels: list
    histograms: dict           # (label, lambda_e) -> np.ndarray over QP 0..51
    dominants: dict            # (label, lambda_e) -> dominant QP

    def dominant_series(self, label="ALL"):
        return [(le, self.dominants[(label, le)]) for le, _ in self.lambda_grid]


def qp_search_experiment(frames_by_label, profile: SpecificEnergyProfile,
                         lambda_grid=None, window: int = 5,
                         full_grid: bool = False) -> ExperimentResult:
    """For each lambda_E and each 32x32 root block, the DEDO-optimal QP.

    frames_by_label: mapping label -> list of Frames. The QP window for each
    lambda_E spans its grid center +-window (clipped to [0, 51]), or the whole
    QP range with full_grid=True. Returns normalized histograms of chosen QPs
    and the dominant QP, per label and pooled.
    """
    if not frames_by_label or all(not v for v in frames_by_label.values()):
        raise CodecError("experiment needs at least one frame")
    grid = default_lambda_e_grid() if lambda_grid is None else list(lambda_grid)
    wvec = profile.weight_vector()

    windows = {}
    all_qps = set()
    for le, qp0 in grid:
        if full_grid:
            qps = list(range(0, 52))
        else:
            qps = [q for q in range(qp0 - window, qp0 + window + 1) if 0 <= q <= 51]
        windows[le] = qps
        all_qps.update(qps)

    labels = list(frames_by_label)
    hist = {(lab, le): np.zeros(52) for lab in labels + ["ALL"] for le, _ in grid}

    for lab in labels:
        for frame in frames_by_label[lab]:
            src_y = frame.y.astype(np.int64)
            src_u = frame.u.astype(np.int64)
            src_v = frame.v.astype(np.int64)
            ac_y = np.ones((frame.height // 4, frame.width // 4), dtype=np.uint8)
            ac_c = ac_y  # chroma availability derives from the same cells
            for y0 in range(0, frame.height - 31, 32):
                for x0 in range(0, frame.width - 31, 32):
                    jtab = {}
                    for qp in sorted(all_qps):
                        tables = _RootTables((src_y, src_u, src_v), ac_y, ac_c,
                                             x0, y0, qp, wvec)
                        for le, _ in grid:
                            if qp in windows[le]:
                                jtab[(le, qp)] = tables.j_ded(x0, y0, le)
                    for le, qp0 in grid:
                        # Exact J ties (e.g. all-zero residual at every QP in
                        # the window) carry no preference; break them toward
                        # the window center rather than an extreme.
                        best_qp = min(windows[le],
                                      key=lambda q: (jtab[(le, q)],
                                                     abs(q - qp0), q))
                        hist[(lab, le)][best_qp] += 1
                        hist[("ALL", le)][best_qp] += 1

    dominants = {}
    for key, h in hist.items():
        total = h.sum()
        if total > 0:
            h /= total
        dominants[key] = int(np.argmax(h))
    return ExperimentResult(grid, labels + ["ALL"], hist, dominants)


def fitted_lambda_slope(result: ExperimentResult, label="ALL") -> float:
    """Least-squares slope of log2(lambda_E) against the dominant QP."""
    pts = result.dominant_series(label)
    qps = np.array([q for _, q in pts], dtype=np.float64)
    logl = np.array([math.log2(le) for le, _ in pts])
    a = np.stack([qps, np.ones_like(qps)], axis=1)
    sol, _, _, _ = np.linalg.lstsq(a, logl, rcond=None)
    return float(sol[0])
