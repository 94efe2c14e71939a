"""Least-squares calibration of a specific-energy profile from measurements.

Each sample pairs the feature counts of one decoded bitstream with its measured
(or synthesized) total energy. The design matrix has one column per profile
parameter; the transform-skip column is negated so the fitted e_tsf is stored
non-negative, matching the profile convention.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .energy_model import (
    BLOCK_SIZES, COMPONENTS, FEAT_TSF, MODE_CLASSES, NFEAT,
    FeatureCounts, SpecificEnergyProfile, comp_size_index, mode_size_index,
)
from .errors import FitError, RankDeficientError

# Column order: e0, then the weight-vector layout of energy_model.
PARAM_NAMES = tuple(
    ["e0", "e_slice"]
    + [f"e_mode_size.{c}.{s}" for c in MODE_CLASSES for s in BLOCK_SIZES]
    + [f"e_comp_size.{c}.{s}" for c in COMPONENTS for s in BLOCK_SIZES]
    + ["e_coeff", "e_g1", "e_val", "e_csbf", "e_nompm", "e_tsf"]
)
N_PARAMS = len(PARAM_NAMES)

_RCOND = 1e-10


@dataclass(frozen=True)
class EnergyProfileFit:
    """Result of fit_profile: the calibrated profile plus diagnostics."""

    profile: SpecificEnergyProfile
    residuals: np.ndarray          # estimated - measured, per sample
    relative_errors: np.ndarray    # |est - meas| / meas; NaN where meas <= 0
    condition_number: float        # of the reduced design matrix
    rank: int
    unidentifiable: tuple          # parameter names with all-zero columns

    @property
    def mean_relative_error(self) -> float:
        return float(np.nanmean(self.relative_errors))


def design_row(counts: FeatureCounts) -> np.ndarray:
    row = np.empty(N_PARAMS, dtype=np.float64)
    row[0] = 1.0
    row[1:] = counts.vector()
    row[1 + FEAT_TSF] = -counts.n_tsf
    return row


def _profile_from_params(x: np.ndarray, name: str) -> SpecificEnergyProfile:
    mode = {(c, s): float(x[1 + mode_size_index(c, s)])
            for c in MODE_CLASSES for s in BLOCK_SIZES}
    comp = {(c, s): float(x[1 + comp_size_index(c, s)])
            for c in COMPONENTS for s in BLOCK_SIZES}
    e_coeff, e_g1, e_val, e_csbf, e_nompm, e_tsf = x[-6:]
    return SpecificEnergyProfile(
        e0=float(x[0]), e_slice=float(x[1]),
        e_mode_size=mode, e_comp_size=comp,
        e_coeff=float(e_coeff), e_g1=float(e_g1), e_val=float(e_val),
        e_csbf=float(e_csbf), e_nompm=float(e_nompm), e_tsf=float(e_tsf),
        name=name, provenance="least-squares calibration from energy samples",
    )


def fit_profile(samples, nonnegative: bool = False, free_params=None) -> EnergyProfileFit:
    """Calibrate a profile from (FeatureCounts, measured energy in J) samples.

    Minimizes the sum of squared estimation errors. Parameters outside
    free_params (default: all) are pinned to zero. All-zero design columns are
    reported as unidentifiable and their parameters pinned to zero; any further
    rank deficiency raises RankDeficientError naming the entangled parameters.
    With nonnegative=True the coefficients are constrained to >= 0.
    """
    samples = list(samples)
    if not samples:
        raise FitError("no samples given")
    if free_params is None:
        free_idx = list(range(N_PARAMS))
    else:
        free_params = set(free_params)
        bad = free_params - set(PARAM_NAMES)
        if bad:
            raise FitError(f"unknown parameter names: {sorted(bad)}")
        free_idx = [i for i, n in enumerate(PARAM_NAMES) if n in free_params]

    a_full = np.stack([design_row(c) for c, _ in samples])
    y = np.array([float(e) for _, e in samples])
    a = a_full[:, free_idx]

    zero_cols = np.flatnonzero(~np.any(a != 0.0, axis=0))
    unidentifiable = tuple(PARAM_NAMES[free_idx[j]] for j in zero_cols)
    keep = [j for j in range(a.shape[1]) if j not in set(zero_cols)]
    a_red = a[:, keep]
    kept_names = [PARAM_NAMES[free_idx[j]] for j in keep]

    if a_red.shape[0] < a_red.shape[1]:
        raise RankDeficientError(
            f"underdetermined system: {a_red.shape[0]} samples for "
            f"{a_red.shape[1]} free parameters ({', '.join(kept_names)})",
            params=kept_names,
        )

    sv = np.linalg.svd(a_red, compute_uv=False) if a_red.size else np.array([])
    rank = int(np.sum(sv > _RCOND * sv[0])) if sv.size else 0
    if rank < a_red.shape[1]:
        # Name the parameters entangled in the (numerical) null space.
        _, _, vt = np.linalg.svd(a_red)
        null = vt[rank:]
        involved = [kept_names[j] for j in range(len(kept_names))
                    if np.any(np.abs(null[:, j]) > 1e-8)]
        raise RankDeficientError(
            f"rank-deficient system (rank {rank} < {a_red.shape[1]}); "
            f"dependent parameters: {', '.join(involved)}",
            params=involved,
        )

    if a_red.shape[1] == 0:
        x_red = np.zeros(0)
    elif nonnegative:
        from scipy.optimize import nnls
        x_red, _ = nnls(a_red, y)
    else:
        x_red, _, _, _ = np.linalg.lstsq(a_red, y, rcond=_RCOND)

    x = np.zeros(N_PARAMS)
    for j, v in zip(keep, x_red):
        x[free_idx[j]] = v

    neg = [PARAM_NAMES[i] for i in range(N_PARAMS) if x[i] < 0]
    if neg:
        raise FitError(
            f"unconstrained fit produced negative specific energies for "
            f"{', '.join(neg)}; re-run with nonnegative=True"
        )

    predicted = a_full @ x
    residuals = predicted - y
    relative = np.where(y > 0, np.abs(residuals) / np.where(y > 0, y, 1.0), np.nan)
    cond = float(sv[0] / sv[-1]) if sv.size else 0.0

    profile = _profile_from_params(x, name=f"fit of {len(samples)} samples")
    return EnergyProfileFit(
        profile=profile,
        residuals=residuals,
        relative_errors=relative,
        condition_number=cond,
        rank=rank,
        unidentifiable=unidentifiable,
    )
