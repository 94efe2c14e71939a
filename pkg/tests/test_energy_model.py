import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_counts, make_profile
from derdcodec.energy_model import (
    BLOCK_SIZES, COMPONENTS, MODE_CLASSES, MODE_SIZE_KEYS,
    FeatureCounts, SpecificEnergyProfile, accumulate, block_energy,
    default_profile, estimate_decoding_energy,
)
from derdcodec.errors import InvalidCountsError, KeyMismatchError, ProfileFormatError


def naive_estimate(profile, counts):
    """Term-by-term re-implementation of the energy sum, used as the oracle."""
    e = profile.e0
    e += profile.e_slice * counts.n_slice
    for size in BLOCK_SIZES:
        for mode_cls in MODE_CLASSES:
            e += profile.e_mode_size[(mode_cls, size)] * counts.n_mode_size[(mode_cls, size)]
    for size in BLOCK_SIZES:
        for comp in COMPONENTS:
            e += profile.e_comp_size[(comp, size)] * counts.n_comp_size[(comp, size)]
    e += profile.e_coeff * counts.n_coeff
    e += profile.e_g1 * counts.n_g1
    e += profile.e_val * counts.sum_log2_val
    e += profile.e_csbf * counts.n_csbf
    e += profile.e_nompm * counts.n_nompm
    e -= profile.e_tsf * counts.n_tsf
    return e


def sparse_profile(**kw):
    base = dict(
        e0=0.0, e_slice=0.0,
        e_mode_size=dict.fromkeys([(c, s) for c in MODE_CLASSES for s in BLOCK_SIZES], 0.0),
        e_comp_size=dict.fromkeys([(c, s) for c in COMPONENTS for s in BLOCK_SIZES], 0.0),
        e_coeff=0.0, e_g1=0.0, e_val=0.0, e_csbf=0.0, e_nompm=0.0, e_tsf=0.0,
    )
    base.update(kw)
    return SpecificEnergyProfile(**base)


def test_offset_only():
    prof = sparse_profile(e0=1.0)
    assert estimate_decoding_energy(prof, FeatureCounts.zero()) == 1.0


def test_slice_term():
    prof = sparse_profile(e0=1.0, e_slice=2.0)
    counts = FeatureCounts(n_slice=3)
    assert estimate_decoding_energy(prof, counts) == 7.0


def test_tsf_term_is_subtracted():
    # The transform-skip term carries a minus sign; a degenerate profile can
    # push the whole estimate negative and the estimator must return it as is.
    prof = sparse_profile(e_tsf=0.5)
    counts = FeatureCounts(n_tsf=2)
    assert estimate_decoding_energy(prof, counts) == -1.0


def test_val_term_counts_log2_magnitude():
    # One coefficient of magnitude 4 contributes log2(4) = 2 to the val sum.
    prof = sparse_profile(e_val=1.0)
    counts = FeatureCounts(n_coeff=1, sum_log2_val=2.0)
    assert estimate_decoding_energy(prof, counts) == 2.0


def test_estimator_matches_naive_oracle():
    rng = np.random.default_rng(42)
    for _ in range(200):
        prof = make_profile(rng, scale=float(rng.uniform(1e-9, 1.0)))
        counts = make_counts(rng)
        got = estimate_decoding_energy(prof, counts)
        want = naive_estimate(prof, counts)
        assert got == pytest.approx(want, rel=1e-12)


def test_accumulate_identity_and_sum():
    rng = np.random.default_rng(3)
    a = make_counts(rng)
    assert accumulate(a, FeatureCounts.zero()) == a
    b = FeatureCounts(n_coeff=1)
    assert accumulate(b, b).n_coeff == 2


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31), st.integers(0, 2**31))
def test_linearity(seed_a, seed_b):
    prof = make_profile(np.random.default_rng(0))
    a = make_counts(np.random.default_rng(seed_a))
    b = make_counts(np.random.default_rng(seed_b))
    lhs = estimate_decoding_energy(prof, accumulate(a, b)) + prof.e0
    rhs = estimate_decoding_energy(prof, a) + estimate_decoding_energy(prof, b)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_monotonicity_in_counts():
    prof = make_profile(np.random.default_rng(5))
    base = make_counts(np.random.default_rng(6))
    e0 = estimate_decoding_energy(prof, base)
    vec = base.vector()
    from derdcodec.energy_model import FEAT_TSF, NFEAT
    for k in range(NFEAT):
        bumped = vec.copy()
        bumped[k] += 1
        # keep n_g1 <= n_coeff valid
        from derdcodec.energy_model import FEAT_COEFF, FEAT_G1
        if k == FEAT_G1:
            bumped[FEAT_COEFF] += 1
        e1 = estimate_decoding_energy(prof, FeatureCounts.from_vector(bumped))
        if k == FEAT_TSF:
            assert e1 <= e0
        else:
            assert e1 >= e0


def test_block_energy_excludes_stream_constants():
    prof = make_profile(np.random.default_rng(7))
    counts = FeatureCounts(n_slice=2, n_coeff=10, sum_log2_val=5.0)
    assert block_energy(prof, counts) == pytest.approx(
        10 * prof.e_coeff + 5.0 * prof.e_val, rel=1e-12)


def test_weight_vector_dot_equals_estimate():
    prof = make_profile(np.random.default_rng(8))
    counts = make_counts(np.random.default_rng(9))
    via_vec = prof.e0 + float(np.dot(prof.weight_vector(), counts.vector()))
    assert via_vec == pytest.approx(estimate_decoding_energy(prof, counts), rel=1e-12)


def test_profile_serialization_roundtrip_is_exact(tmp_path):
    prof = make_profile(np.random.default_rng(10))
    path = tmp_path / "prof.json"
    prof.save(path)
    back = SpecificEnergyProfile.load(path)
    assert back == prof  # dataclass equality: bit-exact floats via repr


def test_counts_serialization_roundtrip_is_exact(tmp_path):
    counts = make_counts(np.random.default_rng(11))
    path = tmp_path / "counts.json"
    counts.save(path)
    assert FeatureCounts.load(path) == counts


def test_profile_rejects_unknown_keys(tmp_path):
    d = make_profile().to_json_dict()
    d["e_surprise"] = 1.0
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(d))
    with pytest.raises(ProfileFormatError, match="e_surprise"):
        SpecificEnergyProfile.load(path)


def test_profile_rejects_negative_and_nonfinite():
    with pytest.raises(ProfileFormatError, match="negative"):
        sparse_profile(e_coeff=-1.0)
    with pytest.raises(ProfileFormatError, match="finite"):
        sparse_profile(e0=math.inf)


def test_profile_rejects_incomplete_map():
    kw = dict(
        e0=0.0, e_slice=0.0,
        e_mode_size={("DC", 4): 0.0},
        e_comp_size=dict.fromkeys([(c, s) for c in COMPONENTS for s in BLOCK_SIZES], 0.0),
        e_coeff=0.0, e_g1=0.0, e_val=0.0, e_csbf=0.0, e_nompm=0.0, e_tsf=0.0,
    )
    with pytest.raises(KeyMismatchError):
        SpecificEnergyProfile(**kw)


def test_counts_contract_violations():
    with pytest.raises(InvalidCountsError, match="negative"):
        FeatureCounts(n_coeff=-1)
    with pytest.raises(InvalidCountsError, match="n_g1"):
        FeatureCounts(n_coeff=1, n_g1=2)
    with pytest.raises(InvalidCountsError, match="sum_log2_val"):
        FeatureCounts(sum_log2_val=-0.5)
    with pytest.raises(InvalidCountsError, match="integer"):
        FeatureCounts(n_coeff=1.5)


def test_default_profile_loads_and_is_labeled_synthetic():
    prof = default_profile()
    assert "synthetic" in (prof.name + prof.provenance).lower()
    counts = make_counts(np.random.default_rng(12))
    assert math.isfinite(estimate_decoding_energy(prof, counts))


def test_key_mismatch_between_handbuilt_maps():
    prof = make_profile()
    counts = make_counts()
    object.__setattr__(counts, "n_mode_size",
                       {k: v for k, v in list(counts.n_mode_size.items())[:-1]})
    with pytest.raises(KeyMismatchError):
        estimate_decoding_energy(prof, counts)
