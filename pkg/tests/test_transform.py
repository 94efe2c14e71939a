import numpy as np
import pytest
import scipy.fft
from hypothesis import given, settings
from hypothesis import strategies as st

from derdcodec.transform import (
    BASIS_SHIFT, INTRA_DEADZONE, ROUNDTRIP_BOUND, dct_matrix, dequantize,
    forward_transform, inverse_transform, qp_step, quantize,
)

SIZES = (4, 8, 16, 32)


def test_basis_ac_rows_sum_to_zero():
    # Guarantees a constant block transforms to a single DC coefficient.
    for n in SIZES:
        t = dct_matrix(n)
        assert np.all(t[1:].sum(axis=1) == 0)


def test_basis_is_scaled_orthonormal():
    for n in SIZES:
        t = dct_matrix(n) / (1 << BASIS_SHIFT)
        err = np.abs(t @ t.T - np.eye(n)).max()
        assert err < 2e-3


def test_zero_residual_round_trip():
    for n in SIZES:
        z = np.zeros((n, n), dtype=np.int64)
        c = forward_transform(z)
        assert not c.any()
        assert not inverse_transform(c).any()


def test_constant_residual_has_single_dc_coefficient():
    for n in SIZES:
        for k in (1, -3, 100):
            c = forward_transform(np.full((n, n), k, dtype=np.int64))
            nz = np.argwhere(c != 0)
            assert nz.tolist() == [[0, 0]]
            assert c[0, 0] == pytest.approx(k * n, abs=1)


def test_round_trip_bound_against_float_oracle():
    rng = np.random.default_rng(0)
    for n in SIZES:
        for _ in range(200):
            r = rng.integers(-255, 256, size=(n, n))
            c = forward_transform(r)
            ref = scipy.fft.dctn(r.astype(np.float64), norm="ortho")
            assert np.abs(c - ref).max() < 1.0  # integer DCT tracks the oracle
            rt = inverse_transform(c)
            assert np.abs(rt - r).max() <= ROUNDTRIP_BOUND


def test_quantize_zero_input_any_qp():
    z = np.zeros((8, 8), dtype=np.int64)
    for qp in (0, 4, 25, 51):
        assert not quantize(z, qp).any()


def test_quantize_identity_at_unit_step():
    # QP 4 gives step 1; zero deadzone offset on integer inputs is identity.
    assert qp_step(4) == 1.0
    rng = np.random.default_rng(1)
    c = rng.integers(-100, 101, size=(8, 8))
    assert np.array_equal(quantize(c, 4, deadzone=0.0), c)
    assert np.array_equal(quantize(c, 4), c)  # intra deadzone also exact on ints


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 51), st.integers(0, 2**31))
def test_reconstruction_error_within_one_step(qp, seed):
    rng = np.random.default_rng(seed)
    c = rng.integers(-2000, 2001, size=(4, 4))
    step = qp_step(qp)
    recon = dequantize(quantize(c, qp), qp)
    assert np.abs(recon - c).max() <= step
    # the spec's own bound: half a step plus the deadzone offset
    assert np.abs(recon - c).max() <= step * (0.5 + INTRA_DEADZONE) + 1e-9


def test_qp_step_law():
    assert qp_step(4) == 1.0
    assert qp_step(10) == pytest.approx(2.0)
    assert qp_step(51) == pytest.approx(2.0 ** (47 / 6))
    with pytest.raises(ValueError):
        qp_step(52)
    with pytest.raises(ValueError):
        qp_step(-1)


def test_unsupported_sizes_rejected():
    with pytest.raises(ValueError, match="unsupported"):
        forward_transform(np.zeros((5, 5), dtype=np.int64))
    with pytest.raises(ValueError, match="square"):
        forward_transform(np.zeros((4, 8), dtype=np.int64))
