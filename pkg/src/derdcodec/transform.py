"""Integer DCT-II approximation and the uniform deadzone quantizer.

The 1-D basis matrices are orthonormal DCT-II bases scaled by 2^BASIS_SHIFT and
rounded to integers, with the trigonometric values folded through their exact
symmetries first so every AC row sums to exactly zero (a constant block always
transforms to a single DC coefficient). All arithmetic runs in float64 on
integer-valued operands below 2^53, so results are exact and bit-reproducible
without depending on summation order.

Forward output is at orthonormal scale (Parseval: coefficient energy equals
residual energy), which also makes the transform-skip path a plain identity at
the same quantizer scale. The forward/inverse round trip without quantization
is exact up to the documented rounding bound of 1 per sample for 8-bit
residuals.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

BASIS_SHIFT = 12
_INV_PREC = 6  # sub-integer bits kept when scaling dequantized coefficients

ROUNDTRIP_BOUND = 1  # max |inverse(forward(x)) - x| per sample, 8-bit residuals


def _cos_table(n: int) -> np.ndarray:
    """cos(pi*a/(2n)) for a in [0, 4n), folded so symmetric entries are exact."""
    base = np.cos(np.pi * np.arange(n + 1) / (2 * n))
    base[n] = 0.0
    table = np.empty(4 * n)
    for a in range(4 * n):
        if a <= n:
            table[a] = base[a]
        elif a <= 2 * n:
            table[a] = -base[2 * n - a]
        elif a <= 3 * n:
            table[a] = -base[a - 2 * n]
        else:
            table[a] = base[4 * n - a]
    return table


def dct_matrix(n: int) -> np.ndarray:
    """Integerized orthonormal DCT-II basis, scaled by 2^BASIS_SHIFT."""
    cos = _cos_table(n)
    t = np.empty((n, n))
    scale = float(1 << BASIS_SHIFT)
    for u in range(n):
        f = math.sqrt(1.0 / n) if u == 0 else math.sqrt(2.0 / n)
        for x in range(n):
            a = ((2 * x + 1) * u) % (4 * n)
            t[u, x] = np.rint(scale * f * cos[a])
    return t


_MATS = {n: dct_matrix(n) for n in (4, 8, 16, 32)}
_T4, _T8, _T16, _T32 = _MATS[4], _MATS[8], _MATS[16], _MATS[32]


@njit(cache=True)
def _basis(n, t4, t8, t16, t32):
    if n == 4:
        return t4
    if n == 8:
        return t8
    if n == 16:
        return t16
    return t32


@njit(cache=True)
def fwd_dct(res, out, t4, t8, t16, t32):
    """res: float64 (n,n) integral values; out: float64 (n,n) coefficients.

    Explicit loops instead of np.dot: all operands are exact integers in
    float64, and small-block BLAS dispatch would dominate the runtime.
    """
    n = res.shape[0]
    t = _basis(n, t4, t8, t16, t32)
    work = np.empty((n, n))
    for u in range(n):
        for j in range(n):
            acc = 0.0
            for x in range(n):
                acc += t[u, x] * res[x, j]
            work[u, j] = acc
    half = float(1 << (2 * BASIS_SHIFT - 1))
    div = float(1 << (2 * BASIS_SHIFT))
    for u in range(n):
        for v in range(n):
            acc = 0.0
            for j in range(n):
                acc += work[u, j] * t[v, j]
            out[u, v] = np.floor((acc + half) / div)


@njit(cache=True)
def inv_dct(coeff, out, t4, t8, t16, t32):
    """coeff: float64 (n,n) dequantized values; out: float64 integral residual."""
    n = coeff.shape[0]
    t = _basis(n, t4, t8, t16, t32)
    prec = float(1 << _INV_PREC)
    scaled = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            scaled[i, j] = np.rint(coeff[i, j] * prec)
    work = np.empty((n, n))
    for x in range(n):
        for v in range(n):
            acc = 0.0
            for u in range(n):
                acc += t[u, x] * scaled[u, v]
            work[x, v] = acc
    shift = 2 * BASIS_SHIFT + _INV_PREC
    half = float(1 << (shift - 1))
    div = float(1 << shift)
    for x in range(n):
        for y in range(n):
            acc = 0.0
            for v in range(n):
                acc += work[x, v] * t[v, y]
            out[x, y] = np.floor((acc + half) / div)


@njit(cache=True)
def quantize_block(coeff, step, deadzone, out):
    """Uniform deadzone quantizer: level = sign * floor(|c|/step + deadzone)."""
    n = coeff.shape[0]
    for i in range(n):
        for j in range(n):
            c = coeff[i, j]
            q = np.floor(abs(c) / step + deadzone)
            out[i, j] = q if c >= 0 else -q


@njit(cache=True)
def dequantize_block(levels, step, out):
    n = levels.shape[0]
    for i in range(n):
        for j in range(n):
            out[i, j] = levels[i, j] * step


def qp_step(qp: int) -> float:
    """HEVC-convention quantizer step size, 2^((QP-4)/6)."""
    if not 0 <= qp <= 51:
        raise ValueError(f"QP {qp} out of range [0, 51]")
    return 2.0 ** ((qp - 4) / 6.0)


INTRA_DEADZONE = 1.0 / 3.0


def forward_transform(residual: np.ndarray) -> np.ndarray:
    """2-D integer DCT of a square residual block (sizes 4, 8, 16, 32)."""
    n = _checked_size(residual)
    out = np.empty((n, n))
    fwd_dct(residual.astype(np.float64), out, _T4, _T8, _T16, _T32)
    return out.astype(np.int64)


def inverse_transform(coeff: np.ndarray) -> np.ndarray:
    n = _checked_size(coeff)
    out = np.empty((n, n))
    inv_dct(coeff.astype(np.float64), out, _T4, _T8, _T16, _T32)
    return out.astype(np.int64)


def quantize(coeff: np.ndarray, qp: int, deadzone: float = INTRA_DEADZONE) -> np.ndarray:
    step = qp_step(qp)
    out = np.empty(coeff.shape)
    quantize_block(coeff.astype(np.float64), step, deadzone, out)
    return out.astype(np.int64)


def dequantize(levels: np.ndarray, qp: int) -> np.ndarray:
    step = qp_step(qp)
    out = np.empty(levels.shape, dtype=np.float64)
    dequantize_block(levels.astype(np.float64), step, out)
    return out


def _checked_size(block: np.ndarray) -> int:
    if block.ndim != 2 or block.shape[0] != block.shape[1]:
        raise ValueError(f"expected a square block, got shape {block.shape}")
    n = block.shape[0]
    if n not in (4, 8, 16, 32):
        raise ValueError(f"unsupported transform size {n}")
    return n
