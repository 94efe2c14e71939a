"""Adaptive binary arithmetic coder with a fixed, documented context set.

Self-contained low/high interval coder on 32-bit registers. Each context holds
a 16-bit probability of the next bin being 1 (initially 1/2) and adapts with a
1/32 exponential step after every coded bin. Bypass bins use a fixed 1/2 split.
Every interval renormalization produces exactly one output bit (possibly
carry-pending), so `bits_total` is the exact payload size at any point; mode
decisions read candidate rates as differences of this counter on cloned engine
state.

Stream layout: renormalization bits, then the 32 bits of the final `high`
register, then 32 zero slack bits so the decoder's 32-bit lookahead never
starves on a well-formed stream. Reading past the end raises, with the bit
position, on truncated input.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .errors import BitstreamError

PROB_BITS = 16
PROB_ONE = 1 << PROB_BITS
PROB_INIT = PROB_ONE // 2
ADAPT_SHIFT = 5

_TOP = 1 << 32
_HALF = _TOP >> 1
_QUARTER = _TOP >> 2
_THREEQ = _HALF + _QUARTER

# Encoder/decoder state array indices (int64 arrays).
ST_LOW = 0
ST_HIGH = 1
ST_PENDING = 2     # encoder: carry-pending bits
ST_VALUE = 2       # decoder: 32-bit lookahead window
ST_BITS = 3        # encoder: exact payload bits so far; decoder: read cursor
ST_POS = 4         # encoder: write cursor (bits); decoder: available bits
ST_FLAGS = 5       # bit 0: encoder writes to buffer / decoder overran input
NSTATE = 6

WRITE_BIT = 1
ERR_BIT = 1


@njit(cache=True)
def enc_init(state, write):
    state[ST_LOW] = 0
    state[ST_HIGH] = _TOP - 1
    state[ST_PENDING] = 0
    state[ST_BITS] = 0
    state[ST_POS] = 0
    state[ST_FLAGS] = WRITE_BIT if write else 0


@njit(cache=True, inline="always")
def _put_bit(state, buf, bit):
    if state[ST_FLAGS] & WRITE_BIT:
        pos = state[ST_POS]
        if (pos >> 3) >= buf.shape[0]:
            state[ST_FLAGS] |= 2  # overflow; caller grows the buffer and retries
            return
        if bit:
            buf[pos >> 3] |= np.uint8(1 << (7 - (pos & 7)))
        state[ST_POS] = pos + 1


@njit(cache=True, inline="always")
def _emit(state, buf, bit):
    _put_bit(state, buf, bit)
    inv = 1 - bit
    while state[ST_PENDING] > 0:
        _put_bit(state, buf, inv)
        state[ST_PENDING] -= 1


@njit(cache=True, inline="always")
def _renorm_enc(state, buf):
    low = state[ST_LOW]
    high = state[ST_HIGH]
    while True:
        if high < _HALF:
            state[ST_BITS] += 1
            _emit(state, buf, 0)
        elif low >= _HALF:
            state[ST_BITS] += 1
            _emit(state, buf, 1)
            low -= _HALF
            high -= _HALF
        elif low >= _QUARTER and high < _THREEQ:
            state[ST_BITS] += 1  # carry-pending, resolves to exactly one bit
            state[ST_PENDING] += 1
            low -= _QUARTER
            high -= _QUARTER
        else:
            break
        low <<= 1
        high = (high << 1) | 1
    state[ST_LOW] = low
    state[ST_HIGH] = high


@njit(cache=True, inline="always")
def _split(low, high, p1):
    # Last value of the 0-branch. p1 stays in (0, 65536) by adaptation bounds.
    span = high - low + 1
    mid = low + ((span * (PROB_ONE - p1)) >> PROB_BITS) - 1
    if mid < low:
        mid = low
    elif mid >= high:
        mid = high - 1
    return mid


@njit(cache=True, inline="always")
def enc_bin(state, buf, ctx, ctx_id, bit):
    p1 = np.int64(ctx[ctx_id])
    mid = _split(state[ST_LOW], state[ST_HIGH], p1)
    if bit:
        state[ST_LOW] = mid + 1
        ctx[ctx_id] = np.uint32(p1 + ((PROB_ONE - p1) >> ADAPT_SHIFT))
    else:
        state[ST_HIGH] = mid
        ctx[ctx_id] = np.uint32(p1 - (p1 >> ADAPT_SHIFT))
    _renorm_enc(state, buf)


@njit(cache=True, inline="always")
def enc_bypass(state, buf, bit):
    mid = _split(state[ST_LOW], state[ST_HIGH], PROB_INIT)
    if bit:
        state[ST_LOW] = mid + 1
    else:
        state[ST_HIGH] = mid
    _renorm_enc(state, buf)


@njit(cache=True)
def enc_eg0(state, buf, value):
    # Exp-Golomb order 0: n zeros, then the n+1 significant bits of value+1.
    b = value + 1
    n = 0
    t = b
    while t > 1:
        t >>= 1
        n += 1
    for _ in range(n):
        enc_bypass(state, buf, 0)
    i = n
    while i >= 0:
        enc_bypass(state, buf, (b >> i) & 1)
        i -= 1


@njit(cache=True)
def enc_flush(state, buf):
    # Emit the full remaining register, then 32 slack bits of decoder lookahead.
    high = state[ST_HIGH]
    i = 31
    while i >= 0:
        state[ST_BITS] += 1
        _emit(state, buf, (high >> i) & 1)
        i -= 1
    for _ in range(32):
        _put_bit(state, buf, 0)


@njit(cache=True)
def dec_init(state, buf, nbits):
    state[ST_LOW] = 0
    state[ST_HIGH] = _TOP - 1
    state[ST_BITS] = 0
    state[ST_POS] = nbits
    state[ST_FLAGS] = 0
    value = 0
    for _ in range(32):
        value = (value << 1) | _read_bit(state, buf)
    state[ST_VALUE] = value


@njit(cache=True, inline="always")
def _read_bit(state, buf):
    pos = state[ST_BITS]
    if pos >= state[ST_POS]:
        state[ST_FLAGS] |= ERR_BIT
        return 0
    state[ST_BITS] = pos + 1
    return (buf[pos >> 3] >> (7 - (pos & 7))) & 1


@njit(cache=True, inline="always")
def _renorm_dec(state, buf):
    low = state[ST_LOW]
    high = state[ST_HIGH]
    value = state[ST_VALUE]
    while True:
        if high < _HALF:
            pass
        elif low >= _HALF:
            low -= _HALF
            high -= _HALF
            value -= _HALF
        elif low >= _QUARTER and high < _THREEQ:
            low -= _QUARTER
            high -= _QUARTER
            value -= _QUARTER
        else:
            break
        low <<= 1
        high = (high << 1) | 1
        value = (value << 1) | _read_bit(state, buf)
    state[ST_LOW] = low
    state[ST_HIGH] = high
    state[ST_VALUE] = value


@njit(cache=True, inline="always")
def dec_bin(state, buf, ctx, ctx_id):
    p1 = np.int64(ctx[ctx_id])
    mid = _split(state[ST_LOW], state[ST_HIGH], p1)
    if state[ST_VALUE] > mid:
        bit = 1
        state[ST_LOW] = mid + 1
        ctx[ctx_id] = np.uint32(p1 + ((PROB_ONE - p1) >> ADAPT_SHIFT))
    else:
        bit = 0
        state[ST_HIGH] = mid
        ctx[ctx_id] = np.uint32(p1 - (p1 >> ADAPT_SHIFT))
    _renorm_dec(state, buf)
    return bit


@njit(cache=True, inline="always")
def dec_bypass(state, buf):
    mid = _split(state[ST_LOW], state[ST_HIGH], PROB_INIT)
    if state[ST_VALUE] > mid:
        bit = 1
        state[ST_LOW] = mid + 1
    else:
        bit = 0
        state[ST_HIGH] = mid
    _renorm_dec(state, buf)
    return bit


@njit(cache=True)
def dec_eg0(state, buf):
    n = 0
    while dec_bypass(state, buf) == 0:
        n += 1
        if n > 40:
            state[ST_FLAGS] |= ERR_BIT
            return 0
    b = 1
    for _ in range(n):
        b = (b << 1) | dec_bypass(state, buf)
    return b - 1


def new_contexts(n: int) -> np.ndarray:
    return np.full(n, PROB_INIT, dtype=np.uint32)


def new_state() -> np.ndarray:
    return np.zeros(NSTATE, dtype=np.int64)


class BinaryArithmeticEncoder:
    """Convenience wrapper over the encoder kernels."""

    def __init__(self, n_contexts: int = 1, capacity: int = 1 << 16):
        self.ctx = new_contexts(n_contexts)
        self.state = new_state()
        self.buf = np.zeros(capacity, dtype=np.uint8)
        enc_init(self.state, 1)
        self._finished = False

    def _room(self, bits_coming: int) -> None:
        need = (self.state[ST_POS] + self.state[ST_PENDING] + bits_coming + 7) // 8 + 8
        if need > self.buf.shape[0]:
            grown = np.zeros(max(need, 2 * self.buf.shape[0]), dtype=np.uint8)
            grown[: self.buf.shape[0]] = self.buf
            self.buf = grown

    def encode_bin(self, ctx_id: int, bit: int) -> None:
        self._room(48)
        enc_bin(self.state, self.buf, self.ctx, ctx_id, 1 if bit else 0)

    def encode_bypass(self, bit: int) -> None:
        self._room(48)
        enc_bypass(self.state, self.buf, 1 if bit else 0)

    def encode_eg0(self, value: int) -> None:
        if value < 0:
            raise ValueError("Exp-Golomb operand must be >= 0")
        self._room(160)
        enc_eg0(self.state, self.buf, value)

    @property
    def bits_total(self) -> int:
        return int(self.state[ST_BITS])

    def finish(self) -> bytes:
        if self._finished:
            raise RuntimeError("finish() called twice")
        self._room(128)
        enc_flush(self.state, self.buf)
        self._finished = True
        nbytes = (int(self.state[ST_POS]) + 7) // 8
        return bytes(self.buf[:nbytes])


class BinaryArithmeticDecoder:
    """Convenience wrapper over the decoder kernels."""

    def __init__(self, data: bytes, n_contexts: int = 1):
        self.ctx = new_contexts(n_contexts)
        self.state = new_state()
        self.buf = np.frombuffer(bytes(data), dtype=np.uint8).copy()
        dec_init(self.state, self.buf, len(data) * 8)
        self._check()

    def _check(self) -> None:
        if self.state[ST_FLAGS] & ERR_BIT:
            raise BitstreamError(
                f"truncated stream: read past end at bit {int(self.state[ST_BITS])}",
                position=int(self.state[ST_BITS]),
            )

    def decode_bin(self, ctx_id: int) -> int:
        bit = int(dec_bin(self.state, self.buf, self.ctx, ctx_id))
        self._check()
        return bit

    def decode_bypass(self) -> int:
        bit = int(dec_bypass(self.state, self.buf))
        self._check()
        return bit

    def decode_eg0(self) -> int:
        v = int(dec_eg0(self.state, self.buf))
        self._check()
        return v
