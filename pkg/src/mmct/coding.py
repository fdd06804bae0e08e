"""Rate-flexible convolutional codec with CRC-16 error detection.

A constraint-length-7 rate-1/3 mother code (generators 133, 171, 165
octal) is punctured to the working rate by keeping an evenly spread subset
of the mother bits; repetition (rate < 1/3) falls out of the same index
map. Blocks are terminated with 6 tail zeros, decoded by soft Viterbi on
max-log LLRs (positive = bit 0), and carry a 16-bit CRC
(poly 0x1021, init 0xFFFF) for error detection.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .errors import ConfigurationError, ValidationError

__all__ = [
    "CRC_BITS",
    "TAIL_BITS",
    "OVERHEAD_BITS",
    "RATE_RANGE",
    "payload_capacity",
    "crc16",
    "crc16_check",
    "encode",
    "decode",
]

GENERATORS = (0o133, 0o171, 0o165)
CONSTRAINT_LENGTH = 7
N_STATES = 1 << (CONSTRAINT_LENGTH - 1)
TAIL_BITS = CONSTRAINT_LENGTH - 1
CRC_BITS = 16
OVERHEAD_BITS = CRC_BITS + TAIL_BITS
CRC_POLY = 0x1021
CRC_INIT = 0xFFFF
RATE_RANGE = (1.0 / 4.0, 0.95)


def _build_trellis():
    """next_state[s, b] and +-1 output signs per (state, input, generator)."""
    gens = np.array(GENERATORS, dtype=np.int64)
    next_state = np.empty((N_STATES, 2), dtype=np.int64)
    out_sign = np.empty((N_STATES, 2, 3), dtype=np.float64)
    for s in range(N_STATES):
        for b in (0, 1):
            window = (b << (CONSTRAINT_LENGTH - 1)) | s  # newest bit at MSB
            next_state[s, b] = window >> 1
            for j, g in enumerate(gens):
                parity = bin(window & int(g)).count("1") & 1
                out_sign[s, b, j] = 1.0 - 2.0 * parity
    return next_state, out_sign


_NEXT_STATE, _OUT_SIGN = _build_trellis()
_GEN_TAPS = np.array(
    [[(g >> (CONSTRAINT_LENGTH - 1 - i)) & 1 for i in range(CONSTRAINT_LENGTH)] for g in GENERATORS],
    dtype=np.uint8,
)


@njit(cache=True)
def _crc16_update(bits, init):
    reg = init
    for b in bits:
        reg ^= int(b) << 15
        if reg & 0x8000:
            reg = ((reg << 1) ^ CRC_POLY) & 0xFFFF
        else:
            reg = (reg << 1) & 0xFFFF
    return reg


def crc16(bits) -> np.ndarray:
    """16 CRC bits (MSB first) over a 0/1 sequence."""
    bits = np.ascontiguousarray(np.asarray(bits, dtype=np.uint8))
    reg = int(_crc16_update(bits, CRC_INIT))
    return np.array([(reg >> (15 - i)) & 1 for i in range(16)], dtype=np.uint8)


def crc16_check(bits_with_crc) -> bool:
    bits = np.asarray(bits_with_crc, dtype=np.uint8)
    if bits.size < CRC_BITS:
        return False
    return bool(np.array_equal(crc16(bits[:-CRC_BITS]), bits[-CRC_BITS:]))


def _selection(mother_len: int, block_len: int) -> np.ndarray:
    """Evenly spread kept-bit indices; repeats indices when block > mother."""
    return (np.arange(block_len, dtype=np.int64) * mother_len) // block_len


def _validate_rate(code_rate: float) -> None:
    lo, hi = RATE_RANGE
    if not lo <= code_rate <= hi:
        raise ConfigurationError(
            f"code rate {code_rate} unsupported, must be in [{lo:.3f}, {hi}]"
        )


def payload_capacity(block_len: int, code_rate: float) -> int:
    """Information bits a codeword of ``block_len`` channel bits can carry."""
    _validate_rate(code_rate)
    if block_len < 1:
        raise ConfigurationError(f"block length must be positive, got {block_len}")
    info = int(np.floor(block_len * code_rate)) - OVERHEAD_BITS
    if info < 1:
        raise ConfigurationError(
            f"block of {block_len} channel bits at rate {code_rate} leaves "
            f"{info} information bits after {OVERHEAD_BITS} overhead bits"
        )
    return info


def _conv_encode(u: np.ndarray) -> np.ndarray:
    """Mother coded bits, 3 per step, for an already-terminated input."""
    streams = [np.convolve(u, taps)[: u.size] % 2 for taps in _GEN_TAPS]
    return np.stack(streams, axis=1).reshape(-1).astype(np.uint8)


def encode(bits, code_rate: float, block_len: int) -> np.ndarray:
    """CRC-attach, terminate, convolutionally encode, puncture to length."""
    bits = np.asarray(bits, dtype=np.uint8)
    expected = payload_capacity(block_len, code_rate)
    if bits.size != expected:
        raise ConfigurationError(
            f"got {bits.size} information bits, but {block_len} channel bits "
            f"at rate {code_rate} carry exactly {expected}"
        )
    u = np.concatenate([bits, crc16(bits), np.zeros(TAIL_BITS, dtype=np.uint8)])
    mother = _conv_encode(u)
    return mother[_selection(mother.size, block_len)]


@njit(cache=True)
def _viterbi(branch_llrs, next_state, out_sign):
    """Terminated-trellis soft Viterbi; maximizes sum sign * llr."""
    steps = branch_llrs.shape[0]
    neg = -1e300
    pm = np.full(N_STATES, neg)
    pm[0] = 0.0
    prev = np.zeros((steps, N_STATES), dtype=np.uint8)
    new = np.empty(N_STATES)
    for t in range(steps):
        l0 = branch_llrs[t, 0]
        l1 = branch_llrs[t, 1]
        l2 = branch_llrs[t, 2]
        new[:] = neg
        for s in range(N_STATES):
            m = pm[s]
            if m <= -1e299:
                continue
            for b in range(2):
                ns = next_state[s, b]
                v = (
                    m
                    + out_sign[s, b, 0] * l0
                    + out_sign[s, b, 1] * l1
                    + out_sign[s, b, 2] * l2
                )
                if v > new[ns]:
                    new[ns] = v
                    prev[t, ns] = s
        pm[:] = new
    bits = np.empty(steps, dtype=np.uint8)
    s = 0  # terminated: the path must end in the zero state
    for t in range(steps - 1, -1, -1):
        bits[t] = s >> (CONSTRAINT_LENGTH - 2)
        s = prev[t, s]
    return bits


def decode(llrs, code_rate: float, info_len: int) -> tuple[np.ndarray, bool]:
    """Soft-decode a punctured block back to information bits.

    ``llrs`` uses the positive-means-bit-0 convention; punctured positions
    contribute nothing and repeated positions combine additively. Returns
    the decoded information bits and the CRC verdict.
    """
    llrs = np.asarray(llrs, dtype=np.float64)
    if llrs.ndim != 1:
        raise ValidationError("llrs must be a 1-D array")
    if payload_capacity(llrs.size, code_rate) != info_len:
        raise ConfigurationError(
            f"{llrs.size} channel bits at rate {code_rate} do not carry "
            f"{info_len} information bits"
        )
    steps = info_len + OVERHEAD_BITS
    mother = np.zeros(3 * steps, dtype=np.float64)
    np.add.at(mother, _selection(mother.size, llrs.size), llrs)
    decoded = _viterbi(mother.reshape(steps, 3), _NEXT_STATE, _OUT_SIGN)
    info_crc = decoded[: steps - TAIL_BITS]
    return info_crc[:info_len].copy(), crc16_check(info_crc)
