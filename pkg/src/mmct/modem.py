"""Gray-mapped square QAM with unit average symbol energy.

Bit convention, fixed for all orders: each symbol consumes
``order`` bits, MSB first. Even bit positions (0, 2, ...) form the I-axis
word, odd positions the Q-axis word, each read MSB first. A k-bit axis
word v selects amplitude (2^k - 1) - 2 * gray_decode(v) from the odd
levels {+-1, ..., +-(2^k - 1)}, then the symbol is scaled by
1/sqrt(2 * (4^k - 1) / 3) for unit average energy. Adjacent amplitudes
differ in exactly one bit, and all-zero bits map to the positive corner,
e.g. QPSK 00 -> (1 + 1j)/sqrt(2).
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import FramingError, ValidationError

__all__ = [
    "SUPPORTED_ORDERS",
    "constellation",
    "modulate",
    "demodulate_hard",
    "llrs_maxlog",
]

SUPPORTED_ORDERS = (2, 4, 6, 8)  # QPSK, 16QAM, 64QAM, 256QAM


def _check_order(order: int) -> int:
    if order not in SUPPORTED_ORDERS:
        raise ValidationError(
            f"modulation order {order} not in {SUPPORTED_ORDERS}"
        )
    return order // 2  # bits per axis


def _gray_decode(v: np.ndarray) -> np.ndarray:
    out = v.copy()
    shift = 1
    while shift < 8:
        out ^= out >> shift
        shift *= 2
    return out


@lru_cache(maxsize=None)
def _axis_tables(k: int):
    """(amplitudes by axis word, axis scale) for k bits per axis."""
    n = 1 << k
    words = np.arange(n)
    amps = (n - 1) - 2 * _gray_decode(words)
    scale = np.sqrt(2.0 * (n * n - 1) / 3.0)
    amps = amps.astype(np.float64)
    amps.setflags(write=False)
    return amps, scale


@lru_cache(maxsize=None)
def constellation(order: int) -> np.ndarray:
    """Symbol lookup table indexed by the order-bit word (MSB first)."""
    k = _check_order(order)
    amps, scale = _axis_tables(k)
    idx = np.arange(1 << order)
    i_word = np.zeros_like(idx)
    q_word = np.zeros_like(idx)
    for pos in range(order):  # pos 0 = MSB of the symbol word
        bit = (idx >> (order - 1 - pos)) & 1
        if pos % 2 == 0:
            i_word = (i_word << 1) | bit
        else:
            q_word = (q_word << 1) | bit
    points = (amps[i_word] + 1j * amps[q_word]) / scale
    points.setflags(write=False)
    return points


def _pack_bits(bits: np.ndarray, order: int) -> np.ndarray:
    if bits.size % order != 0:
        raise FramingError(
            f"{bits.size} bits do not frame into {order}-bit symbols"
        )
    groups = bits.reshape(-1, order).astype(np.int64)
    weights = 1 << np.arange(order - 1, -1, -1)
    return groups @ weights


def modulate(bits, order: int) -> np.ndarray:
    """Map a 0/1 bit sequence to unit-energy Gray QAM symbols."""
    _check_order(order)
    bits = np.asarray(bits)
    if bits.size and not np.all((bits == 0) | (bits == 1)):
        raise ValidationError("bits must be 0/1")
    return constellation(order)[_pack_bits(bits, order)]


def _axis_words(values: np.ndarray, k: int) -> np.ndarray:
    """Nearest-level axis words for real coordinates (already rescaled)."""
    n = 1 << k
    # level index by amplitude descending: amp_i = (n-1) - 2i
    idx = np.clip(np.round(((n - 1) - values) / 2.0).astype(np.int64), 0, n - 1)
    return idx ^ (idx >> 1)  # Gray-encode back to the axis word


def demodulate_hard(symbols, order: int) -> np.ndarray:
    """Nearest-symbol decision back to bits; inverse of modulate when clean."""
    k = _check_order(order)
    symbols = np.asarray(symbols, dtype=np.complex128)
    _, scale = _axis_tables(k)
    i_word = _axis_words(symbols.real * scale, k)
    q_word = _axis_words(symbols.imag * scale, k)
    bits = np.empty((symbols.size, order), dtype=np.uint8)
    for pos in range(order):
        word, j = (i_word, pos // 2) if pos % 2 == 0 else (q_word, pos // 2)
        bits[:, pos] = (word >> (k - 1 - j)) & 1
    return bits.reshape(-1)


def llrs_maxlog(symbols, order: int, noise_var) -> np.ndarray:
    """Max-log LLRs, positive for bit 0, ``order`` values per symbol.

    ``noise_var`` is the complex noise variance per symbol (scalar or
    per-symbol array). Gray square QAM splits per axis, so the per-axis
    max-log metric equals the full-constellation one.
    """
    k = _check_order(order)
    symbols = np.asarray(symbols, dtype=np.complex128)
    nv = np.broadcast_to(np.asarray(noise_var, dtype=np.float64), symbols.shape)
    if np.any(nv <= 0):
        raise ValidationError("noise variance must be positive")
    amps, scale = _axis_tables(k)
    levels = amps / scale
    n_levels = levels.size
    words = np.arange(n_levels)

    out = np.empty((symbols.size, order), dtype=np.float64)
    for axis, coords in ((0, symbols.real), (1, symbols.imag)):
        # squared distance to every axis level: (n_symbols, n_levels)
        d2 = (coords[:, None] - levels[None, :]) ** 2
        for j in range(k):
            bit = (words >> (k - 1 - j)) & 1
            d0 = np.min(np.where(bit == 0, d2, np.inf), axis=1)
            d1 = np.min(np.where(bit == 1, d2, np.inf), axis=1)
            out[:, 2 * j + axis] = (d1 - d0) / nv
    return out.reshape(-1)
