"""Gray-mapped QPSK and 16-QAM with unit average symbol energy.

Mapping tables (bits are read most-significant first):

QPSK, one bit per axis, in-phase first::

    0 -> +1,  1 -> -1              (scaled by 1/sqrt(2))

16-QAM, two bits per axis, the first pair drives the in-phase level::

    00 -> -3,  01 -> -1,  11 -> +1,  10 -> +3    (scaled by 1/sqrt(10))

so ``0000 -> (-3-3j)/sqrt(10)`` and ``00 -> (1+1j)/sqrt(2)``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

__all__ = ["Constellation", "SymbolFrame", "map_bits_to_symbols", "demap_symbols",
           "random_bits", "bits_per_symbol", "constellation_points"]


class Constellation(str, enum.Enum):
    QPSK = "qpsk"
    QAM16 = "qam16"


_QPSK_LEVELS = np.array([1.0, -1.0])
_QAM16_LEVELS = np.array([-3.0, -1.0, 3.0, 1.0])  # index = 2-bit Gray label


def bits_per_symbol(constellation: Constellation | str) -> int:
    return 2 if Constellation(constellation) is Constellation.QPSK else 4


def map_bits_to_symbols(bits, constellation: Constellation | str = Constellation.QAM16) -> np.ndarray:
    """Map a bit string (array of 0/1) onto constellation points."""
    constellation = Constellation(constellation)
    bits = np.asarray(bits, dtype=np.int64).ravel()
    bps = bits_per_symbol(constellation)
    if bits.size % bps:
        raise ValueError(f"bit count {bits.size} not divisible by {bps} bits per symbol")
    if np.any((bits != 0) & (bits != 1)):
        raise ValueError("bits must be 0 or 1")
    b = bits.reshape(-1, bps)
    if constellation is Constellation.QPSK:
        return (_QPSK_LEVELS[b[:, 0]] + 1j * _QPSK_LEVELS[b[:, 1]]) / np.sqrt(2)
    i_idx = 2 * b[:, 0] + b[:, 1]
    q_idx = 2 * b[:, 2] + b[:, 3]
    return (_QAM16_LEVELS[i_idx] + 1j * _QAM16_LEVELS[q_idx]) / np.sqrt(10)


def constellation_points(constellation: Constellation | str) -> tuple[np.ndarray, np.ndarray]:
    """All points and their bit labels (rows), in label order."""
    bps = bits_per_symbol(constellation)
    labels = ((np.arange(2 ** bps)[:, None] >> np.arange(bps - 1, -1, -1)) & 1)
    return map_bits_to_symbols(labels.ravel(), constellation), labels


def demap_symbols(symbols, constellation: Constellation | str = Constellation.QAM16):
    """Hard nearest-point decision. Returns ``(points, bits)``."""
    symbols = np.asarray(symbols, dtype=complex).ravel()
    points, labels = constellation_points(constellation)
    idx = np.argmin(np.abs(symbols[:, None] - points[None, :]), axis=1)
    return points[idx], labels[idx].ravel()


def random_bits(n_symbols: int, constellation: Constellation | str, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, 2, size=n_symbols * bits_per_symbol(constellation), dtype=np.int64)


@dataclass(frozen=True)
class SymbolFrame:
    """Symbols carried by one antenna together with the bits they encode."""

    symbols: np.ndarray
    constellation: Constellation
    bits: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "constellation", Constellation(self.constellation))

    @classmethod
    def from_bits(cls, bits, constellation: Constellation | str = Constellation.QAM16) -> "SymbolFrame":
        constellation = Constellation(constellation)
        bits = np.asarray(bits, dtype=np.int64).ravel()
        return cls(map_bits_to_symbols(bits, constellation), constellation, bits)

    @classmethod
    def random(cls, n_symbols: int, constellation: Constellation | str,
               rng: np.random.Generator) -> "SymbolFrame":
        return cls.from_bits(random_bits(n_symbols, constellation, rng), constellation)

    def __len__(self) -> int:
        return len(self.symbols)
