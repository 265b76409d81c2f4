"""Comparison waveform families: MIMO-radar OFDM and zero-shift orthogonal sets."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .modulation import Constellation, SymbolFrame
from .waveforms import WaveformSet

__all__ = ["Allocation", "OfdmPlan", "ofdm_plan", "generate_ofdm_set", "generate_zero_shift_set"]


class Allocation(str, enum.Enum):
    INTERLEAVED = "interleaved"
    CONTIGUOUS = "contiguous"


@dataclass(frozen=True)
class OfdmPlan:
    """Disjoint subcarrier indices per antenna (FFT bin order)."""

    K: int
    subcarriers: tuple[tuple[int, ...], ...]
    allocation: Allocation

    def __post_init__(self):
        object.__setattr__(self, "allocation", Allocation(self.allocation))
        seen = set()
        for idx in self.subcarriers:
            if seen.intersection(idx):
                raise ValueError("subcarrier assignments overlap")
            if any(i < 0 or i >= self.K for i in idx):
                raise ValueError("subcarrier index outside 0..K-1")
            seen.update(idx)

    @property
    def per_antenna(self) -> int:
        return len(self.subcarriers[0])


def ofdm_plan(K: int, N: int, allocation: Allocation | str = Allocation.INTERLEAVED) -> OfdmPlan:
    """Split ``K`` subcarriers among ``N`` antennas, dropping the remainder.

    Contiguous blocks are laid out in increasing baseband frequency so that
    antenna 0 takes the lowest sub-band.
    """
    allocation = Allocation(allocation)
    if N < 1 or N > K:
        raise ValueError(f"need 1 <= N <= K, got N={N}, K={K}")
    per = K // N
    if allocation is Allocation.INTERLEAVED:
        sets = [n + N * np.arange(per) for n in range(N)]
    else:
        freq_order = np.fft.ifftshift(np.arange(K))  # bin indices sorted by frequency
        sets = [freq_order[n * per:(n + 1) * per] for n in range(N)]
    return OfdmPlan(K, tuple(tuple(int(i) for i in np.sort(s)) for s in sets), allocation)


def generate_ofdm_set(K: int, N: int, frames: Optional[Sequence[SymbolFrame]] = None,
                      allocation: Allocation | str = Allocation.INTERLEAVED,
                      constellation: Constellation | str = Constellation.QAM16,
                      seed: int = 0, plan: Optional[OfdmPlan] = None) -> WaveformSet:
    """One OFDM symbol per antenna on disjoint subcarriers, no cyclic prefix.

    Each waveform is the unitary IDFT of its symbols placed on its own bins and
    is normalized to unit energy. Disjoint spectra make the set orthogonal at
    every lag of the periodic correlation; without a cyclic prefix the aperiodic
    correlation at nonzero lags is not zero.
    """
    plan = plan or ofdm_plan(K, N, allocation)
    rng = np.random.default_rng(seed)
    if frames is None:
        frames = [SymbolFrame.random(plan.per_antenna, constellation, rng) for _ in range(N)]
    waves, scales = [], []
    for n in range(N):
        idx = plan.subcarriers[n]
        sym = np.asarray(frames[n].symbols)
        if sym.size > len(idx):
            raise ValueError(f"antenna {n + 1}: {sym.size} symbols for {len(idx)} subcarriers")
        X = np.zeros(K, dtype=complex)
        X[list(idx[:sym.size])] = sym
        s = np.fft.ifft(X, norm="ortho")
        e = np.linalg.norm(s)
        waves.append(s / e)
        scales.append(1.0 / e)
    return WaveformSet(
        waveforms=np.array(waves), family="ofdm", capacities=tuple(len(f) for f in frames),
        scales=tuple(scales), seed=seed,
        extra={"allocation": plan.allocation.value, "subcarriers": [list(s) for s in plan.subcarriers],
               "constellation": Constellation(frames[0].constellation).value},
        frames=tuple(frames))


def generate_zero_shift_set(K: int, N: int, seed: int = 0, constant_modulus: bool = False) -> WaveformSet:
    """Full-band unit-energy sequences orthogonal at lag 0 only; no data.

    The default orthonormalizes a seeded complex Gaussian ``K x N`` matrix. With
    ``constant_modulus`` a common random-phase sequence modulates distinct DFT
    tones instead, which keeps ``|s[k]| = 1/sqrt(K)``.
    """
    if N > K:
        raise ValueError(f"cannot build {N} orthogonal sequences of length {K}")
    rng = np.random.default_rng(seed)
    if constant_modulus:
        phase = np.exp(2j * np.pi * rng.random(K))
        k = np.arange(K)
        waves = phase[None, :] * np.exp(2j * np.pi * np.outer(np.arange(N), k) / K) / np.sqrt(K)
    else:
        g = (rng.standard_normal((K, N)) + 1j * rng.standard_normal((K, N))) / np.sqrt(2)
        q, _ = np.linalg.qr(g)
        waves = q.T
    return WaveformSet(waveforms=waves, family="zero_shift", capacities=(0,) * N,
                       scales=(1.0,) * N, seed=seed, extra={"constant_modulus": constant_modulus})
