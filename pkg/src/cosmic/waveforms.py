"""Complex-sequence primitives shared by every waveform family.

Lag convention used throughout the package: the cross-correlation of ``s``
against ``x`` at lag ``l`` is ``sum_k conj(s[k]) * x[k + l]`` with samples
outside ``[0, K)`` treated as zero (aperiodic correlation).
"""
from __future__ import annotations

import enum
import functools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import hadamard

__all__ = [
    "BasisFamily", "PartitionStrategy", "ZoneMode",
    "CrossCorrelationMatrix", "MasterBasis", "SubBasis", "WaveformSet",
    "build_crosscorr_matrix", "crosscorr", "build_master_basis",
    "partition_subbases", "zone_lags", "zone_residual", "max_pair_residual",
]

UNITARY_TOL = 1e-10


class BasisFamily(str, enum.Enum):
    RANDOM_UNITARY = "random_unitary"
    INVERSE_DFT = "inverse_dft"
    HADAMARD = "hadamard"


class PartitionStrategy(str, enum.Enum):
    CONTIGUOUS = "contiguous"
    STRIDED = "strided"


class ZoneMode(str, enum.Enum):
    """Which lags the zero-correlation zone covers.

    ``PAPER_LITERAL`` constrains lags ``[0, K_z - 1]``; ``SYMMETRIC`` constrains
    ``[-(K_z - 1), K_z - 1]``.
    """

    PAPER_LITERAL = "paper_literal"
    SYMMETRIC = "symmetric"


def zone_lags(K_z: int, mode: ZoneMode | str = ZoneMode.PAPER_LITERAL) -> tuple[int, int]:
    """Inclusive lag window ``(l_min, l_max)`` for a zone of ``K_z`` samples."""
    if K_z < 1:
        raise ValueError(f"zone length must be >= 1, got {K_z}")
    mode = ZoneMode(mode)
    if mode is ZoneMode.SYMMETRIC:
        return -(K_z - 1), K_z - 1
    return 0, K_z - 1


@dataclass(frozen=True)
class CrossCorrelationMatrix:
    """Lag-indexed correlation operator of one sequence.

    ``rows[i]`` corresponds to lag ``lag_window[0] + i``; ``rows @ x`` gives the
    cross-correlation of the source sequence against ``x`` over the window.
    """

    rows: np.ndarray
    lag_window: tuple[int, int]
    source_length: int

    @property
    def lags(self) -> np.ndarray:
        return np.arange(self.lag_window[0], self.lag_window[1] + 1)

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.rows @ np.asarray(x)


def build_crosscorr_matrix(s, lag_window: Optional[tuple[int, int]] = None) -> CrossCorrelationMatrix:
    """Build the correlation (convolution) matrix of ``s`` restricted to a lag window.

    The full window ``[-(K-1), K-1]`` gives the ``(2K-1) x K`` matrix built from
    the time-reversed conjugate of ``s``.
    """
    s = np.asarray(s, dtype=complex)
    if s.ndim != 1 or s.size < 1:
        raise ValueError("sequence must be a non-empty 1-D array")
    if not np.all(np.isfinite(s)):
        raise ValueError("sequence contains non-finite values")
    K = s.size
    if lag_window is None:
        lag_window = (-(K - 1), K - 1)
    lo, hi = int(lag_window[0]), int(lag_window[1])
    if lo > hi or lo < -(K - 1) or hi > K - 1:
        raise ValueError(f"lag window {lag_window} outside valid range [{-(K - 1)}, {K - 1}]")
    lags = np.arange(lo, hi + 1)
    # rows[i, j] = conj(s[j - l_i]) where 0 <= j - l_i < K
    src = np.arange(K)[None, :] - lags[:, None]
    valid = (src >= 0) & (src < K)
    rows = np.zeros((lags.size, K), dtype=complex)
    rows[valid] = np.conj(s[src[valid]])
    return CrossCorrelationMatrix(rows=rows, lag_window=(lo, hi), source_length=K)


def crosscorr(s, x, lag_window: tuple[int, int], periodic: bool = False) -> np.ndarray:
    """FFT cross-correlation ``sum_k conj(s[k]) x[k+l]`` for ``l`` in the window.

    ``s`` and ``x`` may be stacked along leading axes; they broadcast. With
    ``periodic`` the index ``k + l`` wraps modulo the common length instead of
    running off the end.
    """
    s = np.asarray(s, dtype=complex)
    x = np.asarray(x, dtype=complex)
    Ks, Kx = s.shape[-1], x.shape[-1]
    if periodic:
        if Ks != Kx:
            raise ValueError("periodic correlation needs equal lengths")
        nfft = Ks
    else:
        nfft = int(2 ** np.ceil(np.log2(Ks + Kx - 1)))
    spec = np.conj(np.fft.fft(s, nfft)) * np.fft.fft(x, nfft)
    full = np.fft.ifft(spec)
    lags = np.arange(lag_window[0], lag_window[1] + 1)
    return full[..., lags % nfft]


@dataclass(frozen=True)
class MasterBasis:
    columns: np.ndarray
    family: BasisFamily
    seed: Optional[int] = None

    @property
    def K(self) -> int:
        return self.columns.shape[0]


def build_master_basis(K: int, family: BasisFamily | str = BasisFamily.RANDOM_UNITARY,
                       seed: int = 0) -> MasterBasis:
    """Construct a ``K x K`` unitary master matrix.

    ``random_unitary`` orthonormalizes a seeded complex Gaussian matrix (Haar
    distributed after the diagonal phase fix); ``inverse_dft`` is the unitary
    IDFT with entry ``exp(+2j*pi*r*c/K)/sqrt(K)``; ``hadamard`` requires ``K`` to
    be a power of two.
    """
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    family = BasisFamily(family)
    if family is not BasisFamily.RANDOM_UNITARY:
        seed = None
    return MasterBasis(columns=_master_columns(K, family, seed), family=family, seed=seed)


@functools.lru_cache(maxsize=16)
def _master_columns(K: int, family: BasisFamily, seed: Optional[int]) -> np.ndarray:
    if family is BasisFamily.RANDOM_UNITARY:
        rng = np.random.default_rng(seed)
        g = (rng.standard_normal((K, K)) + 1j * rng.standard_normal((K, K))) / np.sqrt(2)
        q, r = np.linalg.qr(g)
        d = np.diag(r)
        cols = q * (d / np.abs(d))[None, :]
    elif family is BasisFamily.INVERSE_DFT:
        n = np.arange(K)
        cols = np.exp(2j * np.pi * np.outer(n, n) / K) / np.sqrt(K)
    else:
        if K & (K - 1):
            raise ValueError(f"Hadamard basis needs K to be a power of two, got {K}")
        cols = hadamard(K).astype(complex) / np.sqrt(K)
    cols.setflags(write=False)
    return cols


@dataclass(frozen=True)
class SubBasis:
    columns: np.ndarray
    column_indices: tuple[int, ...]
    antenna_index: int

    @property
    def K_s(self) -> int:
        return len(self.column_indices)


def partition_subbases(C: MasterBasis, N: int, K_s: int,
                       strategy: PartitionStrategy | str = PartitionStrategy.CONTIGUOUS) -> list[SubBasis]:
    """Split the master columns into ``N`` disjoint sets of ``K_s`` columns."""
    K = C.K
    if N < 1 or K_s < 1:
        raise ValueError("N and K_s must be positive")
    if N * K_s > K:
        raise ValueError(f"infeasible partition: N*K_s = {N * K_s} exceeds K = {K}")
    strategy = PartitionStrategy(strategy)
    out = []
    for n in range(N):
        if strategy is PartitionStrategy.CONTIGUOUS:
            idx = np.arange(n * K_s, (n + 1) * K_s)
        else:
            idx = n + N * np.arange(K_s)
        out.append(SubBasis(columns=C.columns[:, idx], column_indices=tuple(int(i) for i in idx),
                            antenna_index=n))
    return out


@dataclass
class WaveformSet:
    """N equal-length complex waveforms plus the metadata needed downstream.

    ``scales`` holds the factor applied to each raw precoded waveform to reach
    unit energy; receivers treat it as shared side information.
    """

    waveforms: np.ndarray
    family: str
    zone: int = 0
    mode: ZoneMode = ZoneMode.PAPER_LITERAL
    capacities: tuple[int, ...] = ()
    scales: tuple[float, ...] = ()
    basis_family: Optional[str] = None
    seed: Optional[int] = None
    extra: dict = field(default_factory=dict)
    frames: Optional[Sequence] = None

    def __post_init__(self):
        w = np.asarray(self.waveforms, dtype=complex)
        if w.ndim != 2:
            raise ValueError("waveforms must be an N x K array")
        if not np.all(np.isfinite(w)):
            raise ValueError("waveforms contain non-finite values")
        self.waveforms = w
        self.mode = ZoneMode(self.mode)

    @property
    def N(self) -> int:
        return self.waveforms.shape[0]

    @property
    def K(self) -> int:
        return self.waveforms.shape[1]

    @property
    def lag_window(self) -> tuple[int, int]:
        return zone_lags(self.zone, self.mode)

    def metadata(self) -> dict:
        return {
            "family": self.family,
            "K": self.K,
            "N": self.N,
            "K_z": self.zone,
            "mode": self.mode.value,
            "basis_family": self.basis_family,
            "seed": self.seed,
            "capacities": list(self.capacities),
            "scales": [float(v) for v in self.scales],
            **self.extra,
        }


def zone_residual(wset: WaveformSet, K_z: Optional[int] = None,
                  mode: ZoneMode | str | None = None, normalized: bool = False,
                  periodic: bool = False) -> np.ndarray:
    """Max absolute cross-correlation of every ordered pair over the zone lags.

    Entry ``(n, m)`` is ``max_l |sum_k conj(s_n[k]) s_m[k+l]|``. The diagonal is the
    autocorrelation peak and is not a constraint. With ``normalized`` each entry
    is divided by ``||s_n|| ||s_m||``. ``periodic`` switches to circular
    correlation (see :func:`crosscorr`).
    """
    K_z = wset.zone if K_z is None else K_z
    mode = wset.mode if mode is None else ZoneMode(mode)
    w = wset.waveforms
    corr = crosscorr(w[:, None, :], w[None, :, :], zone_lags(K_z, mode), periodic)
    res = np.max(np.abs(corr), axis=-1)
    if normalized:
        e = np.linalg.norm(w, axis=1)
        res = res / np.outer(e, e)
    return res


def max_pair_residual(wset: WaveformSet, K_z: Optional[int] = None,
                      mode: ZoneMode | str | None = None) -> float:
    """Largest normalized residual over the pairs the construction constrains.

    Sequential construction zeroes ``S_n s_m`` for ``n < m`` (earlier waveform
    correlated against later). In paper-literal mode only that direction is
    constrained; in symmetric mode both directions are, by conjugate symmetry.
    """
    mode = wset.mode if mode is None else ZoneMode(mode)
    res = zone_residual(wset, K_z, mode, normalized=True)
    if wset.N < 2:
        return 0.0
    if mode is ZoneMode.PAPER_LITERAL:
        return float(res[np.triu_indices(wset.N, 1)].max())
    return float(res[~np.eye(wset.N, dtype=bool)].max())
