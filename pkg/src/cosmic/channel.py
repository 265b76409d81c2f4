"""Communication (flat fading) and imaging (delayed echo) channel synthesis."""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .waveforms import WaveformSet

__all__ = ["C_LIGHT", "RadarGeometry", "SceneModel", "RasterScene", "CommChannel",
           "PathlossMode", "OutOfZoneWarning", "pathloss_gain", "pathloss_db",
           "comm_receive", "imaging_receive", "two_way_delays", "noise_variance_for_snr"]

C_LIGHT = 299_792_458.0


class OutOfZoneWarning(UserWarning):
    """A scatterer's two-way delay falls outside the zero-correlation zone."""


@dataclass(frozen=True)
class RadarGeometry:
    """Carrier, bandwidth and antenna positions (metres, x along the array).

    Sampling is critical: ``T_s = 1/B``.
    """

    f0: float
    bandwidth: float
    tx_positions: np.ndarray
    rx_positions: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "tx_positions", np.atleast_2d(np.asarray(self.tx_positions, float)))
        object.__setattr__(self, "rx_positions", np.atleast_2d(np.asarray(self.rx_positions, float)))

    @property
    def wavelength(self) -> float:
        return C_LIGHT / self.f0

    @property
    def T_s(self) -> float:
        return 1.0 / self.bandwidth

    @property
    def N(self) -> int:
        return self.tx_positions.shape[0]

    @property
    def M(self) -> int:
        return self.rx_positions.shape[0]

    @property
    def range_resolution(self) -> float:
        return C_LIGHT / (2 * self.bandwidth)

    @property
    def virtual_positions(self) -> np.ndarray:
        """Midpoints of every (tx, rx) pair, shape ``(N, M, 2)``."""
        return 0.5 * (self.tx_positions[:, None, :] + self.rx_positions[None, :, :])

    @classmethod
    def default_layout(cls, N: int, M: int, f0: float = 77e9, bandwidth: float = 200e6) -> "RadarGeometry":
        """Rx at lambda/2 pitch, Tx at M*lambda/2 pitch: lambda/4 virtual pitch."""
        lam = C_LIGHT / f0
        rx = np.arange(M) * lam / 2
        tx = np.arange(N) * M * lam / 2
        centre = 0.5 * (tx.mean() + rx.mean())
        tx_pos = np.column_stack([tx - centre, np.zeros(N)])
        rx_pos = np.column_stack([rx - centre, np.zeros(M)])
        return cls(f0, bandwidth, tx_pos, rx_pos)

    @classmethod
    def colocated(cls, N: int, M: int = 1, f0: float = 77e9, bandwidth: float = 200e6) -> "RadarGeometry":
        """Every antenna at the origin; reduces imaging to a range profile."""
        return cls(f0, bandwidth, np.zeros((N, 2)), np.zeros((M, 2)))


@dataclass(frozen=True)
class RasterScene:
    """Reflectivity raster on a regular grid; row ``iy``, column ``ix`` sits at
    ``(origin[0] + ix*spacing[0], origin[1] + iy*spacing[1])``."""

    reflectivity: np.ndarray
    origin: tuple[float, float]
    spacing: tuple[float, float]
    signal_mask: Optional[np.ndarray] = None

    def __post_init__(self):
        r = np.asarray(self.reflectivity)
        object.__setattr__(self, "reflectivity", r)
        if self.signal_mask is None:
            object.__setattr__(self, "signal_mask", np.abs(r) > 0)
        elif np.shape(self.signal_mask) != r.shape:
            raise ValueError("signal mask shape differs from reflectivity raster")

    @property
    def shape(self) -> tuple[int, int]:
        return self.reflectivity.shape

    @property
    def x(self) -> np.ndarray:
        return self.origin[0] + self.spacing[0] * np.arange(self.shape[1])

    @property
    def y(self) -> np.ndarray:
        return self.origin[1] + self.spacing[1] * np.arange(self.shape[0])


@dataclass(frozen=True)
class SceneModel:
    """Point scatterers: positions ``(P, 2)`` in metres, complex reflectivities ``(P,)``."""

    positions: np.ndarray
    reflectivity: np.ndarray
    raster: Optional[RasterScene] = field(default=None, compare=False)

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, float)).reshape(-1, 2)
        ref = np.asarray(self.reflectivity, complex).ravel()
        if pos.shape[0] != ref.size:
            raise ValueError("positions and reflectivities differ in length")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "reflectivity", ref)

    @classmethod
    def from_raster(cls, raster: RasterScene, speckle_seed: Optional[int] = None) -> "SceneModel":
        """One point scatterer per nonzero cell, optionally with random phase."""
        iy, ix = np.nonzero(raster.reflectivity)
        pos = np.column_stack([raster.x[ix], raster.y[iy]])
        ref = raster.reflectivity[iy, ix].astype(complex)
        if speckle_seed is not None:
            rng = np.random.default_rng(speckle_seed)
            ref = ref * np.exp(2j * np.pi * rng.random(ref.size))
        return cls(pos, ref, raster)

    def scaled(self, factor: complex) -> "SceneModel":
        return SceneModel(self.positions, self.reflectivity * factor, self.raster)


class PathlossMode(str, enum.Enum):
    FRIIS = "friis"
    PAPER_LITERAL = "paper_literal"


def pathloss_db(G: float, wavelength: float, d: float) -> float:
    """The loss ``-10 log10(G lambda^2 / (4 pi d^2))`` exactly as quoted."""
    if d <= 0:
        raise ValueError("distance must be positive")
    return float(-10 * np.log10(G * wavelength ** 2 / (4 * np.pi * d ** 2)))


def pathloss_gain(G: float, wavelength: float, d: float,
                  mode: PathlossMode | str = PathlossMode.FRIIS) -> complex:
    """Flat-fading amplitude gain with zero phase.

    ``friis`` returns ``sqrt(G) lambda / (4 pi d)``; ``paper_literal`` converts
    :func:`pathloss_db` back to an amplitude.
    """
    if d <= 0:
        raise ValueError("distance must be positive")
    if PathlossMode(mode) is PathlossMode.FRIIS:
        return complex(np.sqrt(G) * wavelength / (4 * np.pi * d))
    return complex(10 ** (-pathloss_db(G, wavelength, d) / 20))


@dataclass(frozen=True)
class CommChannel:
    """Per-antenna complex gains and receiver noise variance, constant per slot."""

    gains: np.ndarray
    noise_var: float = 0.0
    distance: Optional[float] = None
    G: Optional[float] = None
    N0: Optional[float] = None

    def __post_init__(self):
        g = np.atleast_1d(np.asarray(self.gains, complex))
        if np.any(np.abs(g) == 0):
            raise ValueError("channel gains must be nonzero")
        if self.noise_var < 0:
            raise ValueError("noise variance must be nonnegative")
        object.__setattr__(self, "gains", g)

    @classmethod
    def from_pathloss(cls, N: int, G: float, wavelength: float, d: float, N0: float,
                      bandwidth: float, mode: PathlossMode | str = PathlossMode.FRIIS) -> "CommChannel":
        h = pathloss_gain(G, wavelength, d, mode)
        return cls(np.full(N, h), N0 * bandwidth, d, G, N0)


def noise_variance_for_snr(snr_db: float, gain: complex, K: int, energy: float = 1.0) -> float:
    """Per-sample noise variance giving per-antenna SNR ``|h|^2 P / (N0 B)``.

    ``P = energy / K`` is the per-sample transmit power of one waveform.
    """
    return float(abs(gain) ** 2 * energy / K / 10 ** (snr_db / 10))


def _noise(shape, var: float, seed: int, stream: int) -> np.ndarray:
    rng = np.random.default_rng([seed, stream])
    return np.sqrt(var / 2) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def comm_receive(wset: WaveformSet, ch: CommChannel, noise_seed: int = 0) -> np.ndarray:
    """Single-antenna receiver: ``y = sum_n h_n s_n + w``."""
    if ch.gains.size not in (1, wset.N):
        raise ValueError("one gain per transmit antenna expected")
    y = np.sum(np.broadcast_to(ch.gains, (wset.N,))[:, None] * wset.waveforms, axis=0)
    if ch.noise_var > 0:
        y = y + _noise(y.shape, ch.noise_var, noise_seed, 0)
    return y


def two_way_delays(geom: RadarGeometry, points: np.ndarray):
    """Return ``(tau, d_tx, d_rx)`` with tau of shape ``(P, N, M)`` in seconds."""
    pts = np.asarray(points, float).reshape(-1, 2)
    d_tx = np.linalg.norm(pts[:, None, :] - geom.tx_positions[None, :, :], axis=-1)
    d_rx = np.linalg.norm(pts[:, None, :] - geom.rx_positions[None, :, :], axis=-1)
    tau = (d_tx[:, :, None] + d_rx[:, None, :]) / C_LIGHT
    return tau, d_tx, d_rx


def imaging_receive(wset: WaveformSet, geom: RadarGeometry, scene: SceneModel,
                    noise_seed: int = 0, noise_var: float = 0.0, calibration: float = 1.0,
                    length: Optional[int] = None, chunk: int = 256) -> np.ndarray:
    """Raw baseband data at the M imaging receivers, shape ``(M, L)``.

    Every scatterer returns each transmitted waveform delayed by its exact
    two-way time ``tau`` (band-limited fractional shift in the frequency
    domain), scaled by ``calibration * reflectivity / (d_tx d_rx)`` and rotated
    by ``exp(-2j pi f0 tau)``.
    """
    if geom.N != wset.N:
        raise ValueError(f"geometry has {geom.N} transmitters, waveform set has {wset.N}")
    K, T_s = wset.K, geom.T_s
    tau, d_tx, d_rx = two_way_delays(geom, scene.positions)
    max_lag = float(tau.max() / T_s) if tau.size else 0.0
    if wset.zone and max_lag > wset.zone:
        n_out = int(np.sum(np.any(tau / T_s > wset.zone, axis=(1, 2))))
        warnings.warn(f"{n_out} scatterer(s) beyond the {wset.zone}-sample zone "
                      f"(max two-way delay {max_lag:.1f} samples)", OutOfZoneWarning, stacklevel=2)
    L = length or K + int(np.ceil(max_lag)) + 8
    nfft = int(2 ** np.ceil(np.log2(2 * max(L, K))))
    f = np.fft.fftfreq(nfft, T_s)
    S = np.fft.fft(wset.waveforms, nfft, axis=1)
    amp = calibration * scene.reflectivity[:, None, None] / (d_tx[:, :, None] * d_rx[:, None, :])
    Y = np.zeros((geom.M, nfft), dtype=complex)
    for start in range(0, tau.shape[0], chunk):
        t = tau[start:start + chunk]
        a = amp[start:start + chunk]
        for n in range(geom.N):
            for m in range(geom.M):
                H = np.exp(-2j * np.pi * np.outer(geom.f0 + f, t[:, n, m])) @ a[:, n, m]
                Y[m] += S[n] * H
    y = np.fft.ifft(Y, axis=1)[:, :L]
    if noise_var > 0:
        y = y + np.stack([_noise(L, noise_var, noise_seed, m) for m in range(geom.M)])
    return y
