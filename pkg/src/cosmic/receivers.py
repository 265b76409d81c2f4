"""Communication decoding and imaging (range compression, back-projection)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .channel import RadarGeometry, two_way_delays
from .encoder import CosmicConfig, assemble_constraints, cosmic_subbases, null_space
from .modulation import Constellation, SymbolFrame, demap_symbols, map_bits_to_symbols
from .waveforms import SubBasis, WaveformSet

__all__ = ["DecodeError", "DecodeInfeasibleError", "DecodeResult", "RangeCompressedCube", "RadarImage",
           "comm_project", "comm_decode", "ofdm_decode", "decode_report", "pilot_symbols",
           "range_compress", "backproject"]


class DecodeError(RuntimeError):
    """Receiver state disagrees with the shared configuration."""


class DecodeInfeasibleError(DecodeError):
    """Sub-bases overlap, so per-antenna symbol vectors cannot be separated."""


def comm_project(y, C_n: SubBasis | np.ndarray) -> np.ndarray:
    """Least-squares coefficients of ``y`` on an orthonormal sub-basis: ``C_n^H y``."""
    cols = C_n.columns if isinstance(C_n, SubBasis) else np.asarray(C_n)
    return cols.conj().T @ np.asarray(y)


def pilot_symbols(count: int, constellation: Constellation | str) -> np.ndarray:
    """Known prefix used for gain estimation: the outermost constellation corners."""
    c = Constellation(constellation)
    corner = [0, 0] if c is Constellation.QPSK else [1, 0, 1, 0]
    alt = [1, 1] if c is Constellation.QPSK else [0, 0, 0, 0]
    bits = np.array([corner if k % 2 == 0 else alt for k in range(count)]).ravel()
    return map_bits_to_symbols(bits, c)


@dataclass
class DecodeResult:
    frames: list
    soft: list
    capacities: tuple
    gains: tuple


def _check_disjoint(subs: Sequence[SubBasis], tol: float = 1e-8):
    for a in range(len(subs)):
        for b in range(a + 1, len(subs)):
            leak = np.max(np.abs(subs[a].columns.conj().T @ subs[b].columns))
            if leak > tol:
                raise DecodeInfeasibleError(
                    f"sub-bases of antennas {a + 1} and {b + 1} overlap (max |C_n^H C_m| = {leak:.2e}); "
                    "simultaneous transmissions on shared columns cannot be separated without an "
                    "extra code, frequency or time division")


def comm_decode(y, config: CosmicConfig, scales: Sequence[float],
                capacities: Optional[Sequence[int]] = None, gains=None,
                equalization: str = "genie", n_pilots: int = 4,
                subbases: Optional[Sequence[SubBasis]] = None) -> DecodeResult:
    """Sequentially recover every antenna's symbols from one received slot.

    The receiver shares the transmitter configuration (master basis seed and
    partition) and the per-antenna normalization ``scales``. For antenna ``n`` it
    projects onto ``C_n``, rebuilds the constraint matrix from its own estimates
    of the earlier waveforms, recomputes the aligned null-space basis and
    equalizes. ``equalization='pilot'`` estimates the combined gain from the
    first ``n_pilots`` symbols, which must equal :func:`pilot_symbols`.
    """
    y = np.asarray(y, dtype=complex)
    if y.shape != (config.K,):
        raise ValueError(f"received slot has shape {y.shape}, expected ({config.K},)")
    subs = list(subbases) if subbases is not None else cosmic_subbases(config)
    _check_disjoint(subs)
    gains = np.ones(config.N, complex) if gains is None else np.broadcast_to(
        np.asarray(gains, complex), (config.N,))
    window = config.lag_window
    estimates, frames, soft, caps, used_gains = [], [], [], [], []
    for n, C_n in enumerate(subs):
        x_p = comm_project(y, C_n)
        B = assemble_constraints(estimates, C_n, window)
        ns = null_space(B, config.rel_tol)
        if capacities is not None and ns.dim != capacities[n]:
            raise DecodeError(f"antenna {n + 1}: null space has {ns.dim} dimensions, "
                              f"configuration announces {capacities[n]} symbols")
        z = ns.columns.conj().T @ x_p
        if equalization == "genie":
            g = gains[n] * scales[n]
        elif equalization == "pilot":
            p = pilot_symbols(n_pilots, config.constellation)
            g = np.vdot(p, z[:n_pilots]) / np.vdot(p, p)
        else:
            raise ValueError(f"unknown equalization {equalization!r}")
        sym = z / g
        _, bits = demap_symbols(sym, config.constellation)
        frames.append(SymbolFrame.from_bits(bits, config.constellation))
        soft.append(sym)
        caps.append(ns.dim)
        used_gains.append(complex(g))
        estimates.append(C_n.columns @ x_p)
    return DecodeResult(frames, soft, tuple(caps), tuple(used_gains))


def ofdm_decode(y, wset: WaveformSet, gains=None) -> DecodeResult:
    """DFT the slot and read each antenna's subcarriers."""
    Y = np.fft.fft(np.asarray(y, complex), norm="ortho")
    constellation = wset.extra["constellation"]
    gains = np.ones(wset.N, complex) if gains is None else np.broadcast_to(
        np.asarray(gains, complex), (wset.N,))
    frames, soft = [], []
    for n, idx in enumerate(wset.extra["subcarriers"]):
        z = Y[list(idx[:wset.capacities[n]])] / (gains[n] * wset.scales[n])
        _, bits = demap_symbols(z, constellation)
        frames.append(SymbolFrame.from_bits(bits, constellation))
        soft.append(z)
    return DecodeResult(frames, soft, tuple(wset.capacities), tuple(complex(g) for g in gains))


def decode_report(sent: Sequence[SymbolFrame], received: Sequence[SymbolFrame], skip: int = 0) -> dict:
    """Per-antenna and pooled symbol/bit error statistics; ``skip`` drops pilots."""
    rows = []
    tot_sym = tot_serr = tot_bits = tot_berr = 0
    for n, (tx, rx) in enumerate(zip(sent, received)):
        bps = len(tx.bits) // max(len(tx), 1)
        ts, rs = np.asarray(tx.symbols)[skip:], np.asarray(rx.symbols)[skip:]
        tb, rb = np.asarray(tx.bits)[skip * bps:], np.asarray(rx.bits)[skip * bps:]
        serr = int(np.sum(np.abs(ts - rs) > 1e-9))
        berr = int(np.sum(tb != rb))
        rows.append({"antenna": n + 1, "symbols": int(ts.size), "symbol_errors": serr,
                     "ser": serr / ts.size if ts.size else 0.0,
                     "bits": int(tb.size), "bit_errors": berr,
                     "ber": berr / tb.size if tb.size else 0.0})
        tot_sym += ts.size
        tot_serr += serr
        tot_bits += tb.size
        tot_berr += berr
    return {"per_antenna": rows, "symbols": tot_sym, "correct_symbols": tot_sym - tot_serr,
            "ser": tot_serr / tot_sym if tot_sym else 0.0,
            "ber": tot_berr / tot_bits if tot_bits else 0.0}


@dataclass(frozen=True)
class RangeCompressedCube:
    """Matched-filter outputs ``data[n, m, i]`` at fractional lags ``lags[i]`` (samples)."""

    data: np.ndarray
    lags: np.ndarray
    sampling_interval: float
    oversample: int

    @property
    def lag_axis(self) -> np.ndarray:
        """Lag of each bin in seconds."""
        return self.lags * self.sampling_interval


def range_compress(raw, wset: WaveformSet, lag_window: Optional[tuple[int, int]] = None,
                   sampling_interval: float = 1.0, oversample: int = 4, guard: int = 4) -> RangeCompressedCube:
    """Correlate every receiver channel with every transmitted waveform.

    Entry ``(n, m, l)`` is ``sum_k conj(s_n[k]) y_m[k + l]``. Lags are evaluated on
    an ``oversample``-times finer grid by zero-padding the correlation
    spectrum. The default window covers the waveform zone ``[0, K_z - 1]``
    widened by ``guard`` samples each side.
    """
    raw = np.atleast_2d(np.asarray(raw, complex))
    K = wset.K
    if raw.shape[1] < K:
        raise ValueError("raw data shorter than the waveforms")
    if lag_window is None:
        hi = (wset.zone - 1) if wset.zone else raw.shape[1] - K
        lag_window = (-guard, hi + guard)
    lo, hi = lag_window
    nfft = int(2 ** np.ceil(np.log2(raw.shape[1] + K - 1 + 2 * guard)))
    S = np.fft.fft(wset.waveforms, nfft, axis=1)
    Y = np.fft.fft(raw, nfft, axis=1)
    spec = np.conj(S)[:, None, :] * Y[None, :, :]
    if oversample < 1:
        raise ValueError("oversample must be a positive integer")
    big = nfft * oversample
    if oversample == 1:
        padded = spec
    else:
        # split the Nyquist bin across +/- fs/2 so integer lags stay exact
        padded = np.zeros(spec.shape[:2] + (big,), dtype=complex)
        half = nfft // 2
        padded[..., :half] = spec[..., :half]
        padded[..., big - half + 1:] = spec[..., half + 1:]
        padded[..., half] = 0.5 * spec[..., half]
        padded[..., big - half] = 0.5 * spec[..., half]
    corr = np.fft.ifft(padded, axis=-1) * oversample
    steps = np.arange(lo * oversample, hi * oversample + 1)
    return RangeCompressedCube(corr[..., steps % big], steps / oversample, sampling_interval, oversample)


@dataclass(frozen=True)
class RadarImage:
    grid: np.ndarray
    x: np.ndarray
    y: np.ndarray
    clipped: int = 0


def backproject(cube: RangeCompressedCube, geom: RadarGeometry, x, y) -> RadarImage:
    """Coherent delay-and-sum of the cube onto the pixel grid ``(y, x)``.

    Each channel is sampled at the pixel's two-way delay by linear interpolation
    on the oversampled lag grid and phase-compensated by ``exp(+2j pi f0 tau)``.
    Pixels whose delay falls outside the cube contribute zero and are counted in
    ``clipped`` (once per channel).
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    X, Y = np.meshgrid(x, y)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    tau, _, _ = two_way_delays(geom, pts)
    step = 1.0 / cube.oversample
    pos = (tau / cube.sampling_interval - cube.lags[0]) / step
    L = cube.lags.size
    img = np.zeros(pts.shape[0], dtype=complex)
    clipped = 0
    for n in range(geom.N):
        for m in range(geom.M):
            p = pos[:, n, m]
            ok = (p >= 0) & (p <= L - 1)
            clipped += int(np.sum(~ok))
            i0 = np.clip(np.floor(p).astype(int), 0, L - 2)
            frac = p - i0
            d = cube.data[n, m]
            val = (1 - frac) * d[i0] + frac * d[i0 + 1]
            img += np.where(ok, val * np.exp(2j * np.pi * geom.f0 * tau[:, n, m]), 0)
    return RadarImage(img.reshape(X.shape), x, y, clipped)
