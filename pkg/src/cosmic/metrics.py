"""Figures of merit: ISLR, image SNR, spectral efficiency, error rates."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage

__all__ = ["DB_FLOOR", "MetricsReport", "to_db", "islr", "image_snr", "spectral_efficiency",
           "correct_fraction", "mainlobe_halfwidth_bins"]

DB_FLOOR = 120.0


def to_db(ratio: float) -> float:
    """``10 log10`` clamped to ``[-120, 120]`` dB."""
    if ratio <= 0:
        return -DB_FLOOR
    if not np.isfinite(ratio):
        return DB_FLOOR
    return float(np.clip(10 * np.log10(ratio), -DB_FLOOR, DB_FLOOR))


def mainlobe_halfwidth_bins(oversample: int = 1) -> int:
    """One range resolution cell either side of the peak, in profile bins."""
    return max(1, int(oversample))


def islr(profile, mainlobe_halfwidth: int = 1, peak_locations: Optional[Sequence[int]] = None) -> float:
    """Integrated sidelobe ratio in dB.

    ``profile`` holds magnitudes (or complex samples). The main lobe is the union
    of ``+/- mainlobe_halfwidth`` bins around each declared peak; without peaks the
    global maximum is used.
    """
    p = np.abs(np.asarray(profile)).ravel()
    if mainlobe_halfwidth < 1:
        raise ValueError("main-lobe half-width must be at least one bin")
    if peak_locations is None:
        peak_locations = [int(np.argmax(p))]
    if len(peak_locations) == 0:
        raise ValueError("at least one peak is required")
    energy = p ** 2
    main = np.zeros(p.size, bool)
    for k in peak_locations:
        main[max(0, k - mainlobe_halfwidth):k + mainlobe_halfwidth + 1] = True
    e_main = energy[main].sum()
    if e_main <= 0:
        raise ValueError("main-lobe energy is zero")
    side = energy.sum() - e_main
    if side <= e_main * 1e-12:
        return -DB_FLOOR
    return to_db(side / e_main)


def image_snr(img, signal_mask, noise_mask=None, guard: int = 0) -> float:
    """Signal-region energy over noise-region energy of an image, in dB.

    The noise region defaults to every pixel farther than ``guard`` pixels
    (Chebyshev distance, so diagonals count) from the signal mask.
    """
    I = np.asarray(getattr(img, "grid", img))
    S = np.asarray(signal_mask, bool)
    if S.shape != I.shape:
        raise ValueError(f"mask shape {S.shape} differs from image shape {I.shape}")
    if noise_mask is None:
        grown = (ndimage.binary_dilation(S, np.ones((3, 3), bool), iterations=guard)
                 if guard > 0 else S)
        Nm = ~grown
    else:
        Nm = np.asarray(noise_mask, bool)
    if not S.any() or not Nm.any():
        raise ValueError("signal and noise regions must both be nonempty")
    p = np.abs(I) ** 2
    e_s, e_n = p[S].sum(), p[Nm].sum()
    if e_n == 0:
        return DB_FLOOR
    return to_db(e_s / e_n)


def spectral_efficiency(gains, P, N0: float, B: float, beta: float = 1.0, eta: float = 1.0) -> float:
    """``beta * eta * sum_n log2(1 + |h_n|^2 P_n / (beta N0 B))`` in bits/s/Hz."""
    if not 0 < beta <= 1:
        raise ValueError("beta must lie in (0, 1]")
    if not 0 <= eta <= 1:
        raise ValueError("eta must lie in [0, 1]")
    if N0 * B <= 0:
        raise ValueError("N0 * B must be positive")
    g2 = np.abs(np.atleast_1d(np.asarray(gains, complex))) ** 2
    P = np.broadcast_to(np.asarray(P, float), g2.shape)
    if np.any(P < 0):
        raise ValueError("transmit powers must be nonnegative")
    return float(beta * eta * np.sum(np.log2(1 + g2 * P / (beta * N0 * B))))


def correct_fraction(report: dict, slots: int) -> float:
    """Correctly received symbols per available symbol slot (the SE ``eta``)."""
    if slots <= 0:
        raise ValueError("slot count must be positive")
    return min(1.0, report["correct_symbols"] / slots)


@dataclass
class MetricsReport:
    islr_db: Optional[float] = None
    snr_image_db: Optional[float] = None
    se_bits_per_s_per_hz: Optional[float] = None
    ser: Optional[float] = None
    residual_max: Optional[float] = None
    fingerprint: str = ""
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, float) and not np.isfinite(v):
                raise ValueError(f"metric {k} is not finite")
        return d
