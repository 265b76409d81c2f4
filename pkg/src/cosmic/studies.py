"""Desk-scale reproductions of the headline comparisons.

Each study is a pure function of its arguments and seeds and returns plain
dictionaries, so the acceptance suite, the sweep runner and the demo scripts
share one implementation. Parameters are chosen so every study runs in well
under a minute on one CPU.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .baselines import Allocation, generate_ofdm_set, generate_zero_shift_set
from .channel import (CommChannel, RadarGeometry, RasterScene, SceneModel, comm_receive,
                      imaging_receive, noise_variance_for_snr)
from .encoder import CosmicConfig, generate_cosmic_set
from .metrics import correct_fraction, image_snr, islr, mainlobe_halfwidth_bins, spectral_efficiency
from .receivers import backproject, comm_decode, decode_report, ofdm_decode, range_compress
from .waveforms import ZoneMode

__all__ = ["islr_gain_study", "image_snr_study", "symbol_capacity_vs_n", "se_curve",
           "point_scene_at_lags"]


def point_scene_at_lags(geom: RadarGeometry, lags, amplitudes, compensate_spreading: bool = True) -> SceneModel:
    """Point targets on the boresight axis at the given two-way delays (samples).

    With ``compensate_spreading`` the reflectivity is multiplied by ``R^2`` so the
    received amplitude equals ``amplitudes`` for a colocated array.
    """
    lags = np.asarray(lags, float)
    R = lags * geom.range_resolution
    amp = np.asarray(amplitudes, complex)
    if compensate_spreading:
        amp = amp * R ** 2
    return SceneModel(np.column_stack([np.zeros_like(R), R]), amp)


def _profile_power(wset, geom, scene, window, oversample):
    raw = imaging_receive(wset, geom, scene)
    cube = range_compress(raw, wset, window, geom.T_s, oversample, guard=0)
    return cube.lags, np.mean(np.abs(cube.data) ** 2, axis=(0, 1))


def islr_gain_study(K: int = 2048, N: int = 8, K_s: int = 256, K_z: int = 19,
                    mode: ZoneMode | str = ZoneMode.SYMMETRIC, n_weak: int = 100,
                    weak_amplitude: float = 0.02, looks: int = 4, oversample: int = 4,
                    seed: int = 0) -> dict:
    """Range-profile ISLR of a zone-compliant set against a zero-shift set.

    Two unit targets sit at 30 % and 70 % of the zone and ``n_weak`` random-phase
    targets are spread uniformly over it. Power profiles are averaged over the
    colocated channels and over ``looks`` independent data/sequence draws.
    """
    geom = RadarGeometry.colocated(N, 1)
    rng = np.random.default_rng([seed, 17])
    strong = np.round(np.array([0.3, 0.7]) * (K_z - 1))
    weak = rng.uniform(1, K_z - 2, n_weak)
    amps = np.concatenate([np.ones(2), weak_amplitude * np.exp(2j * np.pi * rng.random(n_weak))])
    scene = point_scene_at_lags(geom, np.concatenate([strong, weak]), amps)
    window = (0, K_z - 1)
    acc = {"cosmic": 0.0, "zero_shift": 0.0}
    lags = None
    cfg = CosmicConfig(K=K, N=N, K_s=K_s, K_z=K_z, mode=mode, seed=seed)
    for t in range(looks):
        sets = {"cosmic": generate_cosmic_set(cfg, data_seed=1000 * seed + t),
                "zero_shift": generate_zero_shift_set(K, N, seed=1000 * seed + t)}
        for name, ws in sets.items():
            lags, p = _profile_power(ws, geom, scene, window, oversample)
            acc[name] = acc[name] + p
    peaks = [int(np.argmin(np.abs(lags - s))) for s in strong]
    hw = mainlobe_halfwidth_bins(oversample)
    out = {name: islr(np.sqrt(p), hw, peaks) for name, p in acc.items()}
    return {"islr_cosmic_db": out["cosmic"], "islr_zero_shift_db": out["zero_shift"],
            "gain_db": out["cosmic"] - out["zero_shift"], "lags": lags,
            "profiles": {k: np.sqrt(v / looks) for k, v in acc.items()}}


def _extended_scene(K_z: int, spacing: float, half_width: float, seed: int):
    ymax = 0.75 * (K_z - 3)
    x = np.arange(-10.0, 10.0 + 1e-9, spacing)
    y = np.arange(1.5, ymax + 1e-9, spacing)
    X, Y = np.meshgrid(x, y)
    mask = (np.abs(X) <= half_width) & (np.abs(Y - 0.55 * ymax) <= 2.0)
    raster = RasterScene(mask.astype(float), (x[0], y[0]), (spacing, spacing))
    scene = SceneModel.from_raster(raster, speckle_seed=seed)
    R = np.linalg.norm(scene.positions, axis=1)
    return x, y, mask, SceneModel(scene.positions, scene.reflectivity * R ** 2, raster)


def image_snr_study(K: int = 1024, N: int = 4, M: int = 4, K_z: int = 40,
                    mode: ZoneMode | str = ZoneMode.SYMMETRIC, looks: int = 3,
                    spacing: float = 0.25, half_width: float = 3.0, guard: int = 3,
                    seed: int = 0) -> dict:
    """Image SNR of COSMIC, zero-shift and MIMO-radar OFDM on one extended scene.

    The scene is a speckled rectangle; back-projected image energies are
    accumulated over ``looks`` independent data draws of each family. The OFDM
    baseline uses contiguous sub-bands, so each transmitter illuminates a
    different slice of the spectrum.
    """
    geom = RadarGeometry.default_layout(N, M)
    x, y, mask, scene = _extended_scene(K_z, spacing, half_width, seed)
    cfg = CosmicConfig(K=K, N=N, K_s=K // N, K_z=K_z, mode=mode, seed=seed)
    energy = {"cosmic": 0.0, "zero_shift": 0.0, "ofdm": 0.0}
    for t in range(looks):
        ds = 1000 * seed + t
        sets = {"cosmic": generate_cosmic_set(cfg, data_seed=ds),
                "zero_shift": generate_zero_shift_set(K, N, seed=ds),
                "ofdm": generate_ofdm_set(K, N, allocation=Allocation.CONTIGUOUS, seed=ds)}
        for name, ws in sets.items():
            raw = imaging_receive(ws, geom, scene)
            cube = range_compress(raw, ws, (-4, K_z + 3), geom.T_s, 4)
            energy[name] = energy[name] + np.abs(backproject(cube, geom, x, y).grid) ** 2
    snr = {name: image_snr(np.sqrt(e), mask, guard=guard) for name, e in energy.items()}
    return {"snr_db": snr, "x": x, "y": y, "mask": mask,
            "images": {k: np.sqrt(v / looks) for k, v in energy.items()},
            "capacities": generate_cosmic_set(cfg, data_seed=seed).capacities}


def symbol_capacity_vs_n(Ns: Sequence[int] = (1, 2, 4, 6), K: int = 1024, K_z: int = 16,
                         mode: ZoneMode | str = ZoneMode.SYMMETRIC, trials: int = 32,
                         oversample: int = 4, seed: int = 0) -> list[dict]:
    """Per-slot symbol count and single-target ISLR against the number of antennas.

    ``K_s = K // N`` for COSMIC, and the OFDM baseline splits ``K`` subcarriers
    into contiguous sub-bands. ISLR is taken on the channel-averaged power
    profile of one target in the middle of the zone, averaged over ``trials``.
    """
    rows = []
    for N in Ns:
        geom = RadarGeometry.colocated(N, 1)
        d = (K_z - 1) // 2
        scene = point_scene_at_lags(geom, [d], [1.0])
        cfg = CosmicConfig(K=K, N=N, K_s=K // N, K_z=K_z, mode=mode, seed=seed)
        acc = {"cosmic": 0.0, "ofdm": 0.0}
        caps = ofdm_caps = None
        for t in range(trials):
            ds = 1000 * seed + t
            cos = generate_cosmic_set(cfg, data_seed=ds)
            ofdm = generate_ofdm_set(K, N, allocation=Allocation.CONTIGUOUS, seed=ds)
            caps, ofdm_caps = cos.capacities, ofdm.capacities
            for name, ws in (("cosmic", cos), ("ofdm", ofdm)):
                lags, p = _profile_power(ws, geom, scene, (0, K_z - 1), oversample)
                acc[name] = acc[name] + p
        hw = mainlobe_halfwidth_bins(oversample)
        rows.append({"N": N, "K_s": K // N,
                     "symbols_cosmic": int(sum(caps)), "symbols_ofdm": int(sum(ofdm_caps)),
                     "capacities": list(caps),
                     "predicted": list(cos.extra["predicted_capacities"]),
                     "islr_cosmic_db": islr(np.sqrt(acc["cosmic"]), hw, [d * oversample]),
                     "islr_ofdm_db": islr(np.sqrt(acc["ofdm"]), hw, [d * oversample])})
    return rows


def se_curve(snr_db: Sequence[float] = (0, 5, 10, 15, 20, 25, 30), K: int = 1024, N: int = 4,
             K_s: int = 256, K_z: int = 16, mode: ZoneMode | str = ZoneMode.PAPER_LITERAL,
             trials: int = 10, constellation: str = "qam16", seed: int = 0) -> list[dict]:
    """Spectral efficiency of COSMIC, MIMO-radar OFDM and the Shannon bound.

    SNR is the per-antenna ratio ``|h|^2 P / (N0 B)`` with unit gains. The
    correct-symbol fraction ``eta`` is measured by Monte-Carlo decoding: COSMIC
    counts against all ``N K_s`` sub-basis slots (so the null-space loss shows
    up in ``eta``), OFDM against its assigned subcarriers. OFDM radar shares
    the band, so ``beta = 1/N``; the bound uses ``beta = eta = 1``.
    """
    cfg = CosmicConfig(K=K, N=N, K_s=K_s, K_z=K_z, mode=mode, seed=seed, constellation=constellation)
    gains = np.ones(N)
    P, B = 1.0 / K, 1.0
    rows = []
    for snr in snr_db:
        N0 = P / 10 ** (snr / 10)
        var = noise_variance_for_snr(snr, 1.0, K)
        ok_c = ok_o = slots_c = slots_o = 0
        for t in range(trials):
            ds = 1000 * seed + t
            cos = generate_cosmic_set(cfg, data_seed=ds)
            y = comm_receive(cos, CommChannel(gains, var), noise_seed=ds)
            rep = decode_report(cos.frames, comm_decode(y, cfg, cos.scales).frames)
            ok_c += rep["correct_symbols"]
            slots_c += N * K_s
            ofdm = generate_ofdm_set(K, N, constellation=constellation, seed=ds)
            y = comm_receive(ofdm, CommChannel(gains, var), noise_seed=ds)
            rep = decode_report(ofdm.frames, ofdm_decode(y, ofdm).frames)
            ok_o += rep["correct_symbols"]
            slots_o += sum(ofdm.capacities)
        eta_c = correct_fraction({"correct_symbols": ok_c}, slots_c)
        eta_o = correct_fraction({"correct_symbols": ok_o}, slots_o)
        rows.append({"snr_db": float(snr), "eta_cosmic": eta_c, "eta_ofdm": eta_o,
                     "se_bound": spectral_efficiency(gains, P, N0, B, 1.0, 1.0),
                     "se_cosmic": spectral_efficiency(gains, P, N0, B, 1.0, eta_c),
                     "se_ofdm_radar": spectral_efficiency(gains, P, N0, B, 1.0 / N, eta_o)})
    return rows
