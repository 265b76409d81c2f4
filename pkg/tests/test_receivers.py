import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cosmic import (CommChannel, CosmicConfig, DecodeError, DecodeInfeasibleError, RadarGeometry,
                    SceneModel, SymbolFrame, backproject, build_master_basis, comm_decode,
                    comm_project, comm_receive, decode_report, generate_cosmic_set, generate_ofdm_set,
                    generate_zero_shift_set, imaging_receive, noise_variance_for_snr, ofdm_decode,
                    partition_subbases, range_compress)
from cosmic.encoder import cosmic_subbases
from cosmic.modulation import demap_symbols
from cosmic.receivers import pilot_symbols
from cosmic.studies import point_scene_at_lags

from oracles import crandn


def _round_trip(cfg, gains=None, data_seed=0, **kw):
    ws = generate_cosmic_set(cfg, data_seed=data_seed)
    y = comm_receive(ws, CommChannel(np.ones(cfg.N) if gains is None else gains))
    res = comm_decode(y, cfg, ws.scales, ws.capacities, gains=gains, **kw)
    return ws, res


# ---- projection -----------------------------------------------------------

def test_projection_recovers_coefficients():
    C = partition_subbases(build_master_basis(64, seed=1), 4, 16)[2]
    v = crandn(np.random.default_rng(0), 16)
    np.testing.assert_allclose(comm_project(C.columns @ v, C), v, atol=1e-12)


def test_projection_of_orthogonal_signal_is_zero():
    subs = partition_subbases(build_master_basis(64, seed=1), 4, 16)
    y = subs[0].columns @ crandn(np.random.default_rng(1), 16)
    assert np.max(np.abs(comm_project(y, subs[3]))) < 1e-12


def test_projection_is_idempotent():
    C = partition_subbases(build_master_basis(64, seed=2), 2, 20)[1].columns
    y = crandn(np.random.default_rng(2), 64)
    once = C @ comm_project(y, C)
    twice = C @ comm_project(once, C)
    assert np.max(np.abs(once - twice)) < 1e-12


def test_zero_noise_projection_is_scaled_precoded_vector():
    cfg = CosmicConfig(K=128, N=3, K_s=40, K_z=6, mode="symmetric", seed=4)
    ws = generate_cosmic_set(cfg, data_seed=1)
    h = np.array([0.5, 2j, -1.0 + 1j])
    y = comm_receive(ws, CommChannel(h))
    for n, C in enumerate(cosmic_subbases(cfg)):
        expect = h[n] * comm_project(ws.waveforms[n], C)
        np.testing.assert_allclose(comm_project(y, C), expect, atol=1e-12)


# ---- decoding -------------------------------------------------------------

@pytest.mark.parametrize("constellation", ["qpsk", "qam16"])
@pytest.mark.parametrize("mode", ["paper_literal", "symmetric"])
def test_zero_noise_round_trip(constellation, mode):
    cfg = CosmicConfig(K=256, N=4, K_s=64, K_z=8, mode=mode, seed=3, constellation=constellation)
    ws, res = _round_trip(cfg, data_seed=5)
    rep = decode_report(ws.frames, res.frames)
    assert rep["ser"] == 0 and rep["ber"] == 0
    for f_tx, soft in zip(ws.frames, res.soft):
        assert np.max(np.abs(soft - f_tx.symbols)) < 1e-9
    assert res.capacities == ws.capacities


def test_round_trip_with_known_complex_gains():
    cfg = CosmicConfig(K=200, N=3, K_s=60, K_z=5, seed=1, basis="inverse_dft")
    gains = np.array([1e-4 * np.exp(1j), 3e-5j, 2e-4])
    ws, res = _round_trip(cfg, gains)
    assert decode_report(ws.frames, res.frames)["ber"] == 0


def test_pilot_equalization_recovers_unknown_gains():
    cfg = CosmicConfig(K=256, N=3, K_s=80, K_z=6, mode="symmetric", seed=2)
    p = pilot_symbols(4, cfg.constellation)
    _, pbits = demap_symbols(p, cfg.constellation)
    rng = np.random.default_rng(0)

    def frame(n, D):
        data = SymbolFrame.random(D - 4, cfg.constellation, rng)
        return SymbolFrame.from_bits(np.concatenate([pbits, data.bits]), cfg.constellation)

    ws = generate_cosmic_set(cfg, frame)
    gains = np.array([0.3 * np.exp(0.4j), 1.7j, -0.8])
    y = comm_receive(ws, CommChannel(gains))
    res = comm_decode(y, cfg, ws.scales, equalization="pilot")
    assert decode_report(ws.frames, res.frames, skip=4)["ser"] == 0
    np.testing.assert_allclose(np.array(res.gains), gains * np.array(ws.scales), rtol=1e-9)


def test_unknown_equalization_rejected():
    cfg = CosmicConfig(K=64, N=1, K_s=16, K_z=4)
    with pytest.raises(ValueError):
        _round_trip(cfg, equalization="magic")


def test_capacity_mismatch_detected():
    cfg = CosmicConfig(K=128, N=2, K_s=32, K_z=4, seed=0)
    ws = generate_cosmic_set(cfg)
    y = comm_receive(ws, CommChannel(np.ones(2)))
    with pytest.raises(DecodeError, match="announces"):
        comm_decode(y, cfg, ws.scales, capacities=(32, 30))
    with pytest.raises(ValueError):
        comm_decode(y[:-1], cfg, ws.scales)


def test_shared_idft_subbases_are_undecodable():
    # every antenna reusing the same IDFT columns: simultaneous cross-talk
    C = build_master_basis(64, "inverse_dft")
    shared = partition_subbases(C, 1, 16)[0]
    cfg = CosmicConfig(K=64, N=2, K_s=16, K_z=4, basis="inverse_dft")
    y = np.ones(64, complex)
    with pytest.raises(DecodeInfeasibleError):
        comm_decode(y, cfg, [1.0, 1.0], subbases=[shared, shared])


def test_ser_falls_with_snr():
    cfg = CosmicConfig(K=256, N=2, K_s=128, K_z=8, seed=0)
    snrs = [0, 5, 10, 15, 20, 25, 30]
    ser = np.zeros(len(snrs))
    seeds = range(12)
    for i, snr in enumerate(snrs):
        for s in seeds:
            ws = generate_cosmic_set(cfg, data_seed=s)
            y = comm_receive(ws, CommChannel(np.ones(2), noise_variance_for_snr(snr, 1.0, cfg.K)),
                             noise_seed=s)
            ser[i] += decode_report(ws.frames, comm_decode(y, cfg, ws.scales).frames)["ser"]
    ser /= len(seeds)
    assert np.all(np.diff(ser) <= 0)
    assert ser[0] > 0.3 and ser[-1] == 0


@settings(max_examples=20, deadline=None)
@given(N=st.integers(1, 6), K_s=st.integers(8, 40), K_z=st.integers(1, 6),
       mode=st.sampled_from(["paper_literal", "symmetric"]),
       constellation=st.sampled_from(["qpsk", "qam16"]), seed=st.integers(0, 10**4))
def test_property_round_trip_bits(N, K_s, K_z, mode, constellation, seed):
    lags = K_z if mode == "paper_literal" else 2 * K_z - 1
    if K_s - (N - 1) * (lags - 1) < 1:
        return
    cfg = CosmicConfig(K=N * K_s + seed % 7, N=N, K_s=K_s, K_z=K_z, mode=mode, seed=seed,
                       constellation=constellation)
    ws, res = _round_trip(cfg, data_seed=seed)
    for tx, rx in zip(ws.frames, res.frames):
        np.testing.assert_array_equal(tx.bits, rx.bits)


def test_ofdm_round_trip():
    ws = generate_ofdm_set(64, 4, constellation="qpsk", seed=3)
    gains = np.array([1, 1j, -2, 0.5])
    res = ofdm_decode(comm_receive(ws, CommChannel(gains)), ws, gains)
    assert decode_report(ws.frames, res.frames)["ber"] == 0


def test_decode_report_counts():
    tx = [SymbolFrame.from_bits([0, 0, 1, 1], "qpsk")]
    rx = [SymbolFrame.from_bits([0, 0, 1, 0], "qpsk")]
    r = decode_report(tx, rx)
    assert r["symbols"] == 2 and r["correct_symbols"] == 1
    assert r["ser"] == 0.5 and r["ber"] == 0.25
    assert decode_report(tx, rx, skip=1)["per_antenna"][0]["symbols"] == 1


# ---- range compression ----------------------------------------------------

def test_range_peak_at_integer_delay():
    ws = generate_cosmic_set(CosmicConfig(K=512, N=1, K_s=512, K_z=32), data_seed=0)
    g = RadarGeometry.colocated(1, 1)
    cube = range_compress(imaging_receive(ws, g, point_scene_at_lags(g, [20], [1.0])), ws)
    assert cube.data.shape[:2] == (1, 1)
    assert cube.lags[np.argmax(np.abs(cube.data[0, 0]))] == 20
    assert np.all(np.isfinite(cube.data))
    assert cube.lags[0] == -4 and cube.lags[-1] == 31 + 4


def test_fractional_delay_peak_on_fine_grid():
    ws = generate_cosmic_set(CosmicConfig(K=512, N=1, K_s=512, K_z=32), data_seed=1)
    g = RadarGeometry.colocated(1, 1)
    cube = range_compress(imaging_receive(ws, g, point_scene_at_lags(g, [9.25], [1.0])), ws)
    assert cube.lags[np.argmax(np.abs(cube.data[0, 0]))] == 9.25


def test_range_compress_validation():
    ws = generate_zero_shift_set(32, 1)
    with pytest.raises(ValueError):
        range_compress(np.ones((1, 16)), ws)
    with pytest.raises(ValueError):
        range_compress(np.ones((1, 40)), ws, (0, 3), oversample=0)


def test_cosmic_noise_floor_below_zero_shift():
    K, N, K_z = 1024, 4, 24
    g = RadarGeometry.colocated(N, 1)
    d = 10
    scene = point_scene_at_lags(g, [d], [1.0])
    floors = {}
    sets = {"cosmic": generate_cosmic_set(CosmicConfig(K=K, N=N, K_s=K // N, K_z=K_z,
                                                       mode="symmetric", seed=0), data_seed=0),
            "zero_shift": generate_zero_shift_set(K, N, seed=0)}
    for name, ws in sets.items():
        cube = range_compress(imaging_receive(ws, g, scene), ws, (0, K_z - 1), oversample=1)
        off = np.abs(cube.data[:, 0, np.arange(K_z) != d]).ravel()
        floors[name] = np.median(off)
    assert floors["cosmic"] < floors["zero_shift"]


# ---- back-projection ------------------------------------------------------

@pytest.mark.parametrize("N,M", [(1, 1), (2, 3), (4, 4)])
def test_backprojection_localizes_point(N, M):
    g = RadarGeometry.default_layout(N, M)
    K = 256 * N
    ws = generate_cosmic_set(CosmicConfig(K=K, N=N, K_s=256, K_z=24, mode="symmetric"), data_seed=2)
    target = np.array([0.4, 9.1])
    scene = SceneModel([target], [1.0 * np.hypot(*target) ** 2])
    cube = range_compress(imaging_receive(ws, g, scene), ws, sampling_interval=g.T_s)
    x = np.linspace(-3, 3, 121)
    y = np.linspace(7, 11, 81)
    img = backproject(cube, g, x, y)
    iy, ix = np.unravel_index(np.argmax(np.abs(img.grid)), img.grid.shape)
    assert abs(y[iy] - target[1]) <= g.range_resolution / 2
    if N * M > 1:
        v = g.virtual_positions[..., 0].ravel()
        aperture = np.ptp(v) + g.wavelength / 4
        cross_cell = np.hypot(*target) * g.wavelength / (2 * aperture)
        assert abs(x[ix] - target[0]) <= cross_cell / 2
    assert img.clipped == 0


def test_backprojection_coherent_gain():
    N = M = 4
    g = RadarGeometry.default_layout(N, M)
    ws = generate_cosmic_set(CosmicConfig(K=1024, N=N, K_s=256, K_z=24, mode="symmetric"), data_seed=0)
    target = np.array([0.0, 8.0])
    scene = SceneModel([target], [64.0])
    cube = range_compress(imaging_receive(ws, g, scene), ws, sampling_interval=g.T_s)
    full = backproject(cube, g, [0.0], [8.0]).grid[0, 0]
    one = backproject(cube, RadarGeometry(g.f0, g.bandwidth, g.tx_positions[:1], g.rx_positions[:1]),
                      [0.0], [8.0])
    # a one-channel geometry reads only cube[0, 0]
    single = one.grid[0, 0]
    assert abs(full) / abs(single) == pytest.approx(N * M, rel=0.05)


def test_backprojection_counts_clipped_pixels():
    g = RadarGeometry.colocated(1, 1)
    ws = generate_zero_shift_set(64, 1)
    cube = range_compress(np.zeros((1, 80)), ws, (0, 10), sampling_interval=g.T_s)
    img = backproject(cube, g, [0.0], [1.0, 100.0])
    assert img.clipped == 1 and img.grid[1, 0] == 0
