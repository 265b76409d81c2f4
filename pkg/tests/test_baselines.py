import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cosmic import (SymbolFrame, WaveformSet, generate_ofdm_set, generate_zero_shift_set, ofdm_plan,
                    zone_residual)
from cosmic.baselines import OfdmPlan


def _off_diag(res):
    return res[~np.eye(res.shape[0], dtype=bool)]


def test_ofdm_n2_k8_zero_cross_correlation_all_lags():
    ws = generate_ofdm_set(8, 2, seed=0)
    res = zone_residual(ws, K_z=8, mode="symmetric", periodic=True)
    assert _off_diag(res).max() < 1e-10


def test_ofdm_without_prefix_leaks_at_nonzero_aperiodic_lags():
    ws = generate_ofdm_set(8, 2, seed=0)
    assert _off_diag(zone_residual(ws, K_z=1)).max() < 1e-10
    assert _off_diag(zone_residual(ws, K_z=8, mode="symmetric")).max() > 1e-3


def test_single_subcarrier_is_constant_modulus():
    plan = OfdmPlan(16, ((3,),), "interleaved")
    ws = generate_ofdm_set(16, 1, frames=[SymbolFrame(np.array([1.0 + 0j]), "qpsk", np.zeros(2, int))],
                           plan=plan)
    np.testing.assert_allclose(np.abs(ws.waveforms[0]), 0.25, atol=1e-14)
    np.testing.assert_allclose(ws.waveforms[0], np.exp(2j * np.pi * 3 * np.arange(16) / 16) / 4,
                               atol=1e-14)


@pytest.mark.parametrize("alloc", ["interleaved", "contiguous"])
def test_ofdm_spectrum_support(alloc):
    ws = generate_ofdm_set(64, 4, allocation=alloc, seed=3)
    for n, idx in enumerate(ws.extra["subcarriers"]):
        X = np.fft.fft(ws.waveforms[n], norm="ortho")
        outside = np.delete(np.abs(X) ** 2, idx)
        assert outside.sum() < 1e-12


def test_ofdm_plan_layouts():
    inter = ofdm_plan(8, 2, "interleaved").subcarriers
    assert inter == ((0, 2, 4, 6), (1, 3, 5, 7))
    contig = ofdm_plan(8, 2, "contiguous").subcarriers
    # lowest baseband frequencies first: bins 4..7 are negative frequencies
    assert contig == ((4, 5, 6, 7), (0, 1, 2, 3))
    assert ofdm_plan(10, 3).per_antenna == 3


def test_ofdm_plan_rejects_overlap_and_bad_n():
    with pytest.raises(ValueError):
        OfdmPlan(8, ((0, 1), (1, 2)), "interleaved")
    with pytest.raises(ValueError):
        ofdm_plan(4, 5)


@settings(max_examples=25, deadline=None)
@given(K=st.integers(4, 128), data=st.data(), seed=st.integers(0, 1000),
       alloc=st.sampled_from(["interleaved", "contiguous"]))
def test_property_ofdm_disjoint_at_all_lags(K, data, seed, alloc):
    N = data.draw(st.integers(2, min(6, K)))
    ws = generate_ofdm_set(K, N, allocation=alloc, seed=seed)
    res = zone_residual(ws, K_z=K, mode="symmetric", normalized=True, periodic=True)
    assert _off_diag(res).max() < 1e-10
    np.testing.assert_allclose(np.linalg.norm(ws.waveforms, axis=1), 1.0)


def test_zero_shift_orthogonal_at_lag0_only():
    ws = generate_zero_shift_set(256, 4, seed=0)
    lag0 = zone_residual(ws, K_z=1)
    assert _off_diag(lag0).max() < 1e-10
    zone = zone_residual(ws, K_z=8)
    assert _off_diag(zone).max() > 1e-3


def test_zero_shift_constant_modulus_option():
    ws = generate_zero_shift_set(64, 3, seed=2, constant_modulus=True)
    np.testing.assert_allclose(np.abs(ws.waveforms), 1 / 8, atol=1e-14)
    assert _off_diag(zone_residual(ws, K_z=1)).max() < 1e-10


def test_zero_shift_full_unitary_set():
    ws = generate_zero_shift_set(16, 16, seed=1)
    W = ws.waveforms
    np.testing.assert_allclose(W @ W.conj().T, np.eye(16), atol=1e-10)
    with pytest.raises(ValueError):
        generate_zero_shift_set(4, 5)


def test_all_families_share_one_type():
    for ws in (generate_ofdm_set(32, 2), generate_zero_shift_set(32, 2)):
        assert isinstance(ws, WaveformSet) and ws.waveforms.shape == (2, 32)
