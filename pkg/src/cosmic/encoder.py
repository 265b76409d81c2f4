"""Sequential construction of zone-orthogonal, data-carrying waveforms.

Antenna ``n`` picks its precoded vector from the null space of the stacked
zone-lag correlations of every earlier waveform with its own sub-basis, so the
new waveform cannot leak into the zone of the ones already fixed.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .modulation import Constellation, SymbolFrame
from .waveforms import (BasisFamily, PartitionStrategy, SubBasis, WaveformSet, ZoneMode,
                        build_crosscorr_matrix, build_master_basis, partition_subbases, zone_lags)

log = logging.getLogger(__name__)

__all__ = ["CosmicConfig", "ConstraintMatrix", "NullSpaceBasis", "InfeasibleError",
           "assemble_constraints", "null_space", "generate_cosmic_set", "feasibility_check",
           "cosmic_subbases"]

NULL_RESIDUAL_TOL = 1e-8

FrameSource = Union[Sequence[SymbolFrame], Callable[[int, int], SymbolFrame], None]


class InfeasibleError(ValueError):
    """The dimension budget leaves no room for a waveform."""


@dataclass(frozen=True)
class CosmicConfig:
    K: int
    N: int
    K_s: int
    K_z: int
    mode: ZoneMode = ZoneMode.PAPER_LITERAL
    basis: BasisFamily = BasisFamily.RANDOM_UNITARY
    partition: PartitionStrategy = PartitionStrategy.CONTIGUOUS
    seed: int = 0
    constellation: Constellation = Constellation.QAM16
    rel_tol: float = 1e-10

    def __post_init__(self):
        object.__setattr__(self, "mode", ZoneMode(self.mode))
        object.__setattr__(self, "basis", BasisFamily(self.basis))
        object.__setattr__(self, "partition", PartitionStrategy(self.partition))
        object.__setattr__(self, "constellation", Constellation(self.constellation))
        for name in ("K", "N", "K_s", "K_z"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be a positive integer")

    @property
    def lag_window(self) -> tuple[int, int]:
        return zone_lags(self.K_z, self.mode)

    def with_(self, **kw) -> "CosmicConfig":
        return replace(self, **kw)


def cosmic_subbases(config: CosmicConfig) -> list[SubBasis]:
    C = build_master_basis(config.K, config.basis, config.seed)
    return partition_subbases(C, config.N, config.K_s, config.partition)


@dataclass(frozen=True)
class ConstraintMatrix:
    blocks: np.ndarray
    antenna_index: int
    rows_per_block: int
    reference_norm: float = 0.0

    @property
    def shape(self):
        return self.blocks.shape


def assemble_constraints(previous: Sequence[np.ndarray], C_n: SubBasis,
                         zone: tuple[int, int]) -> ConstraintMatrix:
    """Stack ``S_i C_n`` for every earlier waveform ``s_i`` (vertically)."""
    lo, hi = zone
    rows = hi - lo + 1
    K_s = C_n.columns.shape[1]
    blocks = [build_crosscorr_matrix(s, zone).rows @ C_n.columns for s in previous]
    B = np.vstack(blocks) if blocks else np.zeros((0, K_s), dtype=complex)
    ref = max((float(np.linalg.norm(s)) for s in previous), default=0.0)
    return ConstraintMatrix(blocks=B, antenna_index=C_n.antenna_index, rows_per_block=rows,
                            reference_norm=ref)


@dataclass(frozen=True)
class NullSpaceBasis:
    columns: np.ndarray
    singular_value_floor: float
    rank: int

    @property
    def dim(self) -> int:
        return self.columns.shape[1]


def _align(V: np.ndarray) -> np.ndarray:
    """Canonical orthonormal basis of ``span(V)``.

    Any unitary rotation of ``V`` spans the same space, and SVD routines do not
    pin the rotation inside a (near-)degenerate singular subspace. Encoder and
    decoder therefore both replace ``V`` by the orthonormal basis of the same
    span closest (Frobenius) to the first ``D`` coordinate axes. This depends on
    the subspace only, so it is stable under perturbations of ``B``.
    """
    D = V.shape[1]
    u, _, vh = np.linalg.svd(V[:D, :].conj().T)
    return V @ (u @ vh)


def null_space(B: ConstraintMatrix | np.ndarray, rel_tol: float = 1e-10) -> NullSpaceBasis:
    """Orthonormal basis of ``Null(B)`` with rank judged relative to ``sigma_max``.

    For a :class:`ConstraintMatrix` the reference is the larger of ``sigma_max``
    and the norm of the constraining waveforms, so a block that is zero up to
    round-off (a lag-0 row between disjoint sub-bases, say) removes nothing.
    """
    antenna, ref = None, 0.0
    if isinstance(B, ConstraintMatrix):
        antenna, ref = B.antenna_index, B.reference_norm
        B = B.blocks
    B = np.asarray(B, dtype=complex)
    if not 0 < rel_tol < 1:
        raise ValueError("rel_tol must lie in (0, 1)")
    if not np.all(np.isfinite(B)):
        raise ValueError("constraint matrix contains non-finite values")
    K_s = B.shape[1]
    if B.shape[0] == 0:
        return NullSpaceBasis(np.eye(K_s, dtype=complex), 0.0, 0)
    _, sv, vh = np.linalg.svd(B, full_matrices=True)
    floor = rel_tol * max(sv[0] if sv.size else 0.0, ref)
    rank = int(np.sum(sv > floor))
    D = K_s - rank
    if D <= 0:
        who = f"antenna {antenna + 1}" if antenna is not None else "this constraint set"
        raise InfeasibleError(
            f"null space is empty for {who} (rank {rank} of {K_s}); "
            "use a smaller zone length K_z or fewer antennas")
    V = vh[rank:].conj().T
    return NullSpaceBasis(_align(V), float(floor), rank)


def _resolve_frame(frames: FrameSource, n: int, D: int, config: CosmicConfig,
                   rng: np.random.Generator) -> SymbolFrame:
    if frames is None:
        return SymbolFrame.random(D, config.constellation, rng)
    if callable(frames):
        return frames(n, D)
    return frames[n]


def generate_cosmic_set(config: CosmicConfig, frames: FrameSource = None,
                        data_seed: Optional[int] = None) -> WaveformSet:
    """Build the N waveforms one antenna at a time.

    ``frames`` is a sequence of per-antenna ``SymbolFrame`` objects, a callable
    ``(n, D_n) -> SymbolFrame`` or ``None`` for random data drawn from
    ``data_seed``. Capacities ``D_n`` come from the computed null-space rank;
    the closed-form count is only logged as a prediction.
    """
    report = feasibility_check(config.K, config.N, config.K_s, config.K_z, config.mode)
    if not report["partition_ok"]:
        raise InfeasibleError("; ".join(report["reasons"]))
    subs = cosmic_subbases(config)
    window = config.lag_window
    rng = np.random.default_rng(config.seed + 1 if data_seed is None else data_seed)
    waveforms, capacities, scales, used = [], [], [], []
    for n, C_n in enumerate(subs):
        B = assemble_constraints(waveforms, C_n, window)
        ns = null_space(B, config.rel_tol)
        D = ns.dim
        frame = _resolve_frame(frames, n, D, config, rng)
        if len(frame) != D:
            raise ValueError(f"antenna {n + 1} expects {D} symbols, frame has {len(frame)}")
        x_p = ns.columns @ frame.symbols
        s = C_n.columns @ x_p
        energy = np.linalg.norm(s)
        if energy == 0:
            raise ValueError(f"antenna {n + 1} carries an all-zero symbol vector")
        waveforms.append(s / energy)
        capacities.append(D)
        scales.append(1.0 / energy)
        used.append(frame)
    predicted = report["predicted"]
    if list(predicted) != capacities:
        log.info("computed capacities %s differ from closed-form prediction %s",
                 capacities, predicted)
    return WaveformSet(
        waveforms=np.array(waveforms), family="cosmic", zone=config.K_z, mode=config.mode,
        capacities=tuple(capacities), scales=tuple(scales), basis_family=config.basis.value,
        seed=config.seed,
        extra={"K_s": config.K_s, "partition": config.partition.value,
               "constellation": config.constellation.value, "predicted_capacities": list(predicted)},
        frames=tuple(used))


def feasibility_check(K: int, N: int, K_s: int, K_z: int,
                      mode: ZoneMode | str = ZoneMode.PAPER_LITERAL) -> dict:
    """Dimension budget per antenna; report only, never raises on infeasibility.

    ``predicted`` removes ``zone_lag_count - 1`` dimensions per earlier antenna
    (the lag-0 row vanishes because sub-bases are mutually orthogonal), which
    for paper-literal zones is ``K_s - (n-1)(K_z-1)``. ``conservative`` removes
    every zone lag.
    """
    mode = ZoneMode(mode)
    for name, v in (("K", K), ("N", N), ("K_s", K_s), ("K_z", K_z)):
        if int(v) != v or v < 1:
            raise ValueError(f"{name} must be a positive integer, got {v}")
    lo, hi = zone_lags(K_z, mode)
    count = hi - lo + 1
    predicted = [K_s - n * (count - 1) for n in range(N)]
    conservative = [K_s - n * count for n in range(N)]
    reasons = []
    partition_ok = N * K_s <= K
    if not partition_ok:
        reasons.append(f"N*K_s = {N * K_s} exceeds K = {K}")
    if K_z > K:
        reasons.append(f"K_z = {K_z} exceeds K = {K}")
    first_bad = next((n + 1 for n, d in enumerate(predicted) if d < 1), None)
    if first_bad is not None:
        reasons.append(f"predicted null-space dimension {predicted[first_bad - 1]} < 1 "
                       f"at antenna {first_bad}")
    return {
        "K": K, "N": N, "K_s": K_s, "K_z": K_z, "mode": mode.value,
        "zone_lag_count": count,
        "predicted": predicted,
        "conservative": conservative,
        "partition_ok": partition_ok,
        "first_infeasible_antenna": first_bad,
        "feasible": not reasons,
        "reasons": reasons,
    }
