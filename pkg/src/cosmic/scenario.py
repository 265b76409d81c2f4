"""Scenario configuration, end-to-end pipeline and parameter sweeps.

A scenario is one JSON document. Every section has defaults, unknown keys are
rejected, and validation collects every problem before anything runs. The
pipeline is generate -> channel -> receivers -> metrics; each stage writes its
artifacts atomically, and a manifest records the normalized config, its hash,
the seeds and a digest of every file so a run can be replayed from the
manifest alone.
"""
from __future__ import annotations

import copy
import csv
import dataclasses
import hashlib
import io as _io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from . import io as cio
from .baselines import Allocation, generate_ofdm_set, generate_zero_shift_set
from .channel import (CommChannel, PathlossMode, RadarGeometry, RasterScene, SceneModel,
                      comm_receive, imaging_receive, noise_variance_for_snr, pathloss_gain)
from .encoder import CosmicConfig, feasibility_check, generate_cosmic_set
from .metrics import (MetricsReport, correct_fraction, image_snr, islr, mainlobe_halfwidth_bins,
                      spectral_efficiency)
from .modulation import Constellation, SymbolFrame, demap_symbols
from .receivers import (backproject, comm_decode, decode_report, ofdm_decode, pilot_symbols,
                        range_compress)
from .waveforms import BasisFamily, PartitionStrategy, WaveformSet, ZoneMode, max_pair_residual

log = logging.getLogger(__name__)

__all__ = ["ConfigError", "ScenarioConfig", "load_config", "load_preset", "preset_names",
           "validate", "config_hash", "run_scenario", "evaluate", "run_sweep", "SWEEP_AXES",
           "FAMILIES", "STAGES"]

FAMILIES = ("cosmic", "ofdm", "zero_shift")
SWEEP_AXES = ("N", "snr_db", "K_z", "d")
STAGES = ("waveforms", "simulate", "image", "decode", "metrics")
N_PILOTS = 4


class ConfigError(ValueError):
    """Validation failed; ``errors`` lists every violated constraint."""

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("invalid scenario:\n  - " + "\n  - ".join(self.errors))


@dataclass
class WaveformSpec:
    family: str = "cosmic"
    K: int = 1024
    N: int = 4
    K_s: Optional[int] = None  # None -> K // N
    K_z: int = 16
    mode: str = "paper_literal"
    basis: str = "random_unitary"
    partition: str = "contiguous"
    constellation: str = "qam16"
    allocation: str = "interleaved"
    constant_modulus: bool = False
    rel_tol: float = 1e-10

    @property
    def subbasis_size(self) -> int:
        return self.K_s if self.K_s is not None else self.K // max(self.N, 1)


@dataclass
class GeometrySpec:
    M: int = 4
    f0: float = 77e9
    bandwidth: float = 200e6
    layout: str = "default"  # default | colocated | explicit
    tx_positions: Optional[list] = None
    rx_positions: Optional[list] = None


@dataclass
class RasterSpec:
    x: list = field(default_factory=lambda: [-6.0, 6.0])
    y: list = field(default_factory=lambda: [1.5, 10.0])
    spacing: float = 0.25
    rectangles: list = field(default_factory=list)  # [x0, x1, y0, y1] each
    amplitude: float = 1.0


@dataclass
class SceneSpec:
    points: Optional[list] = None
    file: Optional[str] = None
    raster: Optional[RasterSpec] = None
    compensate_spreading: bool = False
    signal_radius: Optional[float] = None  # metres; None -> one range cell


@dataclass
class ChannelSpec:
    snr_db: Optional[float] = 20.0  # None -> derive from path loss
    G: float = 1.0
    d: float = 10.0
    N0: float = 4e-21
    tx_power: float = 0.1
    pathloss: str = "friis"
    equalization: str = "genie"
    imaging_noise_var: float = 0.0


@dataclass
class ImagingSpec:
    x: Optional[list] = None
    y: Optional[list] = None
    spacing: Optional[float] = None
    oversample: int = 4
    guard: int = 4
    floor_db: float = -40.0
    calibration: float = 1.0


@dataclass
class MetricsSpec:
    islr: bool = True
    image_snr: bool = True
    se: bool = True
    ser: bool = True
    residual: bool = True
    image_guard: int = 0


@dataclass
class SeedSpec:
    waveform: int = 0
    data: int = 1
    noise: int = 2
    speckle: int = 3

    @classmethod
    def from_base(cls, seed: int) -> "SeedSpec":
        w, d, n, s = (int(v) for v in np.random.SeedSequence(int(seed)).generate_state(4))
        return cls(w, d, n, s)


@dataclass
class SweepSpec:
    axis: Optional[str] = None
    values: list = field(default_factory=list)
    families: list = field(default_factory=lambda: ["cosmic"])
    seeds: Optional[list] = None  # base seeds; None -> the scenario seeds only
    workers: int = 1


@dataclass
class ScenarioConfig:
    name: str = "scenario"
    waveform: WaveformSpec = field(default_factory=WaveformSpec)
    geometry: GeometrySpec = field(default_factory=GeometrySpec)
    scene: SceneSpec = field(default_factory=SceneSpec)
    channel: ChannelSpec = field(default_factory=ChannelSpec)
    imaging: ImagingSpec = field(default_factory=ImagingSpec)
    metrics: MetricsSpec = field(default_factory=MetricsSpec)
    seeds: SeedSpec = field(default_factory=SeedSpec)
    sweep: SweepSpec = field(default_factory=SweepSpec)
    output: Optional[str] = None
    base_dir: Optional[str] = field(default=None, compare=False, repr=False)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("base_dir")
        return d

    def replace(self, **sections) -> "ScenarioConfig":
        return dataclasses.replace(copy.deepcopy(self), **sections)


# ---------------------------------------------------------------- parsing

_NESTED = {
    (ScenarioConfig, "waveform"): WaveformSpec, (ScenarioConfig, "geometry"): GeometrySpec,
    (ScenarioConfig, "scene"): SceneSpec, (ScenarioConfig, "channel"): ChannelSpec,
    (ScenarioConfig, "imaging"): ImagingSpec, (ScenarioConfig, "metrics"): MetricsSpec,
    (ScenarioConfig, "seeds"): SeedSpec, (ScenarioConfig, "sweep"): SweepSpec,
    (SceneSpec, "raster"): RasterSpec,
}


def _type_ok(value, default) -> bool:
    if default is None or value is None:
        return True
    if isinstance(default, bool):
        return isinstance(value, bool)
    if isinstance(default, int):
        return isinstance(value, int) and not isinstance(value, bool)
    if isinstance(default, float):
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    return isinstance(value, type(default))


def _parse(cls, data, where: str, errors: list):
    if not isinstance(data, dict):
        errors.append(f"{where or 'config'}: expected an object, got {type(data).__name__}")
        return cls()
    proto = cls()
    names = {f.name for f in dataclasses.fields(cls) if f.name != "base_dir"}
    kwargs = {}
    for key, value in data.items():
        path = f"{where}.{key}" if where else key
        if key not in names:
            errors.append(f"{path}: unknown key")
            continue
        if (cls, key) in _NESTED and value is not None:
            kwargs[key] = _parse(_NESTED[cls, key], value, path, errors)
            continue
        if not _type_ok(value, getattr(proto, key)):
            errors.append(f"{path}: expected {type(getattr(proto, key)).__name__}, "
                          f"got {type(value).__name__}")
            continue
        if isinstance(getattr(proto, key), float) and isinstance(value, int):
            value = float(value)  # 20 and 20.0 hash alike
        kwargs[key] = value
    return cls(**kwargs)


def _enum_ok(value, enum_cls, path, errors):
    try:
        enum_cls(value)
    except ValueError:
        errors.append(f"{path}: {value!r} is not one of {[e.value for e in enum_cls]}")


def validate(cfg: ScenarioConfig, check_feasibility: bool = True) -> list[str]:
    """Every violated constraint of a parsed config (empty list when valid)."""
    errors = []
    w, g, sc, ch, im = cfg.waveform, cfg.geometry, cfg.scene, cfg.channel, cfg.imaging
    if w.family not in FAMILIES:
        errors.append(f"waveform.family: {w.family!r} is not one of {list(FAMILIES)}")
    for name in ("K", "N", "K_z"):
        if getattr(w, name) < 1:
            errors.append(f"waveform.{name}: must be a positive integer")
    if w.K_s is not None and w.K_s < 1:
        errors.append("waveform.K_s: must be a positive integer or null")
    if w.N > w.K:
        errors.append(f"waveform.N: {w.N} antennas exceed K = {w.K}")
    if not 0 < w.rel_tol < 1:
        errors.append("waveform.rel_tol: must lie in (0, 1)")
    _enum_ok(w.mode, ZoneMode, "waveform.mode", errors)
    _enum_ok(w.basis, BasisFamily, "waveform.basis", errors)
    _enum_ok(w.partition, PartitionStrategy, "waveform.partition", errors)
    _enum_ok(w.constellation, Constellation, "waveform.constellation", errors)
    _enum_ok(w.allocation, Allocation, "waveform.allocation", errors)
    if w.basis == "hadamard" and w.K & (w.K - 1):
        errors.append(f"waveform.basis: Hadamard needs K to be a power of two, got {w.K}")

    if g.M < 1:
        errors.append("geometry.M: must be a positive integer")
    if g.f0 <= 0 or g.bandwidth <= 0:
        errors.append("geometry: f0 and bandwidth must be positive")
    if g.layout not in ("default", "colocated", "explicit"):
        errors.append(f"geometry.layout: {g.layout!r} is not one of ['default', 'colocated', 'explicit']")
    if g.layout == "explicit":
        for key, count in (("tx_positions", w.N), ("rx_positions", g.M)):
            pos = getattr(g, key)
            if pos is None or np.shape(pos) != (count, 2):
                errors.append(f"geometry.{key}: explicit layout needs {count} [x, y] pairs")

    sources = [s for s in ("points", "file", "raster") if getattr(sc, s) is not None]
    if len(sources) != 1:
        errors.append(f"scene: give exactly one of points, file, raster (got {sources or 'none'})")
    if sc.points is not None:
        for i, p in enumerate(sc.points):
            if not isinstance(p, dict) or not {"x", "y"} <= set(p) or set(p) - {"x", "y", "re", "im"}:
                errors.append(f"scene.points[{i}]: expected {{x, y, re, im}}")
    if sc.raster is not None:
        r = sc.raster
        if len(r.x) != 2 or len(r.y) != 2 or r.x[0] >= r.x[1] or r.y[0] >= r.y[1]:
            errors.append("scene.raster: x and y must be increasing [min, max] pairs")
        if r.spacing <= 0:
            errors.append("scene.raster.spacing: must be positive")
        if not r.rectangles or any(len(q) != 4 for q in r.rectangles):
            errors.append("scene.raster.rectangles: need at least one [x0, x1, y0, y1]")
    if sc.file is not None:
        p = _resolve(cfg, sc.file)
        if not p.exists():
            errors.append(f"scene.file: {p} does not exist")

    if ch.snr_db is None and (ch.G <= 0 or ch.d <= 0 or ch.N0 <= 0 or ch.tx_power <= 0):
        errors.append("channel: path-loss mode needs positive G, d, N0 and tx_power")
    _enum_ok(ch.pathloss, PathlossMode, "channel.pathloss", errors)
    if ch.equalization not in ("genie", "pilot"):
        errors.append("channel.equalization: must be 'genie' or 'pilot'")
    if ch.imaging_noise_var < 0:
        errors.append("channel.imaging_noise_var: must be nonnegative")

    if im.oversample < 1 or im.guard < 0:
        errors.append("imaging: oversample >= 1 and guard >= 0 required")
    if im.floor_db >= 0:
        errors.append("imaging.floor_db: must be negative")
    if (im.x is None) != (im.y is None) or (im.x is not None and im.spacing is None):
        errors.append("imaging: x, y and spacing must be given together")
    if cfg.metrics.image_guard < 0:
        errors.append("metrics.image_guard: must be nonnegative")

    sw = cfg.sweep
    if sw.axis is not None and sw.axis not in SWEEP_AXES:
        errors.append(f"sweep.axis: {sw.axis!r} is not sweepable; choose one of {list(SWEEP_AXES)}")
    if sw.axis == "d" and ch.snr_db is not None:
        errors.append("sweep.axis: sweeping d needs the path-loss channel (channel.snr_db = null)")
    bad = [f for f in sw.families if f not in FAMILIES]
    if bad:
        errors.append(f"sweep.families: unknown {bad}")
    if sw.workers < 1:
        errors.append("sweep.workers: must be >= 1")

    if check_feasibility and not errors:
        errors.extend(_feasibility_errors(w))
    return errors


def _feasibility_errors(w: WaveformSpec) -> list[str]:
    if w.family != "cosmic":
        return []
    rep = feasibility_check(w.K, w.N, w.subbasis_size, w.K_z, w.mode)
    if rep["feasible"]:
        return []
    budget = ", ".join(f"D_{n + 1}={d}" for n, d in enumerate(rep["predicted"]))
    return [f"waveform: infeasible COSMIC configuration ({r})" for r in rep["reasons"]] + [
        f"waveform: per-antenna dimension budget [{budget}]; reduce K_z or N, or enlarge K"]


def _resolve(cfg: ScenarioConfig, p: str) -> Path:
    path = Path(p)
    if not path.is_absolute() and cfg.base_dir:
        path = Path(cfg.base_dir) / path
    return path


def parse_config(data: dict, base_dir: Optional[str] = None, check_feasibility: bool = True) -> ScenarioConfig:
    errors: list[str] = []
    cfg = _parse(ScenarioConfig, data, "", errors)
    cfg.base_dir = base_dir
    if not errors and cfg.scene.file is not None and base_dir is not None:
        cfg.scene.file = str(_resolve(cfg, cfg.scene.file))
    if not errors:
        errors = validate(cfg, check_feasibility)
    if errors:
        raise ConfigError(errors)
    return cfg


def preset_names() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("cosmic.presets").iterdir()
                  if p.name.endswith(".json"))


def load_preset(name: str, check_feasibility: bool = True) -> ScenarioConfig:
    try:
        text = resources.files("cosmic.presets").joinpath(f"{name}.json").read_text()
    except FileNotFoundError:
        raise ConfigError([f"no preset named {name!r}; available: {preset_names()}"]) from None
    return parse_config(json.loads(text), None, check_feasibility)


def load_config(source, check_feasibility: bool = True) -> ScenarioConfig:
    """Load a scenario from a path, a bundled preset name, a run manifest or a dict."""
    if isinstance(source, ScenarioConfig):
        errors = validate(source, check_feasibility)
        if errors:
            raise ConfigError(errors)
        return source
    if isinstance(source, dict):
        return parse_config(source, None, check_feasibility)
    path = Path(source)
    if not path.exists():
        if str(source) in preset_names():
            return load_preset(str(source), check_feasibility)
        raise ConfigError([f"config {source} not found (and not a preset: {preset_names()})"])
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: not valid JSON ({exc})"]) from None
    if isinstance(data, dict) and "config_sha256" in data and "config" in data:
        data = data["config"]  # a run manifest
    return parse_config(data, str(path.parent.resolve()), check_feasibility)


def config_hash(cfg: ScenarioConfig) -> str:
    """SHA-256 of the canonical JSON of the normalized config (output dir excluded)."""
    d = cfg.to_dict()
    d.pop("output", None)
    text = json.dumps(d, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


# ---------------------------------------------------------------- pipeline

def cosmic_config(cfg: ScenarioConfig) -> CosmicConfig:
    w = cfg.waveform
    return CosmicConfig(K=w.K, N=w.N, K_s=w.subbasis_size, K_z=w.K_z, mode=w.mode, basis=w.basis,
                        partition=w.partition, seed=cfg.seeds.waveform,
                        constellation=w.constellation, rel_tol=w.rel_tol)


def build_waveforms(cfg: ScenarioConfig) -> WaveformSet:
    w = cfg.waveform
    if w.family == "cosmic":
        frames = None
        if cfg.channel.equalization == "pilot":
            rng = np.random.default_rng(cfg.seeds.data)
            _, pilot_bits = demap_symbols(pilot_symbols(N_PILOTS, w.constellation), w.constellation)

            def frames(n, D):
                if D <= N_PILOTS:
                    raise ValueError(f"antenna {n + 1} carries {D} symbols, too few for {N_PILOTS} pilots")
                data = SymbolFrame.random(D - N_PILOTS, w.constellation, rng)
                return SymbolFrame.from_bits(np.concatenate([pilot_bits, data.bits]), w.constellation)
        return generate_cosmic_set(cosmic_config(cfg), frames=frames, data_seed=cfg.seeds.data)
    if w.family == "ofdm":
        return generate_ofdm_set(w.K, w.N, allocation=w.allocation, constellation=w.constellation,
                                 seed=cfg.seeds.data)
    return generate_zero_shift_set(w.K, w.N, seed=cfg.seeds.data, constant_modulus=w.constant_modulus)


def build_geometry(cfg: ScenarioConfig) -> RadarGeometry:
    g, N = cfg.geometry, cfg.waveform.N
    if g.layout == "colocated":
        return RadarGeometry.colocated(N, g.M, g.f0, g.bandwidth)
    if g.layout == "explicit":
        return RadarGeometry(g.f0, g.bandwidth, g.tx_positions, g.rx_positions)
    return RadarGeometry.default_layout(N, g.M, g.f0, g.bandwidth)


def build_scene(cfg: ScenarioConfig) -> SceneModel:
    sc = cfg.scene
    if sc.points is not None:
        scene = SceneModel([[p["x"], p["y"]] for p in sc.points],
                           [complex(p.get("re", 1.0), p.get("im", 0.0)) for p in sc.points])
    elif sc.file is not None:
        scene = cio.read_scene(_resolve(cfg, sc.file), cfg.seeds.speckle)
    else:
        r = sc.raster
        x = np.arange(r.x[0], r.x[1] + 1e-9, r.spacing)
        y = np.arange(r.y[0], r.y[1] + 1e-9, r.spacing)
        X, Y = np.meshgrid(x, y)
        mask = np.zeros(X.shape, bool)
        for x0, x1, y0, y1 in r.rectangles:
            mask |= (X >= x0) & (X <= x1) & (Y >= y0) & (Y <= y1)
        raster = RasterScene(mask * float(r.amplitude), (float(x[0]), float(y[0])),
                             (r.spacing, r.spacing), mask)
        scene = SceneModel.from_raster(raster, cfg.seeds.speckle)
    if sc.compensate_spreading:
        R = np.linalg.norm(scene.positions, axis=1)
        scene = SceneModel(scene.positions, scene.reflectivity * R ** 2, scene.raster)
    return scene


@dataclass(frozen=True)
class LinkBudget:
    """Per-antenna gains and the SE inputs ``P``, ``N0``, ``B`` for one scenario."""

    gains: np.ndarray
    snr_db: float
    P: float
    N0: float
    B: float


def link_budget(cfg: ScenarioConfig) -> LinkBudget:
    ch, N, K = cfg.channel, cfg.waveform.N, cfg.waveform.K
    if ch.snr_db is not None:
        P = 1.0 / K
        return LinkBudget(np.ones(N, complex), float(ch.snr_db), P, P / 10 ** (ch.snr_db / 10), 1.0)
    lam = 299_792_458.0 / cfg.geometry.f0
    h = pathloss_gain(ch.G, lam, ch.d, ch.pathloss)
    B = cfg.geometry.bandwidth
    snr = abs(h) ** 2 * ch.tx_power / (ch.N0 * B)
    return LinkBudget(np.full(N, h), float(10 * np.log10(snr)), ch.tx_power, ch.N0, B)


def imaging_grid(cfg: ScenarioConfig, scene: SceneModel, geom: RadarGeometry):
    im = cfg.imaging
    if im.x is not None:
        return (np.arange(im.x[0], im.x[1] + 1e-9, im.spacing),
                np.arange(im.y[0], im.y[1] + 1e-9, im.spacing))
    if scene.raster is not None:
        return scene.raster.x, scene.raster.y
    step = geom.range_resolution / 3
    lo = scene.positions.min(axis=0) - 2.0
    hi = scene.positions.max(axis=0) + 2.0
    return np.arange(lo[0], hi[0] + 1e-9, step), np.arange(max(lo[1], step), hi[1] + 1e-9, step)


def signal_mask(cfg: ScenarioConfig, scene: SceneModel, geom: RadarGeometry, x, y) -> np.ndarray:
    """Raster signal flags when the image grid is the raster grid, otherwise
    every pixel within ``signal_radius`` of a scatterer."""
    r = scene.raster
    if (r is not None and len(x) == r.shape[1] and len(y) == r.shape[0]
            and np.allclose(x, r.x) and np.allclose(y, r.y)):
        return np.asarray(r.signal_mask, bool)
    pts = scene.positions[np.abs(scene.reflectivity) > 0]
    X, Y = np.meshgrid(x, y)
    if pts.size == 0:
        return np.zeros(X.shape, bool)
    radius = cfg.scene.signal_radius or geom.range_resolution
    dist, _ = cKDTree(pts).query(np.column_stack([X.ravel(), Y.ravel()]))
    return (dist <= radius).reshape(X.shape)


@dataclass
class RunState:
    """Everything a pipeline run produced; unused stages stay ``None``."""

    config: ScenarioConfig
    wset: Optional[WaveformSet] = None
    geom: Optional[RadarGeometry] = None
    scene: Optional[SceneModel] = None
    budget: Optional[LinkBudget] = None
    comm_rx: Optional[np.ndarray] = None
    raw: Optional[np.ndarray] = None
    cube: Any = None
    image: Any = None
    mask: Optional[np.ndarray] = None
    decode: Optional[dict] = None
    metrics: Optional[MetricsReport] = None


def _decode(cfg: ScenarioConfig, st: RunState) -> Optional[dict]:
    w = st.wset
    if w.family == "cosmic":
        pilot = cfg.channel.equalization == "pilot"
        res = comm_decode(st.comm_rx, cosmic_config(cfg), w.scales, w.capacities, st.budget.gains,
                          equalization=cfg.channel.equalization, n_pilots=N_PILOTS)
        rep = decode_report(w.frames, res.frames, skip=N_PILOTS if pilot else 0)
        rep["slots"] = w.N * cfg.waveform.subbasis_size
    elif w.family == "ofdm":
        res = ofdm_decode(st.comm_rx, w, st.budget.gains)
        rep = decode_report(w.frames, res.frames)
        rep["slots"] = int(sum(len(s) for s in w.extra["subcarriers"]))
    else:
        return None
    rep["family"] = w.family
    rep["equalization"] = cfg.channel.equalization if w.family == "cosmic" else "genie"
    return rep


def _metrics(cfg: ScenarioConfig, st: RunState) -> MetricsReport:
    w, ms = st.wset, cfg.metrics
    rep = MetricsReport(fingerprint=config_hash(cfg))
    extra = {"family": w.family, "N": w.N, "K": w.K, "K_z": cfg.waveform.K_z,
             "mode": cfg.waveform.mode, "snr_db": st.budget.snr_db}
    if w.family != "zero_shift":
        extra["symbols"] = int(sum(w.capacities))
        extra["capacities"] = list(w.capacities)
    if ms.residual:
        rep.residual_max = max_pair_residual(w, cfg.waveform.K_z, cfg.waveform.mode)
    if ms.islr and st.cube is not None:
        prof = np.sqrt(np.mean(np.abs(st.cube.data) ** 2, axis=(0, 1)))
        if prof.max() > 0:
            rep.islr_db = islr(prof, mainlobe_halfwidth_bins(st.cube.oversample))
    if ms.image_snr and st.image is not None and st.mask is not None and st.mask.any():
        rep.snr_image_db = image_snr(st.image, st.mask, guard=ms.image_guard)
        extra["clipped"] = st.image.clipped
    b = st.budget
    extra["se_bound"] = spectral_efficiency(b.gains, b.P, b.N0, b.B, 1.0, 1.0)
    if st.decode is not None:
        if ms.ser:
            rep.ser = st.decode["ser"]
            extra["ber"] = st.decode["ber"]
        if ms.se:
            beta = 1.0 if w.family == "cosmic" else 1.0 / w.N
            eta = correct_fraction(st.decode, st.decode["slots"])
            extra["eta"] = eta
            extra["beta"] = beta
            rep.se_bits_per_s_per_hz = spectral_efficiency(b.gains, b.P, b.N0, b.B, beta, eta)
    rep.extra = extra
    return rep


def evaluate(config, stage: str = "metrics") -> RunState:
    """Run the pipeline in memory up to ``stage`` (one of :data:`STAGES`)."""
    if stage not in STAGES:
        raise ValueError(f"unknown stage {stage!r}; choose one of {list(STAGES)}")
    cfg = load_config(config)
    st = RunState(cfg, wset=build_waveforms(cfg))
    if stage == "waveforms":
        return st
    want_image = stage == "image" or (stage == "metrics" and (cfg.metrics.islr or cfg.metrics.image_snr))
    want_comm = stage in ("simulate", "decode", "metrics")
    st.budget = link_budget(cfg)
    if want_comm:
        var = noise_variance_for_snr(st.budget.snr_db, st.budget.gains[0], cfg.waveform.K)
        st.comm_rx = comm_receive(st.wset, CommChannel(st.budget.gains, var), cfg.seeds.noise)
    if stage in ("simulate", "image") or want_image:
        st.geom = build_geometry(cfg)
        st.scene = build_scene(cfg)
        st.raw = imaging_receive(st.wset, st.geom, st.scene, noise_seed=cfg.seeds.noise,
                                 noise_var=cfg.channel.imaging_noise_var,
                                 calibration=cfg.imaging.calibration)
    if want_image:
        im = cfg.imaging
        window = (-im.guard, cfg.waveform.K_z - 1 + im.guard)
        st.cube = range_compress(st.raw, st.wset, window, st.geom.T_s, im.oversample)
        x, y = imaging_grid(cfg, st.scene, st.geom)
        st.image = backproject(st.cube, st.geom, x, y)
        st.mask = signal_mask(cfg, st.scene, st.geom, x, y)
    if stage in ("decode", "metrics"):
        st.decode = _decode(cfg, st)
    if stage == "metrics":
        st.metrics = _metrics(cfg, st)
    return st


def _flat(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        if isinstance(v, dict):
            out.update(_flat(v, f"{prefix}{k}."))
        elif isinstance(v, (list, tuple)):
            out[prefix + k] = " ".join(str(x) for x in v)
        else:
            out[prefix + k] = v
    return out


def _csv_rows(rows: list[dict]) -> str:
    cols: list[str] = []
    for r in rows:
        cols.extend(k for k in r if k not in cols)
    buf = _io.StringIO()
    wr = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    wr.writeheader()
    for r in rows:
        wr.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in cols})
    return buf.getvalue()


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run_scenario(config, out=None, stage: str = "metrics") -> Path:
    """Run the pipeline up to ``stage`` and write its artifacts plus a manifest.

    Returns the artifact directory. Outputs are byte-identical for identical
    configs.
    """
    from . import __version__
    cfg = load_config(config)
    out = Path(out or cfg.output or Path("runs") / cfg.name)
    st = evaluate(cfg, stage)
    written: list[Path] = []
    written.append(cio.write_waveforms(out / "waveforms.csv", st.wset))
    written.append(out / "waveforms.json")
    if st.scene is not None:
        written.append(cio.write_scene_json(out / "scene.json", st.scene))
        if st.scene.raster is not None:
            written += [cio.write_mask_pgm(out / "scene_mask.pgm", st.scene.raster), out / "scene_mask.json"]
    if st.comm_rx is not None:
        written.append(cio.write_raw_csv(out / "comm_rx.csv", st.comm_rx[None, :]))
    if st.raw is not None:
        written.append(cio.write_raw_csv(out / "raw.csv", st.raw))
        written.append(cio.write_raw_binary(out / "raw.bin", st.raw,
                                            {"sampling_interval": st.geom.T_s, "f0": st.geom.f0}))
        written.append(out / "raw.json")
    if st.image is not None:
        written += list(cio.write_image(out / "image", st.image, cfg.imaging.floor_db))
    if st.decode is not None:
        written.append(cio.write_json(out / "decode.json", st.decode))
    if st.metrics is not None:
        d = st.metrics.as_dict()
        written.append(cio.write_json(out / "metrics.json", d))
        written.append(cio.atomic_write(out / "metrics.csv", _csv_rows([_flat(d)])))
    written.append(cio.write_json(out / "config.json", cfg.to_dict()))
    manifest = {
        "toolkit": "cosmic", "version": __version__, "stage": stage,
        "config_sha256": config_hash(cfg), "config": cfg.to_dict(),
        "seeds": dataclasses.asdict(cfg.seeds),
        "artifacts": {p.name: _sha256(p) for p in sorted(written)},
    }
    cio.write_json(out / "manifest.json", manifest)
    log.info("wrote %d artifacts to %s", len(written), out)
    return out


# ---------------------------------------------------------------- sweeps

def _apply_axis(d: dict, axis: str, value):
    if axis == "N":
        d["waveform"]["N"] = int(value)
    elif axis == "K_z":
        d["waveform"]["K_z"] = int(value)
    elif axis == "snr_db":
        d["channel"]["snr_db"] = float(value)
    else:
        d["channel"]["d"] = float(value)


_ROW_KEYS = ("islr_db", "snr_image_db", "se_bits_per_s_per_hz", "ser", "residual_max")
_ROW_EXTRA = ("symbols", "ber", "eta", "se_bound", "snr_db")


def _sweep_point(args) -> dict:
    base, axis, value, family, seed, base_dir = args
    d = copy.deepcopy(base)
    d["waveform"]["family"] = family
    _apply_axis(d, axis, value)
    if seed is not None:
        d["seeds"] = dataclasses.asdict(SeedSpec.from_base(seed))
    row = {"axis": axis, "value": value, "family": family, "seed": seed}
    try:
        cfg = parse_config(d, base_dir)
        m = evaluate(cfg, "metrics").metrics
        row.update({k: getattr(m, k) for k in _ROW_KEYS})
        row.update({k: m.extra.get(k) for k in _ROW_EXTRA})
        row["fingerprint"] = m.fingerprint
        row["error"] = ""
    except ConfigError as exc:
        row["error"] = "; ".join(exc.errors)
    except Exception as exc:  # per-row failure, the sweep carries on
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def _summary(rows: list[dict]) -> list[dict]:
    groups: dict = {}
    for r in rows:
        groups.setdefault((r["family"], r["value"]), []).append(r)
    out = []
    for (family, value), rs in groups.items():
        s = {"axis": rs[0]["axis"], "value": value, "family": family, "runs": len(rs),
             "failures": sum(1 for r in rs if r["error"])}
        for k in _ROW_KEYS + _ROW_EXTRA:
            vals = np.array([r[k] for r in rs if not r["error"] and r.get(k) is not None], float)
            s[f"{k}_mean"] = float(vals.mean()) if vals.size else None
            s[f"{k}_std"] = float(vals.std(ddof=1)) if vals.size > 1 else None
        out.append(s)
    return out


def run_sweep(config, axis: Optional[str] = None, values: Optional[Sequence] = None,
              families: Optional[Sequence[str]] = None, seeds: Optional[Sequence[int]] = None,
              out=None, workers: Optional[int] = None) -> list[dict]:
    """Evaluate the scenario at every (family, value, seed) point.

    Arguments override the config's ``sweep`` section. One row per point is
    written to ``sweep.csv``; failing points carry their error message. With
    more than one seed, ``sweep_summary.csv`` adds per-point mean and sample
    standard deviation.
    """
    cfg = load_config(config, check_feasibility=False)
    sw = cfg.sweep
    axis = axis or sw.axis
    values = list(values if values is not None else sw.values)
    families = list(families or sw.families)
    seeds = list(seeds) if seeds is not None else (list(sw.seeds) if sw.seeds else [None])
    workers = workers or sw.workers
    errors = []
    if axis not in SWEEP_AXES:
        errors.append(f"sweep axis {axis!r} is not sweepable; choose one of {list(SWEEP_AXES)}")
    if not values:
        errors.append("sweep needs at least one value")
    if axis == "d" and cfg.channel.snr_db is not None:
        errors.append("sweeping d needs the path-loss channel (channel.snr_db = null)")
    bad = [f for f in families if f not in FAMILIES]
    if bad:
        errors.append(f"unknown families {bad}")
    if errors:
        raise ConfigError(errors)
    base = cfg.to_dict()
    points = [(base, axis, v, f, s, cfg.base_dir) for f in families for v in values for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_point, points))
    else:
        rows = [_sweep_point(p) for p in points]
    if out is not None:
        out = Path(out)
        cio.atomic_write(out / "sweep.csv", _csv_rows(rows))
        if len(seeds) > 1:
            cio.atomic_write(out / "sweep_summary.csv", _csv_rows(_summary(rows)))
    return rows
