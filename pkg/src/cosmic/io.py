"""File formats for waveform sets, scenes, raw data cubes and images.

Every writer goes through :func:`atomic_write`, which writes a temporary file
in the destination directory and renames it into place, so readers never see
a half-written artifact. Floats are printed with ``repr`` precision so a
round trip through CSV is exact.
"""
from __future__ import annotations

import csv
import io as _io
import json
import os
import tempfile
from pathlib import Path
from typing import Optional, Union

import numpy as np
from PIL import Image

from .channel import RasterScene, SceneModel
from .receivers import RadarImage
from .waveforms import WaveformSet, ZoneMode

__all__ = ["atomic_write", "write_json", "read_json", "write_waveforms", "read_waveforms",
           "read_scene", "write_scene_json", "write_mask_pgm", "write_raw_csv", "read_raw_csv",
           "write_raw_binary", "read_raw_binary", "write_image", "read_pgm"]

PathLike = Union[str, os.PathLike]


def atomic_write(path: PathLike, data: Union[str, bytes]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = data.encode() if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def write_json(path: PathLike, obj) -> Path:
    return atomic_write(path, json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def read_json(path: PathLike):
    with open(path) as fh:
        return json.load(fh)


def _csv_text(header, rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(v: float) -> str:
    return repr(float(v))


def _sidecar(path: Path) -> Path:
    return path.with_suffix(".json")


def write_waveforms(path: PathLike, wset: WaveformSet) -> Path:
    """CSV ``antenna,sample_index,re,im`` plus a JSON metadata sidecar."""
    path = Path(path)
    w = wset.waveforms
    rows = ((n, k, _fmt(w[n, k].real), _fmt(w[n, k].imag))
            for n in range(w.shape[0]) for k in range(w.shape[1]))
    atomic_write(path, _csv_text(["antenna", "sample_index", "re", "im"], rows))
    write_json(_sidecar(path), wset.metadata())
    return path


def read_waveforms(path: PathLike) -> WaveformSet:
    path = Path(path)
    data = np.genfromtxt(path, delimiter=",", names=True)
    meta = read_json(_sidecar(path)) if _sidecar(path).exists() else {}
    ant = data["antenna"].astype(int)
    idx = data["sample_index"].astype(int)
    N, K = ant.max() + 1, idx.max() + 1
    w = np.zeros((N, K), complex)
    w[ant, idx] = data["re"] + 1j * data["im"]
    known = {"family", "K", "N", "K_z", "mode", "basis_family", "seed", "capacities", "scales"}
    return WaveformSet(
        waveforms=w, family=meta.get("family", "unknown"), zone=int(meta.get("K_z", 0)),
        mode=ZoneMode(meta.get("mode", ZoneMode.PAPER_LITERAL.value)),
        capacities=tuple(meta.get("capacities", ())), scales=tuple(meta.get("scales", ())),
        basis_family=meta.get("basis_family"), seed=meta.get("seed"),
        extra={k: v for k, v in meta.items() if k not in known})


def write_scene_json(path: PathLike, scene: SceneModel) -> Path:
    pts = [{"x": float(p[0]), "y": float(p[1]), "re": float(r.real), "im": float(r.imag)}
           for p, r in zip(scene.positions, scene.reflectivity)]
    return write_json(path, {"points": pts})


def write_mask_pgm(path: PathLike, raster: RasterScene) -> Path:
    """8-bit PGM of the reflectivity magnitude plus a georeferencing sidecar."""
    path = Path(path)
    mag = np.abs(raster.reflectivity)
    peak = mag.max() if mag.max() > 0 else 1.0
    pix = np.round(255 * mag / peak).astype(np.uint8)[::-1]  # top row = far edge
    buf = _io.BytesIO()
    Image.fromarray(pix).save(buf, format="PPM")
    atomic_write(path, buf.getvalue())
    write_json(_sidecar(path), {"origin": list(raster.origin), "spacing": list(raster.spacing),
                                "threshold": 0.5, "amplitude": float(peak)})
    return path


def read_pgm(path: PathLike) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("L") if im.mode not in ("L", "I;16", "I") else im)


def read_scene(path: PathLike, speckle_seed: Optional[int] = None) -> SceneModel:
    """Load a JSON point list or a PGM mask with its JSON sidecar.

    JSON scenes hold ``{"points": [{"x", "y", "re", "im"}, ...]}`` (``im``
    optional). A PGM's sidecar gives ``origin``, ``spacing`` and ``threshold``
    (fraction of full scale above which a cell belongs to the signal region);
    optional ``amplitude`` scales the reflectivity. Row 0 of the image is the
    far edge of the scene.
    """
    path = Path(path)
    if path.suffix.lower() == ".json":
        pts = read_json(path).get("points")
        if not pts:
            raise ValueError(f"{path}: scene has no points")
        pos = [[p["x"], p["y"]] for p in pts]
        ref = [complex(p.get("re", 1.0), p.get("im", 0.0)) for p in pts]
        return SceneModel(pos, ref)
    side = _sidecar(path)
    if not side.exists():
        raise ValueError(f"{path}: raster scene needs a JSON sidecar {side.name}")
    meta = read_json(side)
    pix = read_pgm(path).astype(float)[::-1]
    full = 255.0 if pix.max() <= 255 else 65535.0
    frac = pix / full
    signal = frac > float(meta.get("threshold", 0.5))
    refl = frac * float(meta.get("amplitude", 1.0))
    raster = RasterScene(refl, tuple(meta["origin"]), tuple(meta["spacing"]), signal)
    return SceneModel.from_raster(raster, speckle_seed)


def write_raw_csv(path: PathLike, raw: np.ndarray) -> Path:
    """CSV ``rx,sample,re,im`` of an ``(M, L)`` receive block."""
    raw = np.atleast_2d(raw)
    rows = ((m, k, _fmt(raw[m, k].real), _fmt(raw[m, k].imag))
            for m in range(raw.shape[0]) for k in range(raw.shape[1]))
    return atomic_write(path, _csv_text(["rx", "sample", "re", "im"], rows))


def read_raw_csv(path: PathLike) -> np.ndarray:
    d = np.genfromtxt(path, delimiter=",", names=True)
    m, k = d["rx"].astype(int), d["sample"].astype(int)
    out = np.zeros((m.max() + 1, k.max() + 1), complex)
    out[m, k] = d["re"] + 1j * d["im"]
    return out


def write_raw_binary(path: PathLike, raw: np.ndarray, meta: Optional[dict] = None) -> Path:
    """Little-endian float32 planar file (all real parts, then all imaginary
    parts, each row-major ``(M, L)``) with a JSON header sidecar."""
    path = Path(path)
    raw = np.atleast_2d(raw)
    planes = np.stack([raw.real, raw.imag]).astype("<f4")
    atomic_write(path, planes.tobytes())
    header = {"dtype": "float32", "byteorder": "little", "layout": "planar re/im, row-major",
              "shape": list(raw.shape), **(meta or {})}
    write_json(path.with_suffix(".json"), header)
    return path


def read_raw_binary(path: PathLike) -> np.ndarray:
    path = Path(path)
    header = read_json(path.with_suffix(".json"))
    M, L = header["shape"]
    planes = np.fromfile(path, dtype="<f4").reshape(2, M, L)
    return planes[0].astype(float) + 1j * planes[1].astype(float)


def write_image(stem: PathLike, img: RadarImage, floor_db: float = -40.0) -> tuple[Path, Path]:
    """Write ``<stem>.pgm`` (magnitude in dB, peak at 255, ``floor_db`` at 0) and
    ``<stem>.csv`` with columns ``row,col,x,y,re,im``."""
    if floor_db >= 0:
        raise ValueError("dB floor must be negative")
    stem = Path(stem)
    g = np.asarray(img.grid)
    mag = np.abs(g)
    peak = mag.max()
    with np.errstate(divide="ignore"):
        db = 20 * np.log10(mag / peak) if peak > 0 else np.full(mag.shape, floor_db)
    db = np.clip(db, floor_db, 0.0)
    pix = np.round(255 * (db - floor_db) / -floor_db).astype(np.uint8)[::-1]
    buf = _io.BytesIO()
    Image.fromarray(pix).save(buf, format="PPM")
    pgm = atomic_write(stem.with_suffix(".pgm"), buf.getvalue())
    rows = ((i, j, _fmt(img.x[j]), _fmt(img.y[i]), _fmt(g[i, j].real), _fmt(g[i, j].imag))
            for i in range(g.shape[0]) for j in range(g.shape[1]))
    csv_path = atomic_write(stem.with_suffix(".csv"), _csv_text(["row", "col", "x", "y", "re", "im"], rows))
    return pgm, csv_path
