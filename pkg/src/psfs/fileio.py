"""File formats: 16-bit PGM images with text sidecars, grid files, PLY meshes.

The PGM payload is quantized to 16 bits; everything needed to map pixels back
to physical intensities (quantization scale, normalization, camera, model
parameters) lives in the plain-text sidecar next to it, as `key = value`
lines.  Surface grids are plain text with full float64 precision, so a
write/read round trip is bit-exact.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Optional

import numpy as np

from .camera import CameraRig
from .errors import ValidationError
from .reflectance import ReflectanceModel, make_model
from .scene import HeightField, RenderedImage

_PGM_MAXVAL = 65535
_GRID_MAGIC = "psfs-grid 1"
_META_FORMAT = "psfs-image 1"


def _atomic_write_bytes(path: Path, payload: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(payload)
    os.replace(tmp, path)


def _atomic_write_text(path: Path, payload: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(payload)
    os.replace(tmp, path)


def sidecar_path(image_path) -> Path:
    return Path(image_path).with_suffix(".meta")


# -- key = value blocks --------------------------------------------------------

def format_entries(entries: dict) -> str:
    lines = [f"{k} = {v!r}" if isinstance(v, float) else f"{k} = {v}" for k, v in entries.items()]
    return "\n".join(lines) + "\n"


def parse_entries(text: str, source: str = "<config>") -> dict[str, str]:
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        entries[key.strip()] = value.strip()
    return entries


class Config:
    """Typed access to dotted `key = value` entries."""

    def __init__(self, entries: dict[str, str], source: str = "<config>"):
        self.entries = dict(entries)
        self.source = source

    @classmethod
    def from_file(cls, path) -> "Config":
        path = Path(path)
        return cls(parse_entries(path.read_text(), str(path)), str(path))

    def __contains__(self, key: str) -> bool:
        return key in self.entries

    def get(self, key: str, default=None) -> Optional[str]:
        return self.entries.get(key, default)

    def require(self, key: str) -> str:
        if key not in self.entries:
            raise ValidationError(f"{self.source}: missing required key {key!r}")
        return self.entries[key]

    def get_float(self, key: str, default: Optional[float] = None) -> Optional[float]:
        raw = self.entries.get(key)
        if raw is None:
            return default
        try:
            return float(raw)
        except ValueError:
            raise ValidationError(f"{self.source}: {key} = {raw!r} is not a number") from None

    def get_int(self, key: str, default: Optional[int] = None) -> Optional[int]:
        raw = self.entries.get(key)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError:
            raise ValidationError(f"{self.source}: {key} = {raw!r} is not an integer") from None

    def get_bool(self, key: str, default: bool = False) -> bool:
        raw = self.entries.get(key)
        if raw is None:
            return default
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValidationError(f"{self.source}: {key} = {raw!r} is not a boolean")

    def section(self, prefix: str) -> dict[str, str]:
        dotted = prefix + "."
        return {k[len(dotted):]: v for k, v in self.entries.items() if k.startswith(dotted)}


# -- images ---------------------------------------------------------------------

def _model_entries(model: ReflectanceModel) -> dict:
    entries: dict = {"model.kind": model.kind}
    for key, value in model.params.items():
        entries[f"model.{key}"] = value
    ambient = getattr(model, "ambient", None)
    if ambient is not None:
        if np.ndim(ambient) != 0:
            raise ValidationError(
                "array-valued ambient fields cannot be stored in a sidecar; "
                "use a constant or save the field separately"
            )
        entries["model.ambient"] = float(ambient)
    return entries


def model_from_entries(cfg: Config, prefix: str = "model") -> ReflectanceModel:
    kind = cfg.require(f"{prefix}.kind")
    params: dict = {}
    for key, raw in cfg.section(prefix).items():
        if key == "kind":
            continue
        if key == "alpha":
            params[key] = int(raw)
        else:
            params[key] = float(raw)
    return make_model(kind, **params)


def write_image(path, image: RenderedImage) -> Path:
    """Write the 16-bit PGM plus its sidecar; returns the sidecar path.

    Pixels are `round(I / scale * 65535)` with `scale = max(I)`; the sidecar
    records the scale, the normalization, the camera and the model, which is
    everything needed to reconstruct the stored physical values.
    """
    path = Path(path)
    rig = image.rig
    scale = float(image.intensity.max())
    pixels = np.rint(image.intensity / scale * _PGM_MAXVAL).astype(">u2")
    header = f"P5\n{rig.nx} {rig.ny}\n{_PGM_MAXVAL}\n".encode("ascii")
    _atomic_write_bytes(path, header + pixels.tobytes())

    entries = {
        "format": _META_FORMAT,
        "nx": rig.nx,
        "ny": rig.ny,
        "x_min": rig.x_min,
        "x_max": rig.x_max,
        "y_min": rig.y_min,
        "y_max": rig.y_max,
        "f": rig.f,
        "scale": scale,
        "normalization": float(image.normalization),
    }
    entries.update(_model_entries(image.model))
    meta = sidecar_path(path)
    _atomic_write_text(meta, format_entries(entries))
    return meta


def _read_pgm(path: Path) -> np.ndarray:
    data = path.read_bytes()
    fields: list[bytes] = []
    pos = 0
    while len(fields) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    magic, width, height, maxval = fields
    if magic != b"P5":
        raise ValidationError(f"{path}: not a binary PGM (magic {magic!r})")
    width, height, maxval = int(width), int(height), int(maxval)
    if maxval != _PGM_MAXVAL:
        raise ValidationError(f"{path}: expected maxval {_PGM_MAXVAL}, got {maxval}")
    raw = np.frombuffer(data, dtype=">u2", offset=pos, count=width * height)
    return raw.reshape(height, width).astype(np.float64)


def read_image(path) -> RenderedImage:
    """Read a PGM + sidecar pair back into a RenderedImage."""
    path = Path(path)
    meta = sidecar_path(path)
    if not meta.exists():
        raise ValidationError(f"missing sidecar {meta} for image {path}")
    cfg = Config(parse_entries(meta.read_text(), str(meta)), str(meta))
    if cfg.get("format") != _META_FORMAT:
        raise ValidationError(f"{meta}: unknown sidecar format {cfg.get('format')!r}")
    rig = CameraRig(
        f=cfg.get_float("f"),
        x_min=cfg.get_float("x_min"), x_max=cfg.get_float("x_max"),
        y_min=cfg.get_float("y_min"), y_max=cfg.get_float("y_max"),
        nx=cfg.get_int("nx"), ny=cfg.get_int("ny"),
    )
    pixels = _read_pgm(path)
    if pixels.shape != rig.shape:
        raise ValidationError(f"{path}: pixel grid {pixels.shape} does not match sidecar {rig.shape}")
    scale = cfg.get_float("scale")
    intensity = pixels / _PGM_MAXVAL * scale
    model = model_from_entries(cfg)
    return RenderedImage(rig, intensity, model, normalization=cfg.get_float("normalization", 1.0))


# -- surface grids ----------------------------------------------------------------

def write_grid(path, rig: CameraRig, values: np.ndarray) -> None:
    """Plain-text grid: magic, nx/ny, domain, f, then one row of values per line.

    Values are written with shortest round-trip precision, so reading back
    reproduces the float64 array bit-exactly.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.shape != rig.shape:
        raise ValidationError(f"grid values {values.shape} do not match rig {rig.shape}")
    lines = [
        _GRID_MAGIC,
        f"nx {rig.nx}",
        f"ny {rig.ny}",
        f"domain {rig.x_min!r} {rig.x_max!r} {rig.y_min!r} {rig.y_max!r}",
        f"f {rig.f!r}",
    ]
    lines.extend(" ".join(repr(float(v)) for v in row) for row in values)
    _atomic_write_text(Path(path), "\n".join(lines) + "\n")


def read_grid(path) -> tuple[CameraRig, np.ndarray]:
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or lines[0].strip() != _GRID_MAGIC:
        raise ValidationError(f"{path}: not a {_GRID_MAGIC!r} file")
    header: dict[str, list[str]] = {}
    body_start = 1
    for line in lines[1:]:
        parts = line.split()
        if parts and parts[0] in ("nx", "ny", "domain", "f"):
            header[parts[0]] = parts[1:]
            body_start += 1
        else:
            break
    try:
        nx = int(header["nx"][0])
        ny = int(header["ny"][0])
        x_min, x_max, y_min, y_max = (float(v) for v in header["domain"])
        f = float(header["f"][0])
    except (KeyError, IndexError, ValueError):
        raise ValidationError(f"{path}: malformed grid header") from None
    rig = CameraRig(f, x_min, x_max, y_min, y_max, nx, ny)
    rows = [np.array(line.split(), dtype=np.float64) for line in lines[body_start:body_start + ny]]
    values = np.vstack(rows)
    if values.shape != (ny, nx):
        raise ValidationError(f"{path}: expected {ny}x{nx} values, got {values.shape}")
    return rig, values


def write_ply(path, heights: HeightField) -> None:
    """ASCII PLY of the 3D surface points, two triangles per grid cell."""
    pts = heights.mesh_points().reshape(-1, 3)
    ny, nx = heights.rig.shape
    n_faces = 2 * (ny - 1) * (nx - 1)
    out = [
        "ply",
        "format ascii 1.0",
        f"element vertex {pts.shape[0]}",
        "property double x",
        "property double y",
        "property double z",
        f"element face {n_faces}",
        "property list uchar int vertex_indices",
        "end_header",
    ]
    out.extend(f"{float(p[0])!r} {float(p[1])!r} {float(p[2])!r}" for p in pts)
    for j in range(ny - 1):
        base = j * nx
        for i in range(nx - 1):
            a, b = base + i, base + i + 1
            c, d = a + nx, b + nx
            out.append(f"3 {a} {b} {d}")
            out.append(f"3 {a} {d} {c}")
    _atomic_write_text(Path(path), "\n".join(out) + "\n")
