"""PNG images, co-occurrence dumps and small JSON helpers."""

from __future__ import annotations

import io
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .features import CROSSBAND, GEOMETRY_TAGS, CoocStack, PairGeometry

COOC_MAGIC = b"COOC"
COOC_VERSION = 1
_TAG_NAMES = {v: k for k, v in GEOMETRY_TAGS.items()}


def load_png(path) -> np.ndarray:
    """Read an 8-bit PNG as a uint8 (H, W, C) array (C = 1 or 3)."""
    try:
        im = Image.open(path)
    except UnidentifiedImageError as exc:
        raise ValueError(f"{path}: not a readable image") from exc
    with im:
        if im.format != "PNG":
            raise ValueError(f"{path}: only PNG input is supported, got {im.format}")
        if im.mode in ("L", "RGB"):
            arr = np.asarray(im)
        elif im.mode in ("P", "RGBA", "LA"):
            arr = np.asarray(im.convert("L" if im.mode == "LA" else "RGB"))
        else:
            raise ValueError(f"{path}: unsupported PNG mode {im.mode}")
    arr = np.array(arr, dtype=np.uint8)
    return arr[:, :, None] if arr.ndim == 2 else arr


def save_png(path, image) -> None:
    arr = np.asarray(image)
    if arr.dtype != np.uint8:
        if arr.min() < 0 or arr.max() > 255 or not np.all(arr == np.rint(arr)):
            raise ValueError("PNG output needs integer pixel values in 0..255")
        arr = arr.astype(np.uint8)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    atomic_write_bytes(path, _png_bytes(arr))


def _png_bytes(arr: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return buf.getvalue()


def atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_json(path, obj) -> None:
    atomic_write_bytes(path, (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode())


def write_cooc(path, stack: CoocStack) -> None:
    """Binary dump: magic, u16 version, u16 pair count, then per pair a header
    (u8 geometry tag, u8 c1, u8 c2, u16 bins) and bins**2 float64 values, all
    little-endian and row-major."""
    data = np.asarray(stack.data, dtype="<f8")
    parts = [COOC_MAGIC, struct.pack("<HH", COOC_VERSION, len(stack.pairs))]
    for (geom, (c1, c2)), mat in zip(stack.pairs, data):
        parts.append(struct.pack("<BBBH", GEOMETRY_TAGS[geom.kind], c1, c2, mat.shape[0]))
        parts.append(np.ascontiguousarray(mat).tobytes())
    atomic_write_bytes(path, b"".join(parts))


def read_cooc(path) -> CoocStack:
    raw = Path(path).read_bytes()
    if raw[:4] != COOC_MAGIC:
        raise ValueError(f"{path}: not a COOC file")
    version, n = struct.unpack_from("<HH", raw, 4)
    if version != COOC_VERSION:
        raise ValueError(f"{path}: unsupported COOC version {version}")
    pos = 8
    pairs, mats = [], []
    for _ in range(n):
        tag, c1, c2, bins = struct.unpack_from("<BBBH", raw, pos)
        pos += 5
        count = bins * bins
        mat = np.frombuffer(raw, dtype="<f8", count=count, offset=pos).reshape(bins, bins)
        pos += 8 * count
        kind = _TAG_NAMES[tag]
        geom = PairGeometry(kind, c1, c2) if kind == CROSSBAND else PairGeometry(kind)
        pairs.append((geom, (c1, c2)))
        mats.append(mat.astype(np.float64))
    if pos != len(raw):
        raise ValueError(f"{path}: {len(raw) - pos} trailing bytes")
    return CoocStack(pairs, np.stack(mats) if mats else np.zeros((0, 0, 0)))


def write_cooc_csv(path, stack: CoocStack) -> None:
    """Sparse CSV export: one ``pair,i,j,value`` row per non-zero entry."""
    lines = ["pair,i,j,value"]
    for p, mat in enumerate(stack.data):
        ii, jj = np.nonzero(mat)
        lines.extend(f"{p},{i},{j},{float(mat[i, j])!r}" for i, j in zip(ii, jj))
    atomic_write_bytes(path, ("\n".join(lines) + "\n").encode())


def list_pngs(directory) -> list[Path]:
    return sorted(p for p in Path(directory).iterdir() if p.suffix.lower() == ".png")
