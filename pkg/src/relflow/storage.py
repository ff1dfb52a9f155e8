"""File formats: float images, 16-bit PGM, point-set CSV, JSON documents.

The binary containers share one layout::

    magic | u64 LE header length N | N bytes UTF-8 JSON | little-endian f32 payload
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

IMAGE_MAGIC = b"RFIMG1\n"
PGM_MAXVAL = 65535


class FormatError(ValueError):
    """Base class for unreadable files."""


class BadMagicError(FormatError):
    pass


class TruncatedError(FormatError):
    pass


class HeaderMismatchError(FormatError):
    pass


class PointsParseError(FormatError):
    def __init__(self, line: int, msg: str):
        super().__init__(f"line {line}: {msg}")
        self.line = line


def pack_container(magic: bytes, header: dict, payload: np.ndarray) -> bytes:
    hdr = json.dumps(header, sort_keys=True).encode("utf-8")
    body = np.ascontiguousarray(payload, dtype="<f4").tobytes()
    return magic + struct.pack("<Q", len(hdr)) + hdr + body


def unpack_container(blob: bytes, magic: bytes, n_values_key: str | None = None):
    """Split a container into ``(header, f32 payload)``.

    ``n_values_key`` names a header field giving the expected float count;
    otherwise the caller checks the payload size itself.
    """
    if not blob.startswith(magic):
        raise BadMagicError(f"expected magic {magic!r}, got {blob[:len(magic)]!r}")
    pos = len(magic)
    if len(blob) < pos + 8:
        raise TruncatedError("file ends inside the header length field")
    (n,) = struct.unpack("<Q", blob[pos:pos + 8])
    pos += 8
    if len(blob) < pos + n:
        raise TruncatedError(f"file ends inside the {n}-byte JSON header")
    try:
        header = json.loads(blob[pos:pos + n].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise HeaderMismatchError(f"header is not valid JSON: {e}") from None
    if header.get("dtype") != "f32" or header.get("endianness") != "LE":
        raise HeaderMismatchError("only dtype f32 / endianness LE is supported")
    body = blob[pos + n:]
    if n_values_key is not None:
        want = int(header[n_values_key]) * 4
        if len(body) < want:
            raise TruncatedError(f"payload has {len(body)} bytes, header promises {want}")
        if len(body) > want:
            raise HeaderMismatchError(f"payload has {len(body)} bytes, header promises {want}")
    if len(body) % 4:
        raise TruncatedError("payload length is not a whole number of f32 values")
    return header, np.frombuffer(body, dtype="<f4").copy()


def _format_for(path, fmt):
    if fmt is not None:
        return fmt.lower()
    suffix = Path(path).suffix.lower()
    return "pgm" if suffix == ".pgm" else "float"


def write_image(path, img, fmt: str | None = None):
    img = np.asarray(img)
    if img.ndim != 2:
        raise ValueError(f"images are 2-D, got shape {img.shape}")
    h, w = img.shape
    fmt = _format_for(path, fmt)
    if fmt == "pgm":
        q = np.round(np.clip(img.astype(np.float64), 0.0, 1.0) * PGM_MAXVAL).astype(">u2")
        data = f"P5\n{w} {h}\n{PGM_MAXVAL}\n".encode("ascii") + q.tobytes()
    elif fmt == "float":
        hdr = {"width": w, "height": h, "dtype": "f32", "endianness": "LE"}
        data = pack_container(IMAGE_MAGIC, hdr, img)
    else:
        raise ValueError(f"unknown image format {fmt!r}")
    Path(path).write_bytes(data)


def _read_pgm(blob: bytes) -> np.ndarray:
    if not blob.startswith(b"P5"):
        raise BadMagicError(f"not a binary PGM (magic {blob[:2]!r})")
    tokens, pos = [], 2
    while len(tokens) < 3:
        while pos < len(blob) and blob[pos:pos + 1].isspace():
            pos += 1
        if pos < len(blob) and blob[pos:pos + 1] == b"#":
            while pos < len(blob) and blob[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(blob) and not blob[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise TruncatedError("PGM header incomplete")
        tokens.append(blob[start:pos])
    pos += 1
    try:
        w, h, maxval = (int(t) for t in tokens)
    except ValueError:
        raise HeaderMismatchError(f"bad PGM header {tokens!r}") from None
    if maxval != PGM_MAXVAL:
        raise HeaderMismatchError(f"only maxval {PGM_MAXVAL} is supported, got {maxval}")
    body = blob[pos:]
    want = 2 * w * h
    if len(body) < want:
        raise TruncatedError(f"PGM payload has {len(body)} bytes, expected {want}")
    if len(body) > want:
        raise HeaderMismatchError(f"PGM payload has {len(body)} bytes, expected {want}")
    q = np.frombuffer(body, dtype=">u2").reshape(h, w)
    return q.astype(np.float64) / PGM_MAXVAL


def read_image(path, fmt: str | None = None) -> np.ndarray:
    blob = Path(path).read_bytes()
    fmt = _format_for(path, fmt)
    if fmt == "pgm":
        return _read_pgm(blob)
    if fmt != "float":
        raise ValueError(f"unknown image format {fmt!r}")
    header, vals = unpack_container(blob, IMAGE_MAGIC)
    try:
        w, h = int(header["width"]), int(header["height"])
    except (KeyError, TypeError, ValueError):
        raise HeaderMismatchError("image header lacks width/height") from None
    if vals.size < w * h:
        raise TruncatedError(f"payload has {vals.size} values, header promises {w * h}")
    if vals.size > w * h:
        raise HeaderMismatchError(f"payload has {vals.size} values, header promises {w * h}")
    return vals.reshape(h, w)


def write_points(path, pts):
    pts = np.asarray(pts, dtype=np.float64).reshape(-1, 2)
    with open(path, "w", newline="") as fh:
        fh.write("x,y\n")
        for x, y in pts:
            fh.write(f"{x:.9g},{y:.9g}\n")


def read_points(path) -> np.ndarray:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["x", "y"]:
            raise PointsParseError(1, f"expected header 'x,y', got {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise PointsParseError(lineno, f"expected 2 columns, got {len(row)}")
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError:
                raise PointsParseError(lineno, f"non-numeric row {','.join(row)!r}") from None
    return np.array(rows, dtype=np.float64).reshape(-1, 2)


def write_trajectory_csv(path, states):
    """One row per element per state: ``step,index,dim0,dim1,...``."""
    states = [np.asarray(s, dtype=np.float64) for s in states]
    d = states[0].reshape(len(states[0]), -1).shape[1] if states[0].size else 0
    with open(path, "w", newline="") as fh:
        fh.write(",".join(["step", "index"] + [f"dim{k}" for k in range(d)]) + "\n")
        for step, s in enumerate(states):
            for i, row in enumerate(s.reshape(len(s), -1)):
                fh.write(f"{step},{i}," + ",".join(f"{v:.9g}" for v in row) + "\n")


def read_trajectory_csv(path) -> list[np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.size == 0:
        return []
    steps = data[:, 0].astype(int)
    return [data[steps == s, 2:] for s in range(steps.max() + 1)]


def write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())
