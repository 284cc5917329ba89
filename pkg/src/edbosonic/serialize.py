"""Matrix serialization shared by operators, codewords and projectors.

Binary layout (``.bin``)::

    bytes 0-7   magic  b"EDBMAT01"
    bytes 8-15  little-endian uint64, length L of the JSON header
    next L      UTF-8 JSON header {"dims": [...], "shape": [rows, cols]}
    remainder   row-major little-endian float64 pairs (real, imag)

The JSON form (``.json``) carries the same header fields plus ``"data"``:
the base64 encoding of the payload bytes above.
"""
from __future__ import annotations

import base64
import json
import struct
from pathlib import Path

import numpy as np

from .fock import HilbertLayout, Operator

MAGIC = b"EDBMAT01"
_DTYPE = np.dtype("<c16")


def _payload(matrix: np.ndarray) -> bytes:
    return np.ascontiguousarray(matrix, dtype=_DTYPE).tobytes(order="C")


def to_dict(obj: Operator | np.ndarray, dims: tuple[int, ...] | None = None) -> dict:
    if isinstance(obj, Operator):
        dims = obj.layout.dims
        matrix = obj.matrix
    else:
        matrix = np.atleast_2d(np.asarray(obj))
    return {
        "format": "edbosonic-matrix/1",
        "dims": list(dims) if dims is not None else None,
        "shape": list(matrix.shape),
        "data": base64.b64encode(_payload(matrix)).decode("ascii"),
    }


def from_dict(d: dict) -> Operator | np.ndarray:
    raw = base64.b64decode(d["data"])
    matrix = np.frombuffer(raw, dtype=_DTYPE).reshape(d["shape"]).copy()
    dims = d.get("dims")
    if dims is not None and matrix.shape[0] == matrix.shape[1] == int(np.prod(dims)):
        return Operator(HilbertLayout(tuple(dims[1:]), dims[0]), matrix)
    return matrix


def to_bytes(obj: Operator | np.ndarray, dims: tuple[int, ...] | None = None) -> bytes:
    d = to_dict(obj, dims)
    header = json.dumps({"dims": d["dims"], "shape": d["shape"]}, sort_keys=True).encode()
    body = base64.b64decode(d["data"])
    return MAGIC + struct.pack("<Q", len(header)) + header + body


def from_bytes(blob: bytes) -> Operator | np.ndarray:
    if blob[:8] != MAGIC:
        raise ValueError("not an edbosonic matrix blob")
    (n,) = struct.unpack("<Q", blob[8:16])
    header = json.loads(blob[16:16 + n])
    header["data"] = base64.b64encode(blob[16 + n:]).decode("ascii")
    return from_dict(header)


def save(path: str | Path, obj: Operator | np.ndarray, dims: tuple[int, ...] | None = None) -> None:
    path = Path(path)
    if path.suffix == ".json":
        path.write_text(json.dumps(to_dict(obj, dims), sort_keys=True))
    else:
        path.write_bytes(to_bytes(obj, dims))


def load(path: str | Path) -> Operator | np.ndarray:
    path = Path(path)
    if path.suffix == ".json":
        return from_dict(json.loads(path.read_text()))
    return from_bytes(path.read_bytes())
