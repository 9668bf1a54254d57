"""Model files.

Layout (all little-endian)::

    bytes 0-3    magic b"G2DL"
    u32          format version (1)
    u32          d1
    u32          r1
    f64[d1*r1]   W, row-major
"""
import struct
from pathlib import Path

import numpy as np

from .solver import ProjectionModel

MAGIC = b"G2DL"
VERSION = 1
_HEADER = struct.Struct("<4sIII")


class ModelFormatError(ValueError):
    pass


def dumps_model(model: ProjectionModel) -> bytes:
    W = np.asarray(model.W, dtype="<f8")
    d1, r1 = W.shape
    return _HEADER.pack(MAGIC, VERSION, d1, r1) + np.ascontiguousarray(W).tobytes()


def loads_model(buf: bytes) -> ProjectionModel:
    if len(buf) < _HEADER.size:
        raise ModelFormatError("truncated model header")
    magic, version, d1, r1 = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise ModelFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise ModelFormatError(f"unsupported model version {version}")
    body = buf[_HEADER.size :]
    if len(body) != 8 * d1 * r1:
        raise ModelFormatError(f"expected {8 * d1 * r1} bytes of weights, got {len(body)}")
    W = np.frombuffer(body, dtype="<f8").reshape(d1, r1).astype(np.float64)
    orthonormal = bool(np.max(np.abs(W.T @ W - np.eye(r1))) < 1e-8)
    return ProjectionModel(W, orthonormal=orthonormal, method="loaded")


def save_model(model: ProjectionModel, path):
    Path(path).write_bytes(dumps_model(model))


def load_model(path) -> ProjectionModel:
    return loads_model(Path(path).read_bytes())
