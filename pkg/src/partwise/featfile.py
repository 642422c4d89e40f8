"""Portable dense-feature-map files.

Layout (little endian throughout):
  bytes 0-3   magic "CFM1"
  bytes 4-7   format version, u32 (currently 1)
  bytes 8-19  I, J, D as three u32
  then        I*J*D float32, row major (row, col, channel fastest)
"""

import struct

import numpy as np

from .exceptions import (
    BadMagicError,
    ParameterError,
    PayloadSizeError,
    TruncatedFileError,
    UnsupportedVersionError,
)

MAGIC = b"CFM1"
VERSION = 1
_HEADER = struct.Struct("<4sIIII")


def write_feature_file(fmap, path) -> None:
    """Write an (I, J, D) feature map. Values are stored as float32."""
    arr = np.ascontiguousarray(fmap, dtype=np.float32)
    if arr.ndim != 3 or min(arr.shape) < 1:
        raise ParameterError(f"feature map must be (I, J, D) with dims >= 1, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ParameterError("feature map contains non-finite values")
    i, j, d = arr.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, i, j, d))
        fh.write(arr.tobytes())


def read_feature_file(path) -> np.ndarray:
    """Read a feature file back as a float32 (I, J, D) array.

    Raises BadMagicError / UnsupportedVersionError / TruncatedFileError /
    PayloadSizeError so callers can distinguish decode failures.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        if blob[:4] != MAGIC and len(blob) >= 4:
            raise BadMagicError(f"bad magic {blob[:4]!r}")
        raise TruncatedFileError(f"file shorter than header ({len(blob)} bytes)")
    magic, version, i, j, d = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}")
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported feature-file version {version}")
    if min(i, j, d) < 1:
        raise PayloadSizeError(f"header dims ({i}, {j}, {d}) are not all >= 1")
    payload = blob[_HEADER.size:]
    expected = i * j * d * 4
    if len(payload) < expected:
        raise TruncatedFileError(
            f"payload has {len(payload)} bytes, header promises {expected}"
        )
    if len(payload) > expected:
        raise PayloadSizeError(
            f"payload has {len(payload)} bytes, header promises {expected}"
        )
    arr = np.frombuffer(payload, dtype="<f4").reshape(i, j, d)
    return np.ascontiguousarray(arr)
