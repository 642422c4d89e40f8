"""CFM1 feature-file writer.

The byte layout is the interface contract with the consuming pipeline:
magic "CFM1", u32 version = 1, u32 I, u32 J, u32 D (all little endian),
then I*J*D float32 little endian, row major.
"""

import os
import struct

import numpy as np

MAGIC = b"CFM1"
VERSION = 1


def write_cfm(fmap, path) -> None:
    """Atomically write an (I, J, D) float array as a CFM1 file."""
    arr = np.ascontiguousarray(fmap, dtype="<f4")
    if arr.ndim != 3 or min(arr.shape) < 1:
        raise ValueError(f"feature map must be (I, J, D) with dims >= 1, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("feature map contains non-finite values")
    i, j, d = arr.shape
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(struct.pack("<4sIIII", MAGIC, VERSION, i, j, d))
        fh.write(arr.tobytes())
    os.replace(tmp, path)
