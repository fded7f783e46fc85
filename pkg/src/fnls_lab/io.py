"""
Trajectory checkpoint container.

Layout (all integers little-endian):

    offset 0   8 bytes   magic b"FNLSCKPT"
    offset 8   uint32    format version (currently 1)
    offset 12  uint32    header length H in bytes
    offset 16  H bytes   UTF-8 JSON header
    then                 samples as little-endian complex128 ('<c16'), C order

The header holds the grid (n, L, M), the snapshot times, the sample dtype and
array shape, and any user metadata under "meta".
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .grid import make_grid
from .solver import Trajectory

__all__ = ["MAGIC", "VERSION", "write_checkpoint", "read_checkpoint"]

MAGIC = b"FNLSCKPT"
VERSION = 1
_DTYPE = "<c16"


def write_checkpoint(path, traj: Trajectory, meta: dict | None = None) -> Path:
    g = traj.grid
    data = np.ascontiguousarray(traj.values, dtype=_DTYPE)
    header = {
        "grid": {"n": g.n, "L": g.L, "M": g.M},
        "times": [float(t) for t in traj.times],
        "dtype": _DTYPE,
        "shape": list(data.shape),
        "meta": meta or {},
    }
    hb = json.dumps(header, sort_keys=True).encode("utf-8")
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(hb)))
        fh.write(hb)
        fh.write(data.tobytes(order="C"))
    return path


def read_checkpoint(path) -> tuple[Trajectory, dict]:
    """Returns (trajectory, metadata)."""
    raw = Path(path).read_bytes()
    if raw[:8] != MAGIC:
        raise ValueError(f"{path}: not a checkpoint file (bad magic)")
    version, hlen = struct.unpack("<II", raw[8:16])
    if version != VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    header = json.loads(raw[16 : 16 + hlen].decode("utf-8"))
    shape = tuple(header["shape"])
    body = raw[16 + hlen :]
    expected = int(np.prod(shape)) * np.dtype(header["dtype"]).itemsize
    if len(body) != expected:
        raise ValueError(f"{path}: truncated sample block ({len(body)} of {expected} bytes)")
    values = np.frombuffer(body, dtype=header["dtype"]).reshape(shape).astype(complex)
    gd = header["grid"]
    grid = make_grid(gd["n"], gd["L"], gd["M"])
    return Trajectory(grid, np.array(header["times"]), values), header["meta"]
