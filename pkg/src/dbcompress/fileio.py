"""Matrix and coreset file formats.

Matrices travel either as CSV (no header, comma separated) or as a
binary layout: magic "DBCM" | u32 version=1 | u64 rows | u64 cols |
rows*cols little-endian f64, row major. Readers auto-detect the format
from the magic bytes. CSV values are written with 17 significant digits
so that doubles round-trip.
"""

import struct

import numpy as np

MAGIC = b"DBCM"
VERSION = 1


def write_matrix_binary(path, a):
    a = np.ascontiguousarray(np.atleast_2d(np.asarray(a, dtype=float)))
    rows, cols = a.shape
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        f.write(struct.pack("<QQ", rows, cols))
        f.write(a.astype("<f8").tobytes())


def write_matrix_csv(path, a):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    with open(path, "w") as f:
        for row in a:
            f.write(",".join(f"{v:.17g}" for v in row))
            f.write("\n")


def write_matrix(path, a):
    """Write a matrix, choosing CSV for .csv paths and binary otherwise."""
    if str(path).endswith(".csv"):
        write_matrix_csv(path, a)
    else:
        write_matrix_binary(path, a)


def read_matrix(path):
    """Read a matrix file, auto-detecting binary vs CSV by the magic."""
    with open(path, "rb") as f:
        head = f.read(4)
        if head == MAGIC:
            (version,) = struct.unpack("<I", f.read(4))
            if version != VERSION:
                raise ValueError(f"unsupported matrix file version {version}")
            rows, cols = struct.unpack("<QQ", f.read(16))
            payload = f.read()
            expected = rows * cols * 8
            if len(payload) != expected:
                raise ValueError(
                    f"matrix payload has {len(payload)} bytes, expected {expected}")
            return np.frombuffer(payload, dtype="<f8").reshape(rows, cols).copy()
    try:
        out = np.atleast_2d(np.loadtxt(path, delimiter=",", dtype=float, ndmin=2))
    except Exception as exc:
        raise ValueError(f"cannot parse {path} as CSV: {exc}") from exc
    return out


def write_coreset(path, indices, weights):
    """Write a coreset as CSV rows of index,weight."""
    with open(path, "w") as f:
        for i, wval in zip(indices, weights):
            f.write(f"{int(i)},{wval:.17g}\n")


def read_coreset(path):
    """Read a coreset CSV; returns (indices, weights)."""
    raw = np.atleast_2d(np.loadtxt(path, delimiter=",", dtype=float, ndmin=2))
    if raw.size == 0:
        raise ValueError("empty coreset file")
    if raw.shape[1] != 2:
        raise ValueError("coreset file must have rows of index,weight")
    return raw[:, 0].astype(int), raw[:, 1]
