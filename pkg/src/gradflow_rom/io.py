"""On-disk formats.

Binary matrix file layout (all little-endian)::

    bytes 0-7    magic  b"GFROMMAT"
    bytes 8-15   uint64 rows
    bytes 16-23  uint64 cols
    bytes 24-    float64 data, column-major (rows * cols * 8 bytes)
"""
from __future__ import annotations

import csv
import os
import struct

import numpy as np

MAGIC = b"GFROMMAT"
_HEADER = struct.Struct("<8sQQ")


def write_matrix(path, A) -> None:
    A = np.asarray(A, dtype="<f8")
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2:
        raise ValueError("only vectors and matrices can be written")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, A.shape[0], A.shape[1]))
        fh.write(np.asfortranarray(A).tobytes(order="F"))


def read_matrix(path) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise ValueError(f"{path}: truncated header")
        magic, rows, cols = _HEADER.unpack(head)
        if magic != MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != rows * cols:
        raise ValueError(f"{path}: expected {rows * cols} values, found {data.size}")
    return data.reshape((rows, cols), order="F").astype(float)


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def append_csv(path, record: dict) -> None:
    """Append one row; the header is written when the file is new."""
    new = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(record))
        if new:
            w.writeheader()
        w.writerow(record)


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_energy_trace(path, times, energies) -> None:
    write_csv(path, ["t", "E_h"], ((f"{t:.17g}", f"{e:.17g}") for t, e in zip(times, energies)))


def write_key_values(path, values: dict) -> None:
    with open(path, "w") as fh:
        for k, v in values.items():
            fh.write(f"{k} = {v}\n")
