"""
Snapshot I/O
Binary RAFT1 snapshots of surface and bulk fields.

Layout (little-endian): magic "RAFT1", u8 kind (0 surface, 1 bulk), u32 N,
u32 Mz (0 for surface), f64 L, f64 H, then row-major f64 grid values.
"""

import struct
from pathlib import Path
from typing import Union

import numpy as np

from constants import SNAPSHOT_KIND_BULK, SNAPSHOT_KIND_SURFACE, SNAPSHOT_MAGIC
from spectral_core import BulkField, SlabGeometry, SurfaceField, TorusGeometry
from utils.exceptions import SnapshotFormatException
from utils.logger import setup_logger

logger = setup_logger(__name__)

_HEADER = struct.Struct("<5sBIIdd")

Field = Union[SurfaceField, BulkField]


def write_snapshot(field: Field, path: Union[str, Path], H: float = 0.0) -> Path:
    """Write a field to disk. H is recorded for surface fields that sit on a slab."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(field, BulkField):
        g = field.geometry
        header = _HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_KIND_BULK, g.base.N, g.Mz, g.base.L, g.H)
    else:
        g = field.geometry
        header = _HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_KIND_SURFACE, g.N, 0, g.L, float(H))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())
    logger.debug(f"Snapshot written: {path}")
    return path


def read_snapshot(path: Union[str, Path]) -> Field:
    """Read a RAFT1 snapshot back into a SurfaceField or BulkField."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise SnapshotFormatException(f"{path}: file shorter than header")
    magic, kind, N, Mz, L, H = _HEADER.unpack_from(data)
    if magic != SNAPSHOT_MAGIC:
        raise SnapshotFormatException(f"{path}: bad magic {magic!r}")

    if kind == SNAPSHOT_KIND_SURFACE:
        shape = (N, N)
    elif kind == SNAPSHOT_KIND_BULK:
        shape = (N, N, Mz)
    else:
        raise SnapshotFormatException(f"{path}: unknown field kind {kind}")

    values = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    if values.size != int(np.prod(shape)):
        raise SnapshotFormatException(
            f"{path}: expected {int(np.prod(shape))} values, found {values.size}"
        )
    values = values.reshape(shape).astype(float)

    torus = TorusGeometry(L=L, N=N)
    if kind == SNAPSHOT_KIND_SURFACE:
        return SurfaceField.from_values(torus, values)
    return BulkField.from_values(SlabGeometry(base=torus, H=H, Mz=Mz), values)
