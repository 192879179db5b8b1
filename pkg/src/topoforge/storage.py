"""Binary density-field files.

A density file is a single UTF-8 JSON header line followed by a newline and
the raw payload: the element densities as little-endian float32, x-fastest
element order. The header records the grid dims, element spacing, value count,
and a CRC32 checksum of the payload so truncation or corruption is detected at
load time.
"""

from __future__ import annotations

import json
import zlib
from pathlib import Path

import numpy as np

from .fem import StructuredMesh

__all__ = ["DensityFileError", "write_density", "read_density"]


class DensityFileError(ValueError):
    """Raised when a density file is malformed or fails its checksum."""


def write_density(path: str | Path, densities: np.ndarray, mesh: StructuredMesh) -> Path:
    """Write a flat element-density array for ``mesh`` to ``path``."""
    dens = np.asarray(densities, dtype=np.float64).ravel()
    if dens.size != mesh.n_elements:
        raise DensityFileError(
            f"expected {mesh.n_elements} densities for the mesh, got {dens.size}"
        )
    payload = dens.astype("<f4").tobytes()
    header = {
        "dims": [mesh.nelx, mesh.nely, mesh.nelz],
        "spacing": list(mesh.spacing),
        "count": int(dens.size),
        "checksum": f"{zlib.crc32(payload) & 0xFFFFFFFF:08x}",
    }
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(payload)
    return path


def read_density(path: str | Path) -> tuple[np.ndarray, tuple[int, int, int], tuple[float, float, float]]:
    """Read a density file; returns (densities, dims, spacing).

    Densities come back as float32 values widened to float64, in the same
    flat element order they were written in.
    """
    with open(path, "rb") as fh:
        header_line = fh.readline()
        payload = fh.read()
    try:
        header = json.loads(header_line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DensityFileError(f"unreadable density header in {path}: {exc}") from exc
    for key in ("dims", "spacing", "count", "checksum"):
        if key not in header:
            raise DensityFileError(f"density header missing {key!r} in {path}")
    count = int(header["count"])
    dims = tuple(int(d) for d in header["dims"])
    spacing = tuple(float(s) for s in header["spacing"])
    if len(dims) != 3 or len(spacing) != 3:
        raise DensityFileError(f"density header dims/spacing must have 3 entries in {path}")
    if dims[0] * dims[1] * dims[2] != count:
        raise DensityFileError(
            f"header dims {dims} disagree with count {count} in {path}"
        )
    if len(payload) != 4 * count:
        raise DensityFileError(
            f"payload length {len(payload)} does not match count {count} in {path}"
        )
    digest = f"{zlib.crc32(payload) & 0xFFFFFFFF:08x}"
    if digest != header["checksum"]:
        raise DensityFileError(
            f"checksum mismatch in {path}: header {header['checksum']}, payload {digest}"
        )
    dens = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    return dens, dims, spacing
