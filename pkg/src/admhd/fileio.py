"""Binary field snapshots and the NDJSON diagnostics stream.

Snapshot layout (little-endian)::

    magic        6 bytes   b"ADMHD1"
    n_per_axis   uint32
    padded_n     uint32
    field_count  uint32    number of scalar component arrays that follow
    time         float64
    payload      float64   for k in lexicographic order over [-K, K]^3
                           (kx slowest, kz fastest), for each component:
                           real part, imaginary part

``K = n_per_axis/2 - 1``.  A vector field contributes three components, so an
``(w, B)`` state has ``field_count = 6`` and a pressure snapshot has 1.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from admhd.diagnostics import DiagnosticsRecord
from admhd.errors import ConfigurationError
from admhd.model import MhdState
from admhd.spectral import GridSpec, SpectralScalarField, SpectralVectorField

__all__ = [
    "SNAPSHOT_MAGIC",
    "encode_snapshot",
    "decode_snapshot",
    "write_snapshot",
    "read_snapshot",
    "write_state",
    "read_state",
    "NdjsonSink",
    "read_ndjson",
]

SNAPSHOT_MAGIC = b"ADMHD1"
_HEADER = struct.Struct("<6sIIId")


def _lattice_index(grid):
    K = grid.kmax
    n = grid.n_per_axis
    ks = np.arange(-K, K + 1)
    kx, ky, kz = np.meshgrid(ks, ks, ks, indexing="ij")
    conj = kz < 0
    sx = np.where(conj, -kx, kx) % n
    sy = np.where(conj, -ky, ky) % n
    sz = np.abs(kz)
    return (sx, sy, sz), conj


def _to_lattice(coeffs, grid):
    """Half-layout ``(c, n, n, h)`` -> full lattice ``(c, 2K+1, 2K+1, 2K+1)``."""
    idx, conj = _lattice_index(grid)
    full = coeffs[(slice(None),) + idx]
    return np.where(conj, np.conj(full), full)


def _from_lattice(full, grid):
    idx, conj = _lattice_index(grid)
    out = np.zeros((full.shape[0],) + grid.shape, dtype=complex)
    keep = ~conj
    for c in range(full.shape[0]):
        out[c][tuple(i[keep] for i in idx)] = full[c][keep]
    out[..., 0, 0, 0] = 0.0
    return out


def encode_snapshot(components, grid, t):
    """Serialize a ``(field_count, *grid.shape)`` coefficient stack."""
    components = np.asarray(components)
    full = _to_lattice(components, grid)           # (c, L, L, L)
    payload = np.moveaxis(full, 0, -1)             # (L, L, L, c)
    data = np.stack([payload.real, payload.imag], axis=-1).astype("<f8")
    header = _HEADER.pack(SNAPSHOT_MAGIC, grid.n_per_axis, grid.padded_n,
                          components.shape[0], float(t))
    return header + data.tobytes()


def decode_snapshot(blob):
    """Inverse of :func:`encode_snapshot`; returns ``(components, grid, t)``."""
    if len(blob) < _HEADER.size:
        raise ConfigurationError("snapshot truncated before end of header")
    magic, n, m, count, t = _HEADER.unpack_from(blob)
    if magic != SNAPSHOT_MAGIC:
        raise ConfigurationError(f"bad snapshot magic {magic!r}")
    grid = GridSpec(int(n), int(m))
    L = 2 * grid.kmax + 1
    data = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size)
    expected = L**3 * count * 2
    if data.size != expected:
        raise ConfigurationError(
            f"snapshot payload holds {data.size} floats, expected {expected}")
    data = data.reshape(L, L, L, count, 2)
    full = np.moveaxis(data[..., 0] + 1j * data[..., 1], -1, 0)
    return _from_lattice(full, grid), grid, float(t)


def write_snapshot(path, components, grid, t):
    Path(path).write_bytes(encode_snapshot(components, grid, t))


def read_snapshot(path):
    return decode_snapshot(Path(path).read_bytes())


def write_state(path, state):
    write_snapshot(path, np.concatenate([state.w.coeffs, state.b.coeffs]), state.grid, state.t)


def read_state(path, grid=None):
    """Load an ``(w, B)`` snapshot; ``grid`` (if given) must match the file."""
    comps, file_grid, t = read_snapshot(path)
    if grid is not None and file_grid != grid:
        raise ConfigurationError(
            f"snapshot grid (n={file_grid.n_per_axis}, padded_n={file_grid.padded_n}) "
            f"does not match configured grid (n={grid.n_per_axis}, "
            f"padded_n={grid.padded_n})")
    if comps.shape[0] != 6:
        raise ConfigurationError(
            f"state snapshot must hold 6 components, found {comps.shape[0]}")
    return MhdState(SpectralVectorField(file_grid, comps[:3].copy()),
                    SpectralVectorField(file_grid, comps[3:].copy()), t)


def write_scalar(path, fld, t=0.0):
    write_snapshot(path, fld.coeffs[None], fld.grid, t)


def read_scalar(path):
    comps, grid, t = read_snapshot(path)
    if comps.shape[0] != 1:
        raise ConfigurationError(f"scalar snapshot must hold 1 component, found {comps.shape[0]}")
    return SpectralScalarField(grid, comps[0].copy()), t


class NdjsonSink:
    """Diagnostics stream, one JSON object per line, flushed per record.

    The file is truncated on open unless ``append`` is set.
    """

    def __init__(self, path, append=False):
        self.path = Path(path)
        self._fh = self.path.open("a" if append else "w", encoding="utf-8")

    def __call__(self, record):
        self._fh.write(record.to_json() + "\n")
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_ndjson(path):
    with open(path, encoding="utf-8") as fh:
        return [DiagnosticsRecord.from_json(line) for line in fh if line.strip()]
