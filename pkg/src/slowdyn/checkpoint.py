"""Binary checkpoints.

Layout (all little-endian)::

    offset  size  content
    0       4     magic b"SLWD"
    4       4     uint32 format version (1)
    8       12    uint32 nx, ny, kz_max
    20      4     uint32 flags (bit 0: viscous)
    24      40    float64 L, Fr, Re, Pr, t   (Re, Pr are NaN when unset)
    64      4     uint32 field count F = kz_max + 3
    68      4*F   uint32 coefficient count of each field (nx * ny)
    ...           payload: F arrays of nx*ny complex128 (real part, then
                  imaginary part, each float64), C order with x the slow
                  index, fields ordered omega, w, rho_0, rho_1 .. rho_K

The file size must equal the header size plus ``16 * F * nx * ny`` exactly.
"""

import math
import struct

import numpy as np

from .errors import CheckpointError, CorruptHeaderError, SlowDynError, TruncatedPayloadError
from .model import ModelState, PhysicalParams
from .spectral import GridSpec

__all__ = ["MAGIC", "VERSION", "CheckpointHeader", "write_checkpoint", "read_checkpoint",
           "read_header", "checkpoint_size"]

MAGIC = b"SLWD"
VERSION = 1
_FIXED = struct.Struct("<4sI3II5dI")
_DTYPE = np.dtype("<c16")


class CheckpointHeader:
    """Decoded header fields."""

    __slots__ = ("version", "nx", "ny", "kz_max", "viscous", "L", "Fr", "Re", "Pr", "t",
                 "counts")

    def __init__(self, **kw):
        for key in self.__slots__:
            setattr(self, key, kw[key])

    @property
    def size(self):
        return _FIXED.size + 4 * len(self.counts)

    @property
    def grid(self):
        return GridSpec(self.nx, self.ny, self.L, self.kz_max)

    @property
    def params(self):
        return PhysicalParams(self.L, self.Fr, self.viscous, self.Re, self.Pr)


def checkpoint_size(nx, ny, kz_max):
    """Exact byte size of a checkpoint for the given dimensions."""
    fields = kz_max + 3
    return _FIXED.size + 4 * fields + _DTYPE.itemsize * fields * nx * ny


def _opt(x):
    return float("nan") if x is None else float(x)


def write_checkpoint(state, path, params=None):
    """Write ``state`` (and ``params``, if given) to ``path``."""
    grid = state.grid
    fields = grid.kz_max + 3
    p = params
    header = _FIXED.pack(
        MAGIC, VERSION, grid.nx, grid.ny, grid.kz_max,
        1 if (p is not None and p.viscous) else 0,
        grid.L, _opt(p.Fr if p else None), _opt(p.Re if p else None),
        _opt(p.Pr if p else None), state.t, fields)
    table = struct.pack(f"<{fields}I", *([grid.nx * grid.ny] * fields))
    payload = np.ascontiguousarray(state.data, dtype=_DTYPE).tobytes()
    with open(path, "wb") as fh:
        fh.write(header + table + payload)


def _decode_header(blob, path):
    if len(blob) < _FIXED.size:
        raise CorruptHeaderError(f"{path}: file too short for a header ({len(blob)} bytes)")
    magic, version, nx, ny, K, flags, L, Fr, Re, Pr, t, fields = _FIXED.unpack_from(blob)
    if magic != MAGIC:
        raise CorruptHeaderError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise CorruptHeaderError(f"{path}: unsupported version {version}")
    if nx == 0 or ny == 0 or fields != K + 3 or flags > 1:
        raise CorruptHeaderError(f"{path}: inconsistent dimensions nx={nx} ny={ny} K={K} "
                                 f"fields={fields}")
    if not (math.isfinite(L) and L > 0 and math.isfinite(t)):
        raise CorruptHeaderError(f"{path}: invalid L={L} or t={t}")
    end = _FIXED.size + 4 * fields
    if len(blob) < end:
        raise CorruptHeaderError(f"{path}: field table cut short")
    counts = struct.unpack_from(f"<{fields}I", blob, _FIXED.size)
    if any(c != nx * ny for c in counts):
        raise CorruptHeaderError(f"{path}: field table {counts} does not match {nx}x{ny}")

    try:
        GridSpec(nx, ny, L, K)
    except SlowDynError as exc:
        raise CorruptHeaderError(f"{path}: {exc}") from None

    def opt(x):
        return None if math.isnan(x) else x

    return CheckpointHeader(version=version, nx=nx, ny=ny, kz_max=K, viscous=bool(flags),
                            L=L, Fr=opt(Fr), Re=opt(Re), Pr=opt(Pr), t=t, counts=counts)


def _read(path):
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise CheckpointError(f"{path}: {exc.strerror}") from None


def read_header(path):
    return _decode_header(_read(path), path)


def read_checkpoint(path):
    """Load a :class:`ModelState`; the result is bitwise equal to what was written.

    Raises
    ------
    CorruptHeaderError
        Bad magic, version, dimensions or field table.
    TruncatedPayloadError
        Fewer payload bytes than the header announces.
    CheckpointError
        Unreadable file, trailing bytes or an invalid stored state.
    """
    blob = _read(path)
    head = _decode_header(blob, path)
    want = checkpoint_size(head.nx, head.ny, head.kz_max)
    if len(blob) < want:
        raise TruncatedPayloadError(f"{path}: payload has {len(blob) - head.size} bytes, "
                                    f"expected {want - head.size}")
    if len(blob) > want:
        raise CheckpointError(f"{path}: {len(blob) - want} unexpected trailing bytes")
    data = np.frombuffer(blob, dtype=_DTYPE, offset=head.size)
    data = data.reshape(head.kz_max + 3, head.nx, head.ny).astype(np.complex128)
    try:
        return ModelState(head.grid, head.t, data)
    except SlowDynError as exc:
        raise CheckpointError(f"{path}: {exc}") from None
