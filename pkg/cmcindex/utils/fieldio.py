"""
CMCF field codec

Layout: b"CMCF1\\n", one ASCII header line "nx ny re(ω1) im(ω1) re(ω2) im(ω2) m\\n",
then nx·ny little-endian float64 values, k (ω2 direction) outer, j inner.
"""

import os
from pathlib import Path

import numpy as np

from cmcindex.errors import FieldFormatError
from cmcindex.models import Grid, ScalarField, TorusLattice
from cmcindex.utils.logger import get_logger

logger = get_logger(__name__)

MAGIC = b"CMCF1\n"


def encode_field(field: ScalarField) -> bytes:
    grid = field.grid
    lat = grid.lattice
    header = " ".join([
        str(grid.nx),
        str(grid.ny),
        repr(lat.omega1.real),
        repr(lat.omega1.imag),
        repr(lat.omega2.real),
        repr(lat.omega2.imag),
        str(lat.m),
    ])
    payload = np.ascontiguousarray(field.values, dtype="<f8").tobytes()
    return MAGIC + header.encode("ascii") + b"\n" + payload


def decode_field(data: bytes) -> ScalarField:
    """
    Parse CMCF bytes

    Raises:
        FieldFormatError: bad magic, malformed header, size mismatch or non-finite values
    """
    if not data.startswith(MAGIC):
        raise FieldFormatError("Missing CMCF1 magic")
    end = data.find(b"\n", len(MAGIC))
    if end < 0:
        raise FieldFormatError("Unterminated CMCF header")

    tokens = data[len(MAGIC):end].decode("ascii", errors="replace").split()
    if len(tokens) != 7:
        raise FieldFormatError(f"CMCF header needs 7 tokens, got {len(tokens)}")
    try:
        nx, ny, m = int(tokens[0]), int(tokens[1]), int(tokens[6])
        w1 = complex(float(tokens[2]), float(tokens[3]))
        w2 = complex(float(tokens[4]), float(tokens[5]))
        grid = Grid(TorusLattice(w1, w2, m), nx, ny)
    except ValueError as e:
        raise FieldFormatError(f"Malformed CMCF header: {e}") from e

    payload = data[end + 1:]
    expected = 8 * grid.size
    if len(payload) != expected:
        raise FieldFormatError(f"CMCF payload has {len(payload)} bytes, expected {expected}")

    values = np.frombuffer(payload, dtype="<f8").reshape(grid.shape)
    if not np.all(np.isfinite(values)):
        raise FieldFormatError("CMCF payload contains non-finite values")
    return ScalarField(grid, values.astype(np.float64))


def write_field(path: str | Path, field: ScalarField) -> None:
    path = Path(path)
    if path.parent and not path.parent.exists():
        os.makedirs(path.parent, exist_ok=True)
    path.write_bytes(encode_field(field))
    logger.debug(f"Wrote field {path}", extra={"grid": f"{field.grid.nx}x{field.grid.ny}"})


def read_field(path: str | Path) -> ScalarField:
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise FieldFormatError(f"Cannot read field {path}: {e}") from e
    return decode_field(data)
