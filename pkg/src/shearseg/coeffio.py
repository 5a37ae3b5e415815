"""Coefficient dump files.

Layout: the magic line "SHCOEF1", a text line "N j0 eta", one table
line per plane ("lowpass - -" or "kind j k"), then the planes as
row-major little-endian float64 in system order. The binary section is
written and compared bit-exactly.
"""

import numpy as np

from .frame import build_system
from .transform import Coefficients

__all__ = ["CoeffDumpError", "write_coefficients", "read_coefficients"]

MAGIC = b"SHCOEF1\n"


class CoeffDumpError(Exception):
    """Corrupt or inconsistent coefficient dump."""


def _table_line(sb):
    if sb.kind == "lowpass":
        return "lowpass - -"
    return f"{sb.kind} {sb.j} {sb.k}"


def write_coefficients(path, coeffs):
    """Write a Coefficients object; the planes survive bit-exactly."""
    system = coeffs.system
    lines = [f"{system.n} {system.grid.j0} {system.num_subbands}"]
    lines.extend(_table_line(sb) for sb in system.subbands)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(("\n".join(lines) + "\n").encode("ascii"))
        fh.write(np.ascontiguousarray(coeffs.planes, dtype="<f8").tobytes())


def read_coefficients(path, system=None):
    """Read a dump back into Coefficients.

    Rebuilds the frame for the stored side length unless a matching
    system is supplied. Raises CoeffDumpError on bad magic, header and
    table inconsistencies, or a short binary section.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(MAGIC):
        raise CoeffDumpError(f"{path}: bad magic")
    pos = len(MAGIC)

    def take_line():
        nonlocal pos
        nl = data.find(b"\n", pos)
        if nl < 0:
            raise CoeffDumpError(f"{path}: truncated header")
        line = data[pos:nl].decode("ascii", errors="replace")
        pos = nl + 1
        return line

    head = take_line().split()
    if len(head) != 3:
        raise CoeffDumpError(f"{path}: malformed size line")
    try:
        n, j0, eta = (int(x) for x in head)
    except ValueError:
        raise CoeffDumpError(f"{path}: non-numeric size line") from None
    if system is None:
        system = build_system(n)
    if system.n != n:
        raise CoeffDumpError(f"{path}: dump side {n} != system side {system.n}")
    if j0 != system.grid.j0 or eta != system.num_subbands:
        raise CoeffDumpError(
            f"{path}: header (j0={j0}, eta={eta}) does not match side {n} "
            f"(expects j0={system.grid.j0}, eta={system.num_subbands})"
        )
    for sb in system.subbands:
        if take_line() != _table_line(sb):
            raise CoeffDumpError(f"{path}: subband table mismatch")
    need = eta * n * n * 8
    raw = data[pos : pos + need]
    if len(raw) < need:
        raise CoeffDumpError(f"{path}: binary section truncated ({len(raw)} of {need} bytes)")
    planes = np.frombuffer(raw, dtype="<f8").reshape((eta, n, n)).copy()
    return Coefficients(planes=planes, system=system)
