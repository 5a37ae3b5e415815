"""Binary PGM (P5) and PPM (P6) image files, 8- and 16-bit.

Stored integers map to floats by maxval division, so a file read and
rewritten at the same bit depth round-trips losslessly. 16-bit samples
are big-endian, as the format requires.
"""

import numpy as np

__all__ = ["PnmError", "read_pnm", "write_pnm"]


class PnmError(Exception):
    """Malformed or unsupported PGM/PPM content."""


def _tokens(data):
    """Yield header tokens, treating '#' to end-of-line as a comment."""
    i = 0
    n = len(data)
    while i < n:
        c = data[i : i + 1]
        if c.isspace():
            i += 1
        elif c == b"#":
            while i < n and data[i : i + 1] not in (b"\n", b"\r"):
                i += 1
        else:
            j = i
            while j < n and not data[j : j + 1].isspace() and data[j : j + 1] != b"#":
                j += 1
            yield data[i:j], j
            i = j


def read_pnm(path):
    """Read a binary PGM/PPM file.

    Returns (image, maxval): image is float64 in [0, 1], shape (h, w)
    for PGM or (h, w, 3) for PPM.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    toks = _tokens(data)
    try:
        magic, _ = next(toks)
        fields = []
        for _ in range(3):
            tok, end = next(toks)
            fields.append(tok)
    except StopIteration:
        raise PnmError(f"{path}: truncated header") from None
    if magic not in (b"P5", b"P6"):
        raise PnmError(f"{path}: not a binary PGM/PPM (magic {magic!r})")
    try:
        width, height, maxval = (int(f) for f in fields)
    except ValueError:
        raise PnmError(f"{path}: non-numeric header field") from None
    if width < 1 or height < 1:
        raise PnmError(f"{path}: bad dimensions {width}x{height}")
    if not 0 < maxval < 65536:
        raise PnmError(f"{path}: maxval {maxval} out of range")
    # exactly one whitespace byte separates header from raster
    raster = data[end + 1 :]
    channels = 3 if magic == b"P6" else 1
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    need = width * height * channels * dtype.itemsize
    if len(raster) < need:
        raise PnmError(f"{path}: raster truncated ({len(raster)} of {need} bytes)")
    img = np.frombuffer(raster[:need], dtype=dtype).astype(float) / maxval
    img = img.reshape((height, width, channels))
    if img.max() > 1.0:
        raise PnmError(f"{path}: sample exceeds declared maxval")
    return (img[:, :, 0] if channels == 1 else img), maxval


def write_pnm(path, img, bits=8):
    """Write floats in [0, 1] as binary PGM (2-D input) or PPM
    ((h, w, 3) input). Values are clipped, then scaled and rounded to
    the requested depth (8 or 16 bits)."""
    if bits not in (8, 16):
        raise ValueError(f"bits must be 8 or 16, got {bits!r}")
    img = np.asarray(img, dtype=float)
    if img.ndim == 2:
        magic, channels = b"P5", 1
    elif img.ndim == 3 and img.shape[2] == 3:
        magic, channels = b"P6", 3
    else:
        raise ValueError(f"image must be (h, w) or (h, w, 3), got {img.shape}")
    maxval = 255 if bits == 8 else 65535
    dtype = np.dtype("u1") if bits == 8 else np.dtype(">u2")
    quant = np.rint(np.clip(img, 0.0, 1.0) * maxval).astype(dtype)
    h, w = img.shape[0], img.shape[1]
    with open(path, "wb") as fh:
        fh.write(magic + b"\n%d %d\n%d\n" % (w, h, maxval))
        fh.write(quant.tobytes())
