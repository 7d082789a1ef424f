"""Minimal binary PGM (P5) / PPM (P6) reading and writing."""

from __future__ import annotations

import os
import tempfile

import numpy as np


def _umask() -> int:
    mask = os.umask(0)
    os.umask(mask)
    return mask


_FILE_MODE = 0o666 & ~_umask()  # mkstemp would leave outputs at 0600


def _tokens(data: bytes, count: int) -> tuple[list[int], int]:
    # Header tokens are whitespace separated; '#' starts a comment up to end of line.
    out = []
    pos = 0
    while len(out) < count:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise ValueError("truncated PNM header")
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        out.append(data[start:pos])
    # exactly one whitespace byte separates the header from the raster
    return out, pos + 1


def read_pnm(path) -> np.ndarray:
    """Read a binary PGM/PPM file.

    Returns an array of shape (rows, cols) for P5 and (rows, cols, 3) for
    P6, row 0 being the top of the image.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    toks, offset = _tokens(data, 4)
    magic = toks[0]
    if magic not in (b"P5", b"P6"):
        raise ValueError(f"unsupported PNM magic {magic!r} (need P5 or P6)")
    try:
        width, height, maxval = (int(t) for t in toks[1:4])
    except ValueError as exc:
        raise ValueError("malformed PNM header") from exc
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise ValueError("invalid PNM dimensions or maxval")
    channels = 3 if magic == b"P6" else 1
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    n = width * height * channels
    raster = np.frombuffer(data, dtype=dtype, count=n, offset=offset)
    if raster.size != n:
        raise ValueError("truncated PNM raster")
    raster = raster.astype(np.int64)
    if channels == 3:
        return raster.reshape(height, width, 3)
    return raster.reshape(height, width)


def encode_pnm(raster: np.ndarray) -> bytes:
    raster = np.asarray(raster)
    if raster.ndim == 2:
        magic = b"P5"
    elif raster.ndim == 3 and raster.shape[2] == 3:
        magic = b"P6"
    else:
        raise ValueError("raster must be (H, W) or (H, W, 3)")
    if raster.min(initial=0) < 0 or raster.max(initial=0) > 255:
        raise ValueError("raster values must lie in 0..255")
    h, w = raster.shape[:2]
    header = b"%s\n%d %d\n255\n" % (magic, w, h)
    return header + raster.astype(np.uint8).tobytes()


def atomic_write_bytes(path, payload: bytes) -> None:
    """Write via a temp file in the target directory, then rename over `path`."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.chmod(tmp, _FILE_MODE)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_pnm(path, raster: np.ndarray) -> None:
    atomic_write_bytes(path, encode_pnm(raster))
