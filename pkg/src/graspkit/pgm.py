"""Binary portable graymap (P5) reading and writing.

Depth images use maxval 65535 (two bytes per pixel, big-endian); masks use
maxval 1. The writer is byte-deterministic.
"""
from __future__ import annotations

import numpy as np

from .errors import FormatError


def write_pgm(path, values: np.ndarray, maxval: int) -> None:
    arr = np.asarray(values)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {arr.shape}")
    if not 0 < maxval <= 65535:
        raise ValueError(f"maxval out of range: {maxval}")
    if arr.min() < 0 or arr.max() > maxval:
        raise ValueError("pixel values out of range for maxval")
    h, w = arr.shape
    header = f"P5\n{w} {h}\n{maxval}\n".encode("ascii")
    dtype = ">u2" if maxval > 255 else np.uint8
    with open(path, "wb") as f:
        f.write(header)
        f.write(arr.astype(dtype).tobytes())


def read_pgm(path) -> tuple[np.ndarray, int]:
    """Returns (values, maxval). Values keep the stored integer type."""
    with open(path, "rb") as f:
        data = f.read()
    if not data.startswith(b"P5"):
        raise FormatError("not a binary portable graymap (missing P5)", path=path)
    # header: magic, width, height, maxval as whitespace-separated tokens
    tokens = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError("truncated header", path=path)
        tokens.append(data[start:pos])
    pos += 1  # single whitespace byte after maxval
    try:
        w, h, maxval = (int(t) for t in tokens)
    except ValueError:
        raise FormatError(f"bad header tokens {tokens!r}", path=path) from None
    if w <= 0 or h <= 0 or not 0 < maxval <= 65535:
        raise FormatError("bad image dimensions or maxval", path=path)
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype(np.uint8)
    expected = w * h * dtype.itemsize
    body = data[pos : pos + expected]
    if len(body) != expected:
        raise FormatError(
            f"expected {expected} pixel bytes, found {len(body)}", path=path
        )
    values = np.frombuffer(body, dtype=dtype).reshape(h, w)
    if maxval > 255:
        values = values.astype(np.uint16)
    if values.max(initial=0) > maxval:
        raise FormatError("pixel value exceeds declared maxval", path=path)
    return values, maxval
