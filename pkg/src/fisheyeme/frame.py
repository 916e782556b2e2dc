"""Single-channel 8-bit frames, netpbm I/O, and continuous sampling.

Frames store luminance row-major as a ``(height, width)`` uint8 array.
A pixel's continuous coordinate is its integer index, so sampling an
``InterpolatedRef`` at integer ``(x, y)`` returns the stored value exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import UsageError


@dataclass(frozen=True)
class Frame:
    """Luminance raster. ``luma`` has shape ``(height, width)``, dtype uint8."""

    width: int
    height: int
    luma: np.ndarray

    def __post_init__(self):
        if self.luma.shape != (self.height, self.width):
            raise UsageError(
                f"luma shape {self.luma.shape} does not match "
                f"{self.height}x{self.width}"
            )
        if self.luma.dtype != np.uint8:
            raise UsageError(f"luma must be uint8, got {self.luma.dtype}")

    @classmethod
    def from_array(cls, luma: np.ndarray) -> "Frame":
        luma = np.ascontiguousarray(luma, dtype=np.uint8)
        h, w = luma.shape
        return cls(width=w, height=h, luma=luma)

    def as_float(self) -> np.ndarray:
        return self.luma.astype(np.float64)


@dataclass(frozen=True)
class InterpolatedRef:
    """A reference frame with a continuous bilinear sampling interface.

    Coordinates outside the frame are clamped to the border row/column,
    never wrapped.
    """

    frame: Frame
    luma_f64: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.luma_f64 is None:
            object.__setattr__(self, "luma_f64", self.frame.as_float())

    def sample(self, x, y):
        """Bilinear sample at real coordinates; scalar or array in, same out."""
        return sample(self, x, y)


def sample(ref: InterpolatedRef, x, y):
    """Bilinear interpolation of ``ref`` at clamped real coordinates."""
    xs = np.atleast_1d(np.asarray(x, dtype=np.float64)).ravel()
    ys = np.atleast_1d(np.asarray(y, dtype=np.float64)).ravel()
    if xs.shape != ys.shape:
        raise UsageError("x and y must have the same shape")
    out = np.empty(xs.shape[0], dtype=np.float64)
    _kernels.sample_points(ref.luma_f64, xs, ys, out)
    if np.isscalar(x) or np.asarray(x).ndim == 0:
        return float(out[0])
    return out.reshape(np.asarray(x).shape)


def read_pgm(path) -> Frame:
    """Read a binary PGM (P5, maxval 255)."""
    with open(path, "rb") as fh:
        data = fh.read()
    magic, pos = _next_token(data, 0)
    if magic != b"P5":
        raise UsageError(f"{path}: not a binary PGM (magic {magic!r})")
    width, pos = _next_token(data, pos)
    height, pos = _next_token(data, pos)
    maxval, pos = _next_token(data, pos)
    w, h, mv = int(width), int(height), int(maxval)
    if mv != 255:
        raise UsageError(f"{path}: unsupported maxval {mv} (need 255)")
    raster = data[pos : pos + w * h]
    if len(raster) != w * h:
        raise UsageError(f"{path}: truncated raster ({len(raster)} of {w * h} bytes)")
    luma = np.frombuffer(raster, dtype=np.uint8).reshape(h, w).copy()
    return Frame(width=w, height=h, luma=luma)


def write_pgm(frame: Frame, path) -> None:
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (frame.width, frame.height))
        fh.write(frame.luma.tobytes())


def write_ppm(rgb: np.ndarray, path) -> None:
    """Write an ``(h, w, 3)`` uint8 array as binary PPM (P6)."""
    if rgb.ndim != 3 or rgb.shape[2] != 3 or rgb.dtype != np.uint8:
        raise UsageError("rgb must be (h, w, 3) uint8")
    h, w, _ = rgb.shape
    with open(path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (w, h))
        fh.write(np.ascontiguousarray(rgb).tobytes())


def _next_token(data: bytes, pos: int):
    # netpbm headers allow '#' comments and arbitrary whitespace between tokens
    while True:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        break
    start = pos
    while pos < len(data) and not data[pos : pos + 1].isspace():
        pos += 1
    if start == pos:
        raise UsageError("malformed netpbm header")
    # exactly one whitespace byte separates the header from the raster
    return data[start:pos], pos + 1 if data[pos : pos + 1].isspace() else pos
