"""Image file codecs: binary PGM/PPM writing, PGM/PPM/BMP reading.

Only the formats the capture rigs actually produce. PGM (P5) and PPM
(P6) are written with maxval 255, rows top-down, no comments. Readers
additionally accept uncompressed 24-bit BMP, normalizing its bottom-up
row order and stripping the per-row padding so callers always see
top-down (channels, rows, width) uint8.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .sensor import Frame

__all__ = ["ImageParseError", "write_image", "read_image", "read_stack"]


class ImageParseError(ValueError):
    """Raised when a file does not decode as PGM, PPM or 24-bit BMP."""


def write_image(frame: Frame, path: str | Path) -> None:
    """Write a frame as binary PGM (1 channel) or PPM (3 channels).

    The extension must agree with the channel count: .pgm is mono,
    .ppm is RGB.
    """
    path = Path(path)
    suffix = path.suffix.lower()
    if frame.channels == 1:
        if suffix != ".pgm":
            raise ValueError(f"1-channel frames write .pgm, got {path.name!r}")
        magic, payload = b"P5", frame.pixels[0].tobytes()
    else:
        if suffix != ".ppm":
            raise ValueError(f"3-channel frames write .ppm, got {path.name!r}")
        # P6 interleaves RGB per pixel.
        magic, payload = b"P6", np.transpose(frame.pixels, (1, 2, 0)).tobytes()
    header = b"%s\n%d %d\n255\n" % (magic, frame.width, frame.rows)
    path.write_bytes(header + payload)


def read_image(path: str | Path) -> Frame:
    """Load one image file; format is detected from its magic bytes."""
    path = Path(path)
    data = path.read_bytes()
    if data[:2] in (b"P5", b"P6"):
        return _read_pnm(data, path)
    if data[:2] == b"BM":
        return _read_bmp(data, path)
    raise ImageParseError(f"{path}: unknown magic {data[:2]!r}")


def read_stack(paths) -> list[Frame]:
    return [read_image(p) for p in paths]


def _read_pnm(data: bytes, path: Path) -> Frame:
    channels = 1 if data[:2] == b"P5" else 3
    pos = 2
    fields = []
    while len(fields) < 3:
        # Skip whitespace and '#' comment lines between header tokens.
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        token = data[start:pos]
        if not token.isdigit():
            raise ImageParseError(f"{path}: bad header token {token!r}")
        fields.append(int(token))
    if pos >= len(data):
        raise ImageParseError(f"{path}: truncated header")
    pos += 1  # single whitespace byte terminates the header
    width, rows, maxval = fields
    if width < 1 or rows < 1:
        raise ImageParseError(f"{path}: bad dimensions {width}x{rows}")
    if not 0 < maxval <= 255:
        raise ImageParseError(f"{path}: unsupported maxval {maxval}")
    need = width * rows * channels
    payload = data[pos : pos + need]
    if len(payload) < need:
        raise ImageParseError(
            f"{path}: payload truncated, need {need} bytes, have {len(payload)}"
        )
    grid = np.frombuffer(payload, dtype=np.uint8).reshape(rows, width, channels)
    return Frame(pixels=np.ascontiguousarray(np.transpose(grid, (2, 0, 1))))


def _read_bmp(data: bytes, path: Path) -> Frame:
    if len(data) < 54:
        raise ImageParseError(f"{path}: truncated BMP header")
    # BITMAPFILEHEADER: magic, file size, reserved, pixel data offset.
    pixel_offset = struct.unpack_from("<I", data, 10)[0]
    header_size = struct.unpack_from("<I", data, 14)[0]
    if header_size < 40:
        raise ImageParseError(f"{path}: unsupported BMP header size {header_size}")
    width, height = struct.unpack_from("<ii", data, 18)
    planes, bpp = struct.unpack_from("<HH", data, 26)
    compression = struct.unpack_from("<I", data, 30)[0]
    if planes != 1:
        raise ImageParseError(f"{path}: bad plane count {planes}")
    if bpp != 24:
        raise ImageParseError(f"{path}: unsupported bit depth {bpp}, need 24")
    if compression != 0:
        raise ImageParseError(f"{path}: unsupported compression {compression}, need BI_RGB")
    if width < 1 or height == 0:
        raise ImageParseError(f"{path}: bad dimensions {width}x{height}")

    bottom_up = height > 0
    rows = abs(height)
    row_bytes = (width * 3 + 3) & ~3  # rows padded to 4-byte boundaries
    need = rows * row_bytes
    payload = data[pixel_offset : pixel_offset + need]
    if len(payload) < need:
        raise ImageParseError(
            f"{path}: pixel data truncated, need {need} bytes, have {len(payload)}"
        )
    raw = np.frombuffer(payload, dtype=np.uint8).reshape(rows, row_bytes)
    bgr = raw[:, : width * 3].reshape(rows, width, 3)
    if bottom_up:
        bgr = bgr[::-1]
    rgb = bgr[:, :, ::-1]
    return Frame(pixels=np.ascontiguousarray(np.transpose(rgb, (2, 0, 1))))
