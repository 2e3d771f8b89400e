"""Grayscale image container and file I/O.

Two on-disk formats are supported:

* PGM (binary P5, maxval 255): 8-bit interchange format. Values are
  divided by 255 on load; on save, pixels are clamped to [0, 1] and
  rounded to the nearest 8-bit level, so the round trip is lossless
  exactly for images whose pixels are multiples of 1/255.
* NGF: a tiny lossless float container for continuous-valued (typically
  noisy) images. Layout: magic "NGF1", width and height as u32 LE, then
  width*height float64 LE pixels in row-major order.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

from .errors import DataError, ParseError

NGF_MAGIC = b"NGF1"

KIND_CLEAN = "clean"
KIND_NOISY = "noisy"


@dataclass
class GrayImage:
    """2-D grid of real-valued pixels on the normalized scale (1.0 = 255).

    `kind` records whether the pixels are a clean image (all values must
    lie in [0, 1]) or a noisy observation (finite but unbounded: noisy
    values are deliberately never clipped).
    """

    pixels: np.ndarray  # (height, width) float64, row-major
    kind: str = KIND_NOISY

    def __post_init__(self):
        self.pixels = np.ascontiguousarray(self.pixels, dtype=np.float64)
        if self.pixels.ndim != 2 or self.pixels.size == 0:
            raise DataError(f"image must be a non-empty 2-D array, got shape {self.pixels.shape}")
        if not np.isfinite(self.pixels).all():
            raise DataError("image contains non-finite pixels")
        if self.kind not in (KIND_CLEAN, KIND_NOISY):
            raise DataError(f"unknown image kind {self.kind!r}")
        if self.kind == KIND_CLEAN:
            lo, hi = float(self.pixels.min()), float(self.pixels.max())
            if lo < 0.0 or hi > 1.0:
                raise DataError(f"clean image has pixels outside [0, 1]: min={lo}, max={hi}")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def copy(self) -> "GrayImage":
        return GrayImage(self.pixels.copy(), self.kind)


def _tokenize_pgm_header(data: bytes):
    """Yield (token, offset) for the first 4 whitespace-separated header
    tokens, honoring '#' comments, then the offset of the payload."""
    tokens = []
    i = 0
    n = len(data)
    while len(tokens) < 4:
        while i < n and data[i : i + 1].isspace():
            i += 1
        if i < n and data[i : i + 1] == b"#":
            while i < n and data[i] != 0x0A:
                i += 1
            continue
        if i >= n:
            raise ParseError(f"truncated PGM header at byte {i}: expected 4 fields, got {len(tokens)}")
        start = i
        while i < n and not data[i : i + 1].isspace():
            i += 1
        tokens.append((data[start:i], start))
    # exactly one whitespace byte separates the maxval from the payload
    if i >= n:
        raise ParseError(f"truncated PGM at byte {i}: missing raster")
    return tokens, i + 1


def load_pgm(path: str | os.PathLike) -> GrayImage:
    """Read a binary (P5) PGM with maxval 255; pixels come back in [0, 1]."""
    with open(path, "rb") as fh:
        data = fh.read()
    tokens, payload_at = _tokenize_pgm_header(data)
    (magic, magic_at), (w_tok, w_at), (h_tok, h_at), (max_tok, max_at) = tokens
    if magic != b"P5":
        raise ParseError(f"unsupported PNM magic {magic!r} at byte {magic_at}: only binary P5 is handled")
    try:
        width, height, maxval = int(w_tok), int(h_tok), int(max_tok)
    except ValueError:
        raise ParseError(f"non-numeric PGM header field near byte {w_at}") from None
    if width <= 0 or height <= 0:
        raise ParseError(f"bad PGM dimensions {width}x{height} at byte {w_at}")
    if maxval != 255:
        raise ParseError(f"unsupported PGM maxval {maxval} at byte {max_at}: must be 255")
    expected = width * height
    raster = data[payload_at : payload_at + expected]
    if len(raster) != expected:
        raise ParseError(
            f"truncated PGM raster at byte {payload_at}: expected {expected} bytes, got {len(raster)}"
        )
    values = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    return GrayImage(values.astype(np.float64) / 255.0, KIND_CLEAN)


def save_pgm(image: GrayImage, path: str | os.PathLike) -> None:
    """Write binary P5. Pixels are clamped to [0, 1] and rounded half-up
    to the nearest 1/255 level; quantization happens here only, metrics
    always run on the continuous values."""
    levels = np.floor(np.clip(image.pixels, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    header = f"P5\n{image.width} {image.height}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(levels.tobytes())


def load_ngf(path: str | os.PathLike) -> GrayImage:
    """Read the lossless float container; the result is tagged noisy."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 12:
        raise ParseError(f"truncated NGF header: expected 12 bytes, got {len(data)}")
    if data[:4] != NGF_MAGIC:
        raise ParseError(f"bad NGF magic {data[:4]!r} at byte 0")
    width, height = struct.unpack_from("<II", data, 4)
    if width == 0 or height == 0:
        raise ParseError(f"bad NGF dimensions {width}x{height} at byte 4")
    expected = 12 + 8 * width * height
    if len(data) != expected:
        raise ParseError(
            f"truncated NGF payload at byte 12: expected {expected} total bytes, got {len(data)}"
        )
    pixels = np.frombuffer(data, dtype="<f8", offset=12).reshape(height, width)
    return GrayImage(pixels.copy(), KIND_NOISY)


def save_ngf(image: GrayImage, path: str | os.PathLike) -> None:
    with open(path, "wb") as fh:
        fh.write(NGF_MAGIC)
        fh.write(struct.pack("<II", image.width, image.height))
        fh.write(np.ascontiguousarray(image.pixels, dtype="<f8").tobytes())


def load_image(path: str | os.PathLike) -> GrayImage:
    """Load a PGM or NGF file, sniffing the format from its magic bytes."""
    if not os.path.exists(path):
        raise DataError(f"no such image file: {path}")
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head[:2] == b"P5":
        return load_pgm(path)
    if head == NGF_MAGIC:
        return load_ngf(path)
    raise ParseError(f"unrecognized image magic {head!r} at byte 0 in {path}")


def save_image(image: GrayImage, path: str | os.PathLike) -> None:
    """Save by extension: .pgm quantizes to 8 bits, .ngf is lossless."""
    ext = os.path.splitext(str(path))[1].lower()
    if ext == ".pgm":
        save_pgm(image, path)
    elif ext == ".ngf":
        save_ngf(image, path)
    else:
        raise DataError(f"cannot infer image format from extension {ext!r} (use .pgm or .ngf)")
