"""Per-pixel context extraction: the k x k neighborhood with the center
pixel removed.

The window is gathered in row-major order, the center entry is dropped and
0.5 is subtracted from every remaining value so the network input is
centered around zero. Windows that stick out of the image are completed by
symmetric (edge-inclusive mirror) padding, so no pixel values are invented
at the borders. Crucially the center pixel itself never enters the vector:
the affine parameters computed from a context are exactly invariant to the
value they will be applied to.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConfigError, ShapeError
from .image import GrayImage


def validate_k(k: int) -> int:
    if not isinstance(k, (int, np.integer)) or k < 3 or k % 2 == 0:
        raise ConfigError(f"context size k must be an odd integer >= 3, got {k!r}")
    return int(k)


def context_width(k: int) -> int:
    """Length of a context vector: the k x k window minus its center."""
    return validate_k(k) ** 2 - 1


def pad_for_context(pixels: np.ndarray, k: int) -> np.ndarray:
    """Symmetric-pad a (H, W) array by k//2 on every side.

    With this padding, the k x k window whose top-left corner sits at
    padded[r, c] is exactly the window centered on original pixel (r, c).
    """
    validate_k(k)
    return np.pad(pixels, k // 2, mode="symmetric")


@dataclass
class ContextVector:
    """Centered hole-context of one pixel: k*k - 1 values, row-major."""

    k: int
    values: np.ndarray

    def __post_init__(self):
        validate_k(self.k)
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.shape != (self.k**2 - 1,):
            raise ShapeError(
                f"context for k={self.k} must have {self.k**2 - 1} values, got shape {self.values.shape}"
            )


def gather_contexts(
    padded: np.ndarray,
    rows: np.ndarray,
    cols: np.ndarray,
    k: int,
    out: np.ndarray | None = None,
) -> np.ndarray:
    """Batch-extract contexts for original-image pixels (rows[i], cols[i]).

    `padded` must come from pad_for_context with the same k. Returns a
    (len(rows), k*k - 1) float64 array; this is the hot path of training
    and denoising and dispatches to the selected kernel backend.
    """
    rows = np.ascontiguousarray(rows, dtype=np.intp)
    cols = np.ascontiguousarray(cols, dtype=np.intp)
    if rows.shape != cols.shape or rows.ndim != 1:
        raise ShapeError(f"rows/cols must be equal-length 1-D arrays, got {rows.shape} and {cols.shape}")
    if out is None:
        out = np.empty((rows.shape[0], k * k - 1), dtype=np.float64)
    elif out.shape != (rows.shape[0], k * k - 1) or out.dtype != np.float64 or not out.flags.c_contiguous:
        raise ShapeError(f"out must be C-contiguous float64 of shape {(rows.shape[0], k * k - 1)}")
    padded = np.ascontiguousarray(padded, dtype=np.float64)
    _kernels.gather_contexts(padded, rows, cols, k, out)
    return out


def extract_context(image: GrayImage, row: int, col: int, k: int) -> ContextVector:
    """Context of a single pixel; see the module docstring for the layout."""
    validate_k(k)
    if not (0 <= row < image.height and 0 <= col < image.width):
        raise IndexError(
            f"pixel ({row}, {col}) outside {image.height}x{image.width} image"
        )
    padded = pad_for_context(image.pixels, k)
    values = gather_contexts(padded, np.array([row]), np.array([col]), k)
    return ContextVector(k, values[0])
