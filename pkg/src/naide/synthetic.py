"""Deterministic synthetic grayscale scenes for tests and demos.

All generators return clean images, are pure functions of their
arguments, and keep values strictly inside [0, 1].
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .image import KIND_CLEAN, GrayImage


def _check_size(height: int, width: int):
    if height < 1 or width < 1:
        raise ConfigError(f"image size must be positive, got {height}x{width}")


def piecewise_constant(height: int, width: int, seed: int = 0, n_levels: int = 6) -> GrayImage:
    """Axis-aligned rectangles of constant gray over a constant background.

    Strong edges and flat regions: the easiest structure for a context
    denoiser to exploit, useful for fast convergence in tests.
    """
    _check_size(height, width)
    if n_levels < 2:
        raise ConfigError(f"need at least 2 gray levels, got {n_levels}")
    rng = np.random.default_rng(seed)
    levels = np.linspace(0.1, 0.9, n_levels)
    pixels = np.full((height, width), levels[0])
    for level in levels[1:]:
        r0 = rng.integers(0, max(1, height - 2))
        c0 = rng.integers(0, max(1, width - 2))
        r1 = rng.integers(r0 + 1, height + 1)
        c1 = rng.integers(c0 + 1, width + 1)
        pixels[r0:r1, c0:c1] = level
    return GrayImage(pixels, KIND_CLEAN)


def gradient_ramp(height: int, width: int, axis: int = 1) -> GrayImage:
    """Linear ramp from 0.05 to 0.95 along the given axis."""
    _check_size(height, width)
    n = width if axis == 1 else height
    ramp = np.linspace(0.05, 0.95, n)
    pixels = np.tile(ramp, (height, 1)) if axis == 1 else np.tile(ramp[:, None], (1, width))
    return GrayImage(np.ascontiguousarray(pixels), KIND_CLEAN)


def textured(height: int, width: int, seed: int = 0) -> GrayImage:
    """Smooth band-limited texture: sum of a few random 2-d cosines.

    No flat regions at all, which makes slope-vs-intercept trade-offs
    nontrivial for the denoiser.
    """
    _check_size(height, width)
    rng = np.random.default_rng(seed)
    rr, cc = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    pixels = np.zeros((height, width))
    for _ in range(5):
        fr, fc = rng.uniform(0.02, 0.2, size=2)
        phase = rng.uniform(0, 2 * np.pi)
        pixels += rng.uniform(0.3, 1.0) * np.cos(2 * np.pi * (fr * rr + fc * cc) + phase)
    lo, hi = pixels.min(), pixels.max()
    pixels = 0.1 + 0.8 * (pixels - lo) / (hi - lo)
    return GrayImage(np.ascontiguousarray(pixels), KIND_CLEAN)


def scene(height: int, width: int, seed: int = 0) -> GrayImage:
    """Natural-ish composite: smooth background, a few shapes, mild texture.

    Mixes flat areas, edges and gradients so metrics on it behave like on
    photographic content.
    """
    _check_size(height, width)
    rng = np.random.default_rng(seed)
    rr, cc = np.meshgrid(np.linspace(0, 1, height), np.linspace(0, 1, width), indexing="ij")
    pixels = 0.45 + 0.25 * np.cos(np.pi * (rr + 0.3)) * np.cos(np.pi * (cc - 0.2))

    for _ in range(4):
        cy, cx = rng.uniform(0.15, 0.85, size=2)
        radius = rng.uniform(0.08, 0.22)
        level = rng.uniform(0.15, 0.85)
        mask = (rr - cy) ** 2 + (cc - cx) ** 2 < radius**2
        pixels[mask] = level

    fine = textured(height, width, seed=seed + 1).pixels
    pixels = 0.85 * pixels + 0.15 * fine
    return GrayImage(np.clip(pixels, 0.02, 0.98), KIND_CLEAN)
