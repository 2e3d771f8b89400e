"""Additive Gaussian corruption and noise-level bookkeeping.

Noise levels are configured in 8-bit units (e.g. sigma = 25) and converted
to the normalized [0, 1] pixel scale internally; every loss and stopping
rule in the package works with the normalized variance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .image import KIND_NOISY, GrayImage


@dataclass(frozen=True)
class NoiseSpec:
    """Zero-mean additive noise with known standard deviation.

    sigma_255 is in 8-bit units; sigma_norm and variance_norm are the
    exact conversions to the normalized pixel scale.
    """

    sigma_255: float

    def __post_init__(self):
        if not (self.sigma_255 > 0 and np.isfinite(self.sigma_255)):
            raise ConfigError(f"sigma must be positive and finite, got {self.sigma_255}")

    @property
    def sigma_norm(self) -> float:
        return self.sigma_255 / 255.0

    @property
    def variance_norm(self) -> float:
        return self.sigma_norm**2


def derived_rng(master_seed: int, *key: int) -> np.random.Generator:
    """Deterministic child generator for (master_seed, key...).

    Distinct keys give statistically independent streams; the same pair
    always yields the same stream, which keeps multi-image runs
    reproducible while each image still gets its own noise.
    """
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=tuple(key)))


def add_gaussian_noise(
    image: GrayImage, spec: NoiseSpec, seed: "int | np.random.Generator"
) -> GrayImage:
    """Corrupt a clean image: Z = x + N with N iid Gaussian(0, sigma_norm^2).

    The result keeps continuous values and is never clipped to [0, 1].
    The input image is not mutated. seed may be an int or an existing
    Generator (e.g. from derived_rng) for per-image streams.
    """
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, spec.sigma_norm, size=image.pixels.shape)
    return GrayImage(image.pixels + noise, KIND_NOISY)
