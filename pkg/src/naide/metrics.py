"""Reconstruction quality metrics and multi-image evaluation."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .denoiser import denoise_image
from .errors import DataError, ShapeError
from .image import KIND_CLEAN, GrayImage, load_pgm
from .mlp import MlpWeights
from .noise import NoiseSpec, add_gaussian_noise, derived_rng

# keep noise-seed derivation aligned with training.make_supervised_dataset
_STREAM_NOISE = 1


def mse(reference: GrayImage, test: GrayImage) -> float:
    """Mean squared error on the normalized scale; reference must be clean."""
    if reference.kind != KIND_CLEAN:
        raise DataError("metric reference must be a clean image")
    if reference.pixels.shape != test.pixels.shape:
        raise ShapeError(
            f"shape mismatch: reference {reference.pixels.shape}, test {test.pixels.shape}"
        )
    diff = reference.pixels - test.pixels
    return float(np.mean(diff * diff))


def psnr(reference: GrayImage, test: GrayImage) -> float:
    """Peak signal-to-noise ratio in dB for peak value 1.0.

    -10 log10(mse); identical images give +inf.
    """
    err = mse(reference, test)
    if err == 0.0:
        return float("inf")
    return float(-10.0 * np.log10(err))


@dataclass(frozen=True)
class ImageMetric:
    """Quality of one reconstructed image."""

    name: str
    psnr_db: float
    mse: float


@dataclass(frozen=True)
class MetricReport:
    """Per-image metrics plus their population mean/spread."""

    per_image: tuple[ImageMetric, ...]

    @property
    def mean_psnr(self) -> float:
        return float(np.mean([m.psnr_db for m in self.per_image]))

    @property
    def std_psnr(self) -> float:
        return float(np.std([m.psnr_db for m in self.per_image]))


def evaluate_images(
    clean_images: list[tuple[str, GrayImage]],
    weights: MlpWeights,
    spec: NoiseSpec,
    k: int,
    master_seed: int = 0,
) -> MetricReport:
    """Noise each clean image deterministically, denoise, and score.

    Per-image noise seeds are derived from the list position, matching
    the supervised-dataset convention, so the same (images, seed) pair
    reproduces the same corruption everywhere in the package.
    """
    if not clean_images:
        raise DataError("no images to evaluate")
    results = []
    for i, (name, clean) in enumerate(clean_images):
        noisy = add_gaussian_noise(clean, spec, derived_rng(master_seed, _STREAM_NOISE, i))
        recon = denoise_image(weights, noisy, k)
        results.append(ImageMetric(name, psnr(clean, recon), mse(clean, recon)))
    return MetricReport(tuple(results))


def evaluate_suite(
    clean_dir, weights: MlpWeights, spec: NoiseSpec, k: int, master_seed: int = 0
) -> MetricReport:
    """Evaluate every readable .pgm in a directory, sorted by filename.

    Unreadable files are skipped with a warning; if none survive, that is
    an error.
    """
    clean_dir = Path(clean_dir)
    images = []
    for path in sorted(clean_dir.glob("*.pgm")):
        try:
            images.append((path.name, load_pgm(path)))
        except Exception as exc:  # noqa: BLE001 - skip-and-warn is the contract
            warnings.warn(f"skipping {path.name}: {exc}", stacklevel=2)
    if not images:
        raise DataError(f"no readable .pgm images in {clean_dir}")
    return evaluate_images(images, weights, spec, k, master_seed)


def write_metrics_csv(report: MetricReport, path) -> None:
    """Dump a MetricReport as CSV with header image,psnr_db,mse."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image", "psnr_db", "mse"])
        for m in report.per_image:
            writer.writerow([m.name, repr(float(m.psnr_db)), repr(float(m.mse))])
