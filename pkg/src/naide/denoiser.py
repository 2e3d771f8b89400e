"""Pixel-wise affine denoising and its two training objectives.

Every pixel is reconstructed as slope * noisy_value + intercept, where the
two affine parameters are produced by the network from the pixel's
hole-context alone. Because the center value never reaches the network,
the quantity

    (Z - (a*Z + b))**2 + 2*a*sigma^2

is, conditionally on the context, an unbiased estimate of the true squared
error plus sigma^2. Its mean over an image is therefore a training signal
that needs no clean data; `verify_lemma_monte_carlo` checks the identity
by simulation against the closed-form expectation.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .context import context_width, gather_contexts, pad_for_context, validate_k
from .errors import ConfigError, ShapeError
from .image import KIND_CLEAN, GrayImage
from .mlp import Gradients, MlpWeights, backward, forward
from .noise import NoiseSpec

# pixels per chunk when sweeping a whole image; bounds memory, and keeping
# it fixed keeps the (sequential) reduction order deterministic
_CHUNK = 16384


def estimated_loss(z, a, b, variance_norm):
    """No-reference loss (z - (a*z + b))**2 + 2*a*variance_norm.

    Works elementwise on scalars or arrays. For affine maps whose
    parameters do not depend on z itself, its expectation over the noise
    equals the true squared error plus variance_norm.
    """
    residual = z - (a * z + b)
    return residual * residual + 2.0 * a * variance_norm


def estimated_loss_grad(z, a, b, variance_norm):
    """Partials of estimated_loss w.r.t. (a, b); elementwise like the loss."""
    residual = a * z + b - z
    return 2.0 * residual * z + 2.0 * variance_norm, 2.0 * residual


@dataclass(frozen=True)
class AffineParams:
    """Slope/intercept pair applied to a single noisy pixel."""

    a: float
    b: float


def apply_affine(z: float, params: AffineParams) -> float:
    """Reconstruct one pixel: a*z + b clamped into [0, 1].

    Clamping happens only at reconstruction time; the training objectives
    always use the raw affine value.
    """
    return float(min(1.0, max(0.0, params.a * z + params.b)))


def _check_weights_k(weights: MlpWeights, k: int) -> int:
    k = validate_k(k)
    if weights.input_width != context_width(k):
        raise ConfigError(
            f"network input width {weights.input_width} does not match k={k} "
            f"(needs {context_width(k)})"
        )
    return k


def _pixel_grid(height: int, width: int):
    rows, cols = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    return rows.ravel(), cols.ravel()


def affine_map(weights: MlpWeights, noisy: GrayImage, k: int) -> np.ndarray:
    """Per-pixel affine parameters as an (height, width, 2) array.

    [..., 0] is the slope, [..., 1] the intercept. Chunked sweep in fixed
    row-major order, so results are deterministic and memory stays bounded
    for large images.
    """
    k = _check_weights_k(weights, k)
    padded = pad_for_context(noisy.pixels, k)
    rows, cols = _pixel_grid(noisy.height, noisy.width)
    out = np.empty((rows.size, 2))
    for start in range(0, rows.size, _CHUNK):
        sl = slice(start, start + _CHUNK)
        contexts = gather_contexts(padded, rows[sl], cols[sl], k)
        out[sl] = forward(weights, contexts)[0]
    return out.reshape(noisy.height, noisy.width, 2)


def denoise_image(weights: MlpWeights, noisy: GrayImage, k: int) -> GrayImage:
    """Apply the learned per-pixel affine maps to the noisy image.

    The reconstruction is clamped into [0, 1] and tagged clean. Because
    each pixel's (a, b) depend only on its hole-context, perturbing one
    pixel changes the output there only through the affine application.
    """
    params = affine_map(weights, noisy, k)
    recon = params[..., 0] * noisy.pixels + params[..., 1]
    return GrayImage(np.clip(recon, 0.0, 1.0), KIND_CLEAN)


def adaptive_objective(weights: MlpWeights, noisy: GrayImage, spec: NoiseSpec, k: int) -> float:
    """Mean estimated loss over every pixel of the noisy image.

    This is the quantity minimized when training on the noisy image alone;
    it is invariant to the pixel visiting order.
    """
    k = _check_weights_k(weights, k)
    padded = pad_for_context(noisy.pixels, k)
    rows, cols = _pixel_grid(noisy.height, noisy.width)
    z = noisy.pixels.ravel()
    total = 0.0
    for start in range(0, rows.size, _CHUNK):
        sl = slice(start, start + _CHUNK)
        contexts = gather_contexts(padded, rows[sl], cols[sl], k)
        ab = forward(weights, contexts)[0]
        total += float(np.sum(estimated_loss(z[sl], ab[:, 0], ab[:, 1], spec.variance_norm)))
    return total / rows.size


def adaptive_batch_loss_and_grad(
    weights: MlpWeights, z: np.ndarray, contexts: np.ndarray, spec: NoiseSpec
) -> tuple[float, Gradients]:
    """Mean estimated loss of a pixel batch and its parameter gradients.

    z: (batch,) noisy center values in the original scale; contexts:
    (batch, k*k - 1) matching the network input width.
    """
    ab, cache = forward(weights, contexts)
    a, b = ab[:, 0], ab[:, 1]
    losses = estimated_loss(z, a, b, spec.variance_norm)
    ga, gb = estimated_loss_grad(z, a, b, spec.variance_norm)
    grads = backward(weights, cache, np.stack([ga, gb], axis=1))
    return float(losses.mean()), grads


def supervised_objective(weights: MlpWeights, x: np.ndarray, z: np.ndarray, contexts: np.ndarray) -> float:
    """Mean squared error (x - (a*z + b))**2 over a labelled batch.

    x are clean center pixels, z the matching noisy centers, contexts the
    hole-contexts feeding the network. No clamping inside the loss.
    """
    loss, _ = _supervised_core(weights, x, z, contexts, want_grad=False)
    return loss


def supervised_loss_and_grad(
    weights: MlpWeights, x: np.ndarray, z: np.ndarray, contexts: np.ndarray
) -> tuple[float, Gradients]:
    loss, grads = _supervised_core(weights, x, z, contexts, want_grad=True)
    return loss, grads


def _supervised_core(weights, x, z, contexts, want_grad):
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if x.shape != z.shape or x.ndim != 1 or x.shape[0] != np.shape(contexts)[0]:
        raise ShapeError(
            f"batch mismatch: x {x.shape}, z {z.shape}, contexts {np.shape(contexts)}"
        )
    ab, cache = forward(weights, contexts)
    residual = ab[:, 0] * z + ab[:, 1] - x
    loss = float(np.mean(residual * residual))
    if not want_grad:
        return loss, None
    grads = backward(weights, cache, np.stack([2.0 * residual * z, 2.0 * residual], axis=1))
    return loss, grads


@dataclass(frozen=True)
class LemmaCheck:
    """Monte-Carlo estimate of the mean estimated loss vs its closed form."""

    empirical_mean: float
    closed_form: float
    std_error: float
    n_samples: int

    @property
    def deviation_sigmas(self) -> float:
        diff = abs(self.empirical_mean - self.closed_form)
        scale = max(abs(self.closed_form), abs(self.empirical_mean), 1e-300)
        # zero sampling variance (residual identically 0, e.g. a=1, b=0)
        # makes the estimator deterministic; agreement up to accumulated
        # rounding then counts as exact instead of dividing by ~0
        if self.std_error <= 1e-15 * scale:
            return 0.0 if diff <= 1e-12 * scale else float("inf")
        return diff / self.std_error


def lemma_closed_form(x: float, a: float, b: float, spec: NoiseSpec) -> float:
    """Exact expectation of the estimated loss for fixed (x, a, b).

    E[(Z - (aZ + b))**2 + 2a sigma^2] with Z = x + N equals
    ((1 - a)x - b)**2 + (1 + a^2) sigma^2, i.e. true MSE + sigma^2.
    """
    v = spec.variance_norm
    return ((1.0 - a) * x - b) ** 2 + (1.0 + a * a) * v


def verify_lemma_monte_carlo(
    x: float, a: float, b: float, spec: NoiseSpec, n_samples: int, seed: int
) -> LemmaCheck:
    """Simulate Z = x + N and compare mean estimated loss with the closed form.

    n_samples >= 1000 is needed for a meaningful standard error; smaller
    values are accepted but underpowered.
    """
    if n_samples < 2:
        raise ConfigError(f"need at least 2 samples, got {n_samples}")
    rng = np.random.default_rng(seed)
    total = 0.0
    total_sq = 0.0
    remaining = n_samples
    while remaining > 0:
        block = min(remaining, 1 << 18)
        z = x + rng.normal(0.0, spec.sigma_norm, size=block)
        losses = estimated_loss(z, a, b, spec.variance_norm)
        total += float(losses.sum())
        total_sq += float(np.square(losses).sum())
        remaining -= block
    mean = total / n_samples
    var = max(0.0, (total_sq / n_samples - mean * mean) * n_samples / (n_samples - 1))
    return LemmaCheck(mean, lemma_closed_form(x, a, b, spec), np.sqrt(var / n_samples), n_samples)


def write_affine_csv(params: np.ndarray, path) -> None:
    """Dump an affine_map result as CSV with header row,col,a,b."""
    height, width = params.shape[:2]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "col", "a", "b"])
        for r in range(height):
            for c in range(width):
                writer.writerow([r, c, repr(float(params[r, c, 0])), repr(float(params[r, c, 1]))])
