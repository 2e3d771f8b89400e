"""naide: pixel-wise affine grayscale denoising with a context network.

Each pixel is reconstructed as clamp(a * Z + b, 0, 1) where the slope and
intercept come from a small fully-connected network that sees only the
pixel's k x k neighborhood with the center removed. Because the center
never reaches the network, the mean of

    (Z - (a*Z + b))**2 + 2*a*sigma**2

over the noisy image is an unbiased estimate of true MSE + sigma**2, so
the same network can be trained supervised on clean/noisy pairs or
adapted to a single noisy image with no clean reference at all.
"""

from .checkpoint import load_checkpoint, save_checkpoint
from .config import TrainConfig
from .context import ContextVector, extract_context, gather_contexts, pad_for_context
from .denoiser import (
    AffineParams,
    adaptive_objective,
    affine_map,
    apply_affine,
    denoise_image,
    estimated_loss,
    estimated_loss_grad,
    lemma_closed_form,
    supervised_objective,
    verify_lemma_monte_carlo,
)
from .errors import (
    ConfigError,
    DataError,
    NaideError,
    ParseError,
    ShapeError,
    TrainingError,
)
from .image import (
    KIND_CLEAN,
    KIND_NOISY,
    GrayImage,
    load_image,
    load_ngf,
    load_pgm,
    save_image,
    save_ngf,
    save_pgm,
)
from .metrics import MetricReport, evaluate_suite, mse, psnr
from .mlp import (
    AdamState,
    MlpWeights,
    adam_step,
    backward,
    forward,
    gradient_check,
    init_weights,
    sigmoid,
    softplus,
)
from .noise import NoiseSpec, add_gaussian_noise, derived_rng
from .training import (
    TrainReport,
    adaptive_train_from_scratch,
    fine_tune,
    learning_rate,
    make_supervised_dataset,
    train_supervised,
)

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "AffineParams",
    "ConfigError",
    "ContextVector",
    "DataError",
    "GrayImage",
    "KIND_CLEAN",
    "KIND_NOISY",
    "MetricReport",
    "MlpWeights",
    "NaideError",
    "NoiseSpec",
    "ParseError",
    "ShapeError",
    "TrainConfig",
    "TrainReport",
    "TrainingError",
    "adam_step",
    "adaptive_objective",
    "adaptive_train_from_scratch",
    "add_gaussian_noise",
    "affine_map",
    "apply_affine",
    "backward",
    "denoise_image",
    "derived_rng",
    "estimated_loss",
    "estimated_loss_grad",
    "evaluate_suite",
    "extract_context",
    "fine_tune",
    "forward",
    "gather_contexts",
    "gradient_check",
    "init_weights",
    "learning_rate",
    "lemma_closed_form",
    "load_checkpoint",
    "load_image",
    "load_ngf",
    "load_pgm",
    "make_supervised_dataset",
    "mse",
    "pad_for_context",
    "psnr",
    "save_checkpoint",
    "save_image",
    "save_ngf",
    "save_pgm",
    "sigmoid",
    "softplus",
    "supervised_objective",
    "train_supervised",
    "verify_lemma_monte_carlo",
]
