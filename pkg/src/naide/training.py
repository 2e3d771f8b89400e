"""Epoch-driven training for the affine denoiser.

Three entry points share one mini-batch engine:

* train_supervised       -- regress clean centers from clean/noisy pairs
* adaptive_train_from_scratch -- minimize the no-reference estimated loss
                            on a single noisy image, random init
* fine_tune              -- continue from trained weights on a new noisy
                            image, again with the estimated loss only

Adaptive runs support a variance-based stopping rule: once the mean
estimated loss drops below the (normalized) noise variance, the implied
true-error estimate has hit zero and further epochs mostly fit noise, so
training stops at the end of that epoch. Independently, the weights with
the lowest full-image objective seen at any epoch boundary (including the
starting weights) are tracked as `best_weights`.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field

import numpy as np

from .context import context_width, gather_contexts, pad_for_context, validate_k
from .denoiser import (
    adaptive_batch_loss_and_grad,
    adaptive_objective,
    supervised_loss_and_grad,
    supervised_objective,
)
from .errors import ConfigError, DataError, TrainingError
from .image import KIND_CLEAN, GrayImage
from .mlp import AdamState, MlpWeights, adam_step, init_weights
from .noise import NoiseSpec, add_gaussian_noise, derived_rng

# spawn_key stream tags; distinct constants keep noise draws, dataset
# shuffling and epoch shuffling statistically independent per master seed
_STREAM_NOISE = 1
_STREAM_DATASET = 2
_STREAM_EPOCH = 3
_STREAM_INIT = 4


def learning_rate(lr0: float, halve_every: int, epoch: int) -> float:
    """Step-decay schedule: lr0 * 2**-(epoch // halve_every), epoch 0-based."""
    if lr0 <= 0:
        raise ConfigError(f"base learning rate must be positive, got {lr0}")
    if halve_every < 1:
        raise ConfigError(f"halving interval must be >= 1, got {halve_every}")
    if epoch < 0:
        raise ConfigError(f"epoch must be >= 0, got {epoch}")
    return lr0 * 2.0 ** -(epoch // halve_every)


@dataclass(frozen=True)
class SupervisedSample:
    """One labelled pixel: clean/noisy centers plus the hole-context."""

    x: float
    z: float
    context: np.ndarray


class SupervisedDataset:
    """Labelled pixel population drawn from noised clean images.

    Contexts are not materialized up front; batches gather them on demand
    from the per-image padded noisy arrays, so memory stays linear in the
    image count rather than in pixels * context width.
    """

    def __init__(self, x, z, image_index, rows, cols, padded, k: int):
        self.x = np.ascontiguousarray(x, dtype=np.float64)
        self.z = np.ascontiguousarray(z, dtype=np.float64)
        self.image_index = np.ascontiguousarray(image_index, dtype=np.intp)
        self.rows = np.ascontiguousarray(rows, dtype=np.intp)
        self.cols = np.ascontiguousarray(cols, dtype=np.intp)
        self.padded = list(padded)
        self.k = validate_k(k)
        n = self.x.shape[0]
        if not (self.z.shape[0] == self.image_index.shape[0] == self.rows.shape[0] == self.cols.shape[0] == n):
            raise DataError("dataset columns have mismatched lengths")
        if n == 0:
            raise DataError("dataset is empty")

    def __len__(self) -> int:
        return self.x.shape[0]

    def batch(self, idx: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Gather (x, z, contexts) for the given sample indices."""
        idx = np.asarray(idx, dtype=np.intp)
        contexts = np.empty((idx.size, context_width(self.k)))
        img = self.image_index[idx]
        for i in np.unique(img):
            mask = img == i
            sel = idx[mask]
            # boolean indexing yields a copy, so gather first, then assign
            contexts[mask] = gather_contexts(self.padded[i], self.rows[sel], self.cols[sel], self.k)
        return self.x[idx], self.z[idx], contexts

    def __iter__(self):
        """Stream SupervisedSample records in stored (shuffled) order."""
        chunk = 4096
        for start in range(0, len(self), chunk):
            idx = np.arange(start, min(start + chunk, len(self)))
            x, z, contexts = self.batch(idx)
            for j in range(idx.size):
                yield SupervisedSample(float(x[j]), float(z[j]), contexts[j].copy())


def make_supervised_dataset(
    clean_images: list[GrayImage], spec: NoiseSpec, k: int, seed: int
) -> SupervisedDataset:
    """Noise each clean image with its own derived stream and pool all pixels.

    The pooled samples are stored in an order shuffled once with the given
    seed. Deterministic in (images, spec, k, seed); image order matters
    because per-image noise seeds are derived from the position.
    """
    k = validate_k(k)
    if not clean_images:
        raise ConfigError("need at least one clean image")
    xs, zs, img_idx, rows, cols, padded = [], [], [], [], [], []
    for i, clean in enumerate(clean_images):
        if clean.kind != KIND_CLEAN:
            raise DataError(f"image {i} is not clean; supervised data needs clean references")
        noisy = add_gaussian_noise(clean, spec, derived_rng(seed, _STREAM_NOISE, i))
        r, c = np.meshgrid(np.arange(clean.height), np.arange(clean.width), indexing="ij")
        xs.append(clean.pixels.ravel())
        zs.append(noisy.pixels.ravel())
        img_idx.append(np.full(clean.pixels.size, i, dtype=np.intp))
        rows.append(r.ravel())
        cols.append(c.ravel())
        padded.append(pad_for_context(noisy.pixels, k))
    order = derived_rng(seed, _STREAM_DATASET).permutation(sum(x.size for x in xs))
    return SupervisedDataset(
        np.concatenate(xs)[order],
        np.concatenate(zs)[order],
        np.concatenate(img_idx)[order],
        np.concatenate(rows)[order],
        np.concatenate(cols)[order],
        padded,
        k,
    )


@dataclass(frozen=True)
class EpochStat:
    """Objective and learning rate after one epoch (0-based index)."""

    epoch: int
    objective: float
    lr: float
    seconds: float


@dataclass
class TrainReport:
    """Per-epoch trace plus the stopping outcome of one training run.

    objective means the training criterion evaluated after the epoch: the
    mean squared error over the dataset for supervised runs, the mean
    estimated loss over the image for adaptive runs. best_weights is the
    snapshot with the smallest objective among the initial weights and
    every epoch end; for supervised runs it is left as None.
    """

    epochs: list[EpochStat] = field(default_factory=list)
    stop_reason: str = "epoch budget"
    initial_objective: float = float("nan")
    best_epoch: int = -1
    best_objective: float = float("inf")
    best_weights: "MlpWeights | None" = None

    @property
    def final_objective(self) -> float:
        return self.epochs[-1].objective if self.epochs else self.initial_objective

    def to_csv(self, path) -> None:
        """Write the epoch trace as CSV: epoch,objective,lr,seconds."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "objective", "lr", "seconds"])
            for stat in self.epochs:
                writer.writerow(
                    [stat.epoch, repr(float(stat.objective)), repr(float(stat.lr)), f"{stat.seconds:.3f}"]
                )


def _epoch_permutation(seed: int, epoch: int, n: int) -> np.ndarray:
    return derived_rng(seed, _STREAM_EPOCH, epoch).permutation(n)


def _run_epochs(
    weights: MlpWeights,
    n_samples: int,
    batch_size: int,
    epochs: int,
    lr0: float,
    halve_every: int,
    seed: int,
    batch_loss_and_grad,
    epoch_objective,
    stop_threshold: "float | None",
    track_best: bool,
) -> tuple[MlpWeights, TrainReport]:
    """Shared mini-batch engine.

    batch_loss_and_grad(weights, idx) does one step's work;
    epoch_objective(weights) evaluates the full training criterion at an
    epoch boundary. If stop_threshold is set, the run ends at the first
    epoch whose objective falls below it. Shuffling is derived from
    (seed, epoch) so runs are bitwise reproducible.
    """
    if batch_size < 1:
        raise ConfigError(f"batch size must be >= 1, got {batch_size}")
    if epochs < 1:
        raise ConfigError(f"need at least one epoch, got {epochs}")

    state = AdamState.new(weights)
    report = TrainReport()
    report.initial_objective = epoch_objective(weights)
    if track_best:
        report.best_epoch = -1
        report.best_objective = report.initial_objective
        report.best_weights = weights.copy()

    for epoch in range(epochs):
        started = time.perf_counter()
        lr = learning_rate(lr0, halve_every, epoch)
        order = _epoch_permutation(seed, epoch, n_samples)
        for start in range(0, n_samples, batch_size):
            idx = order[start : start + batch_size]
            try:
                _, grads = batch_loss_and_grad(weights, idx)
                adam_step(weights, grads, state, lr)
            except TrainingError as exc:
                raise TrainingError(f"epoch {epoch}, batch at sample {start}: {exc}") from exc
        objective = epoch_objective(weights)
        if not np.isfinite(objective):
            raise TrainingError(f"objective became non-finite after epoch {epoch}")
        report.epochs.append(EpochStat(epoch, objective, lr, time.perf_counter() - started))
        if track_best and objective < report.best_objective:
            report.best_epoch = epoch
            report.best_objective = objective
            report.best_weights = weights.copy()
        if stop_threshold is not None and objective < stop_threshold:
            report.stop_reason = "heuristic"
            break
    return weights, report


def train_supervised(
    dataset: SupervisedDataset, config, seed_offset: int = 0
) -> tuple[MlpWeights, TrainReport]:
    """Train from random init on labelled pixels; returns final weights.

    config is a TrainConfig; seed_offset separates the init/shuffle
    streams of repeated runs under one master seed.
    """
    if dataset.k != config.k:
        raise ConfigError(f"dataset was built with k={dataset.k}, config has k={config.k}")
    init_seed = derived_rng(config.seed, _STREAM_INIT, seed_offset).integers(2**63)
    weights = init_weights(config.dims, config.activation, init_seed)

    def batch_step(w, idx):
        x, z, contexts = dataset.batch(idx)
        return supervised_loss_and_grad(w, x, z, contexts)

    def objective(w):
        total = 0.0
        for start in range(0, len(dataset), 65536):
            idx = np.arange(start, min(start + 65536, len(dataset)))
            x, z, contexts = dataset.batch(idx)
            total += supervised_objective(w, x, z, contexts) * idx.size
        return total / len(dataset)

    return _run_epochs(
        weights,
        len(dataset),
        config.batch_size,
        config.epochs,
        config.lr0_supervised,
        config.lr_halve_every_supervised,
        config.seed + seed_offset,
        batch_step,
        objective,
        stop_threshold=None,
        track_best=False,
    )


def _adaptive_setup(noisy: GrayImage, k: int):
    padded = pad_for_context(noisy.pixels, k)
    r, c = np.meshgrid(np.arange(noisy.height), np.arange(noisy.width), indexing="ij")
    return padded, r.ravel(), c.ravel(), noisy.pixels.ravel()


def _adaptive_batch_fn(padded, rows, cols, z, k: int, spec: NoiseSpec):
    def batch_step(w, idx):
        contexts = gather_contexts(padded, rows[idx], cols[idx], k)
        return adaptive_batch_loss_and_grad(w, z[idx], contexts, spec)

    return batch_step


def adaptive_train_from_scratch(
    noisy: GrayImage, spec: NoiseSpec, config
) -> tuple[MlpWeights, TrainReport]:
    """Train from random init on one noisy image via the estimated loss.

    No clean data is involved anywhere. Uses the supervised learning-rate
    schedule (the estimated-loss landscape matches the supervised one up
    to a constant in expectation, so the same schedule applies). The
    variance stopping rule is active when config.stop_rule == "heuristic".
    """
    init_seed = derived_rng(config.seed, _STREAM_INIT, 0).integers(2**63)
    weights = init_weights(config.dims, config.activation, init_seed)
    padded, rows, cols, z = _adaptive_setup(noisy, config.k)
    stop = spec.variance_norm if config.stop_rule == "heuristic" else None
    return _run_epochs(
        weights,
        z.size,
        config.batch_size,
        config.epochs,
        config.lr0_supervised,
        config.lr_halve_every_supervised,
        config.seed,
        _adaptive_batch_fn(padded, rows, cols, z, config.k, spec),
        lambda w: adaptive_objective(w, noisy, spec, config.k),
        stop_threshold=stop,
        track_best=True,
    )


def fine_tune(
    weights: MlpWeights, noisy: GrayImage, spec: NoiseSpec, config
) -> tuple[MlpWeights, TrainReport]:
    """Adapt trained weights to one noisy image via the estimated loss.

    The input weights are not mutated; optimization starts from a copy
    with a fresh optimizer state and the (slower) fine-tuning learning
    rates. Stops early once the mean estimated loss falls below the noise
    variance when config.stop_rule == "heuristic"; the returned weights
    are the ones at the stopping epoch, while report.best_weights tracks
    the lowest-objective snapshot including the starting point.
    """
    if weights.input_width != context_width(config.k):
        raise ConfigError(
            f"weights expect input width {weights.input_width}, config k={config.k} "
            f"gives {context_width(config.k)}"
        )
    work = weights.copy()
    padded, rows, cols, z = _adaptive_setup(noisy, config.k)
    stop = spec.variance_norm if config.stop_rule == "heuristic" else None
    return _run_epochs(
        work,
        z.size,
        config.batch_size,
        config.epochs,
        config.lr0_finetune,
        config.lr_halve_every_finetune,
        config.seed,
        _adaptive_batch_fn(padded, rows, cols, z, config.k, spec),
        lambda w: adaptive_objective(w, noisy, spec, config.k),
        stop_threshold=stop,
        track_best=True,
    )
