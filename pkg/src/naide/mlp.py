"""Dense multilayer perceptron with hand-written forward/backward passes.

The network maps a context vector to the two parameters of a per-pixel
affine map: output column 0 is the slope, column 1 the intercept. Hidden
layers are affine + ReLU; the output layer applies one of three
activations to both outputs:

* linear:   f(x) = x, unconstrained
* positive: f(x) = log(1 + e^x), keeps slope and intercept > 0
* sigmoid:  f(x) = 1 / (1 + e^-x), keeps them in (0, 1)

Everything runs in float64. Gradients are for the mean loss over the
mini-batch, so learning rates are batch-size-invariant to first order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError, TrainingError

ACTIVATIONS = ("linear", "positive", "sigmoid")


def softplus(x):
    """log(1 + e^x), overflow-safe for any finite x; always > 0."""
    return np.logaddexp(0.0, x)


def sigmoid(x):
    """1 / (1 + e^-x), evaluated per sign so neither branch overflows.

    Stays strictly positive down to the float64 underflow limit (~-745);
    also serves as softplus'(x).
    """
    x = np.asarray(x, dtype=np.float64)
    pos = 1.0 / (1.0 + np.exp(-np.maximum(x, 0.0)))
    ex = np.exp(np.minimum(x, 0.0))
    return np.where(x >= 0.0, pos, ex / (1.0 + ex))


def _validate_dims(dims) -> list[int]:
    dims = [int(d) for d in dims]
    if len(dims) < 2:
        raise ConfigError(f"need at least input and output layer, got dims={dims}")
    if any(d < 1 for d in dims):
        raise ConfigError(f"layer widths must be positive, got dims={dims}")
    if dims[-1] != 2:
        raise ConfigError(f"output layer must have width 2 (slope, intercept), got {dims[-1]}")
    return dims


@dataclass
class MlpWeights:
    """Layer dims plus one (out, in) matrix and (out,) bias per layer."""

    dims: list[int]
    matrices: list[np.ndarray]
    biases: list[np.ndarray]
    output_activation: str = "positive"

    def __post_init__(self):
        self.dims = _validate_dims(self.dims)
        if self.output_activation not in ACTIVATIONS:
            raise ConfigError(
                f"output_activation must be one of {ACTIVATIONS}, got {self.output_activation!r}"
            )
        n_layers = len(self.dims) - 1
        if len(self.matrices) != n_layers or len(self.biases) != n_layers:
            raise ShapeError(f"expected {n_layers} weight layers, got {len(self.matrices)}")
        for l, (mat, bias) in enumerate(zip(self.matrices, self.biases)):
            want = (self.dims[l + 1], self.dims[l])
            if mat.shape != want:
                raise ShapeError(f"layer {l} matrix shape {mat.shape}, expected {want}")
            if bias.shape != (self.dims[l + 1],):
                raise ShapeError(f"layer {l} bias shape {bias.shape}, expected ({self.dims[l + 1]},)")
            if not (np.isfinite(mat).all() and np.isfinite(bias).all()):
                raise ShapeError(f"layer {l} has non-finite parameters")

    @property
    def n_layers(self) -> int:
        return len(self.dims) - 1

    @property
    def input_width(self) -> int:
        return self.dims[0]

    def copy(self) -> "MlpWeights":
        return MlpWeights(
            list(self.dims),
            [m.copy() for m in self.matrices],
            [b.copy() for b in self.biases],
            self.output_activation,
        )


@dataclass
class Gradients:
    """Parameter gradients, mirroring MlpWeights matrices/biases."""

    matrices: list[np.ndarray]
    biases: list[np.ndarray]

    def all_finite(self) -> bool:
        return all(np.isfinite(m).all() for m in self.matrices) and all(
            np.isfinite(b).all() for b in self.biases
        )


@dataclass
class ForwardCache:
    """Intermediates of one forward call, consumed by backward.

    layer_inputs[l] is the batch fed into layer l (layer_inputs[0] is the
    network input); pre_activations[l] is the affine output of layer l
    before its nonlinearity; outputs is the activated final layer.
    """

    layer_inputs: list[np.ndarray]
    pre_activations: list[np.ndarray]
    outputs: np.ndarray


def init_weights(dims, activation: str, seed: int) -> MlpWeights:
    """He-initialized weights: N(0, 2/fan_in) matrices, zero biases.

    Deterministic for a given seed; matrices are drawn layer by layer in
    order from a single generator.
    """
    dims = _validate_dims(dims)
    rng = np.random.default_rng(seed)
    matrices, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        std = np.sqrt(2.0 / fan_in)
        matrices.append(rng.standard_normal((fan_out, fan_in)) * std)
        biases.append(np.zeros(fan_out))
    return MlpWeights(dims, matrices, biases, activation)


def forward(weights: MlpWeights, inputs: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    """Run the batch through the network.

    inputs: (batch, dims[0]). Returns the (batch, 2) affine parameters
    (column 0 = slope, column 1 = intercept) and the cache for backward.
    Pure function of (weights, inputs).
    """
    x = np.ascontiguousarray(inputs, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ShapeError(f"inputs must be a non-empty (batch, {weights.input_width}) array, got {x.shape}")
    if x.shape[1] != weights.input_width:
        raise ShapeError(f"input width {x.shape[1]} does not match network input {weights.input_width}")

    layer_inputs = [x]
    pre_activations = []
    for l in range(weights.n_layers):
        z = layer_inputs[-1] @ weights.matrices[l].T + weights.biases[l]
        pre_activations.append(z)
        if l < weights.n_layers - 1:
            layer_inputs.append(np.maximum(z, 0.0))

    z_out = pre_activations[-1]
    if weights.output_activation == "linear":
        outputs = z_out.copy()
    elif weights.output_activation == "positive":
        outputs = softplus(z_out)
    else:
        outputs = sigmoid(z_out)
    return outputs, ForwardCache(layer_inputs, pre_activations, outputs)


def backward(weights: MlpWeights, cache: ForwardCache, grad_out: np.ndarray) -> Gradients:
    """Backpropagate per-sample output gradients into parameter gradients.

    grad_out: (batch, 2) holding d(loss_i)/d(slope_i, intercept_i) per
    sample. The returned gradients are for the *mean* loss over the batch
    (the 1/batch factor is applied here). The ReLU subgradient at exactly
    0 is taken as 0.
    """
    grad_out = np.asarray(grad_out, dtype=np.float64)
    batch = cache.layer_inputs[0].shape[0]
    if grad_out.shape != (batch, 2):
        raise ShapeError(f"grad_out shape {grad_out.shape} does not match cached batch ({batch}, 2)")
    if len(cache.pre_activations) != weights.n_layers:
        raise ShapeError("cache does not come from a forward pass of this network")

    delta = grad_out / batch
    z_out = cache.pre_activations[-1]
    if weights.output_activation == "positive":
        delta = delta * sigmoid(z_out)
    elif weights.output_activation == "sigmoid":
        delta = delta * cache.outputs * (1.0 - cache.outputs)

    grad_mats = [np.empty(0)] * weights.n_layers
    grad_biases = [np.empty(0)] * weights.n_layers
    for l in range(weights.n_layers - 1, -1, -1):
        grad_mats[l] = delta.T @ cache.layer_inputs[l]
        grad_biases[l] = delta.sum(axis=0)
        if l > 0:
            delta = (delta @ weights.matrices[l]) * (cache.pre_activations[l - 1] > 0.0)
    return Gradients(grad_mats, grad_biases)


@dataclass
class AdamState:
    """First/second-moment accumulators mirroring the parameter shapes."""

    m_matrices: list[np.ndarray]
    v_matrices: list[np.ndarray]
    m_biases: list[np.ndarray]
    v_biases: list[np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def new(cls, weights: MlpWeights, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        return cls(
            [np.zeros_like(m) for m in weights.matrices],
            [np.zeros_like(m) for m in weights.matrices],
            [np.zeros_like(b) for b in weights.biases],
            [np.zeros_like(b) for b in weights.biases],
            0,
            beta1,
            beta2,
            eps,
        )


def adam_step(
    weights: MlpWeights, grads: Gradients, state: AdamState, lr: float
) -> tuple[MlpWeights, AdamState]:
    """One bias-corrected Adam update; mutates weights and state in place.

    Zero gradients leave the parameters exactly unchanged (the timestep
    still advances).
    """
    if lr <= 0:
        raise ConfigError(f"learning rate must be positive, got {lr}")
    if not grads.all_finite():
        raise TrainingError("non-finite gradient in adam_step; aborting training")
    state.t += 1
    c1 = 1.0 - state.beta1**state.t
    c2 = 1.0 - state.beta2**state.t
    params = weights.matrices + weights.biases
    moments1 = state.m_matrices + state.m_biases
    moments2 = state.v_matrices + state.v_biases
    gradients = grads.matrices + grads.biases
    for p, m, v, g in zip(params, moments1, moments2, gradients):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * np.square(g)
        p -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return weights, state


def gradient_check(
    weights: MlpWeights,
    loss_fn,
    eps: float = 1e-5,
    max_coords_per_tensor: int = 4,
    seed: int = 0,
) -> float:
    """Compare analytic gradients with central finite differences.

    loss_fn(weights) must deterministically return (loss, Gradients). For
    a sampled subset of parameter coordinates the relative error
    |analytic - numeric| / max(1, |analytic|, |numeric|) is computed; the
    maximum over the subset is returned.
    """
    if not 1e-7 <= eps <= 1e-3:
        raise ConfigError(f"finite-difference step must be in [1e-7, 1e-3], got {eps}")
    _, grads = loss_fn(weights)
    rng = np.random.default_rng(seed)
    worst = 0.0
    tensors = list(zip(weights.matrices + weights.biases, grads.matrices + grads.biases))
    for param, grad in tensors:
        flat = param.reshape(-1)
        n_probe = min(flat.size, max_coords_per_tensor)
        coords = rng.choice(flat.size, size=n_probe, replace=False)
        for idx in coords:
            orig = flat[idx]
            flat[idx] = orig + eps
            lo_hi = loss_fn(weights)[0]
            flat[idx] = orig - eps
            lo_lo = loss_fn(weights)[0]
            flat[idx] = orig
            numeric = (lo_hi - lo_lo) / (2.0 * eps)
            analytic = grad.reshape(-1)[idx]
            rel = abs(analytic - numeric) / max(1.0, abs(analytic), abs(numeric))
            worst = max(worst, rel)
    return worst
