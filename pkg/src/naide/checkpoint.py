"""Self-describing checkpoint container, format tag "naide-ckpt-v1".

Layout: the magic line, a u32 LE header length, a canonical JSON header
(dims, output activation, optional training config), then for each layer
the weight matrix in row-major order followed by the bias vector, all as
float64 LE. Writing the same weights twice produces bitwise-identical
files.
"""

from __future__ import annotations

import json
import os
import struct

import numpy as np

from .config import TrainConfig
from .errors import ParseError
from .mlp import MlpWeights

MAGIC = b"naide-ckpt-v1\n"


def save_checkpoint(path: str | os.PathLike, weights: MlpWeights, config: TrainConfig | None = None) -> None:
    header = {
        "dims": list(weights.dims),
        "activation": weights.output_activation,
        "train_config": config.to_dict() if config is not None else None,
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        for mat, bias in zip(weights.matrices, weights.biases):
            fh.write(np.ascontiguousarray(mat, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(bias, dtype="<f8").tobytes())


def load_checkpoint(path: str | os.PathLike) -> tuple[MlpWeights, TrainConfig | None]:
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(MAGIC):
        raise ParseError(f"not a naide-ckpt-v1 checkpoint (bad magic at byte 0): {path}")
    pos = len(MAGIC)
    if len(data) < pos + 4:
        raise ParseError(f"truncated checkpoint header length at byte {pos}")
    (header_len,) = struct.unpack_from("<I", data, pos)
    pos += 4
    if len(data) < pos + header_len:
        raise ParseError(
            f"truncated checkpoint header at byte {pos}: expected {header_len} bytes, got {len(data) - pos}"
        )
    try:
        header = json.loads(data[pos : pos + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"corrupt checkpoint header at byte {pos}: {exc}") from None
    pos += header_len

    dims = header.get("dims")
    activation = header.get("activation")
    if not isinstance(dims, list) or not isinstance(activation, str):
        raise ParseError("checkpoint header is missing dims/activation")
    n_params = sum(dims[l + 1] * dims[l] + dims[l + 1] for l in range(len(dims) - 1))
    expected = pos + 8 * n_params
    if len(data) != expected:
        raise ParseError(
            f"checkpoint payload at byte {pos}: expected {expected} total bytes, got {len(data)}"
        )

    matrices, biases = [], []
    for l in range(len(dims) - 1):
        out_w, in_w = dims[l + 1], dims[l]
        mat = np.frombuffer(data, dtype="<f8", count=out_w * in_w, offset=pos).reshape(out_w, in_w)
        pos += 8 * out_w * in_w
        bias = np.frombuffer(data, dtype="<f8", count=out_w, offset=pos)
        pos += 8 * out_w
        matrices.append(mat.copy())
        biases.append(bias.copy())
    weights = MlpWeights(dims, matrices, biases, activation)

    config = None
    if header.get("train_config") is not None:
        config = TrainConfig.from_dict(header["train_config"])
    return weights, config
