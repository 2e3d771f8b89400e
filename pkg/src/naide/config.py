"""Training configuration shared by the supervised and adaptive phases."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields

from .errors import ConfigError
from .mlp import ACTIVATIONS

STOP_RULES = ("none", "heuristic")


@dataclass
class TrainConfig:
    """Optimizer schedule, network layout and data handling knobs.

    The learning rate for phase p decays as lr0_p * 2**-(e // halve_p)
    with e the 0-based epoch index. `hidden` lists the hidden layer
    widths; the full layer layout is [k*k - 1, *hidden, 2]. `sigma_255`
    is the assumed noise level in 8-bit units.
    """

    k: int = 17
    hidden: tuple[int, ...] = (512,) * 9
    activation: str = "positive"
    epochs: int = 50
    batch_size: int = 128
    lr0_supervised: float = 1e-4
    lr0_finetune: float = 1e-5
    lr_halve_every_supervised: int = 10
    lr_halve_every_finetune: int = 20
    sigma_255: float = 25.0
    seed: int = 0
    stop_rule: str = "heuristic"

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        if self.k < 3 or self.k % 2 == 0:
            raise ConfigError(f"k must be an odd integer >= 3, got {self.k}")
        if any(h < 1 for h in self.hidden):
            raise ConfigError(f"hidden widths must be positive, got {self.hidden}")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"activation must be one of {ACTIVATIONS}, got {self.activation!r}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.lr0_supervised <= 0 or self.lr0_finetune <= 0:
            raise ConfigError("learning rates must be positive")
        if self.lr_halve_every_supervised < 1 or self.lr_halve_every_finetune < 1:
            raise ConfigError("lr halving periods must be >= 1 epoch")
        if self.sigma_255 <= 0:
            raise ConfigError(f"sigma_255 must be positive, got {self.sigma_255}")
        if self.stop_rule not in STOP_RULES:
            raise ConfigError(f"stop_rule must be one of {STOP_RULES}, got {self.stop_rule!r}")

    @property
    def dims(self) -> list[int]:
        return [self.k**2 - 1, *self.hidden, 2]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "TrainConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config JSON must be a flat object")
        return cls.from_dict(data)
