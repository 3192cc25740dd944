"""Model and training configuration."""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    arch: str = "transformer"  # or "bilstm"
    layers: int = 2
    hidden: int = 128  # per direction for the BiLSTM
    heads: int = 4
    vocab: int = 0  # 0 means "use the default vocabulary size"
    max_len: int = 128
    dropout: float = 0.1
    ffn_mult: int = 4

    def __post_init__(self):
        if self.arch not in ("transformer", "bilstm"):
            raise ConfigError(f"unknown arch {self.arch!r}")
        if self.layers < 1:
            raise ConfigError("layers must be >= 1")
        if self.arch == "transformer":
            if not 1 <= self.heads <= self.hidden or self.hidden % self.heads:
                raise ConfigError(f"hidden={self.hidden} must be divisible by heads={self.heads}")
        if self.hidden < 1 or self.max_len < 1 or self.ffn_mult < 1:
            raise ConfigError("hidden, max_len and ffn_mult must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must lie in [0, 1)")
        if self.vocab == 0:
            from .vocab import DEFAULT_VOCAB

            object.__setattr__(self, "vocab", DEFAULT_VOCAB.size)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 32
    learning_rate: float = 3e-5
    epochs: int = 30
    seed: int = 0
    scheduler: str = "linear_warmup_decay"  # or "constant"
    warmup_frac: float = 0.1
    mask_rate: float = 0.15
    clip_norm: float = 1.0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be positive")
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if not 0.0 < self.mask_rate < 1.0:
            raise ConfigError("mask_rate must lie in (0, 1)")
        if self.scheduler not in ("constant", "linear_warmup_decay"):
            raise ConfigError(f"unknown scheduler {self.scheduler!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


# Size presets. Base and Large are legal but far beyond desk-scale budgets.
PRESETS = {
    "tiny": dict(layers=2, hidden=128, heads=4),
    "small": dict(layers=4, hidden=256, heads=4),
    "medium": dict(layers=8, hidden=512, heads=8),
    "base": dict(layers=12, hidden=768, heads=12),
    "large": dict(layers=16, hidden=1024, heads=16),
}


def preset(name: str, **overrides) -> ModelConfig:
    kw = dict(PRESETS[name])
    kw.update(overrides)
    return ModelConfig(**kw)
