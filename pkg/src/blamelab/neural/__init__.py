"""Sequence encoders, training, and checkpoints."""
from .checkpoint import load_checkpoint, save_checkpoint
from .config import PRESETS, ConfigError, ModelConfig, TrainConfig, preset
from .errors import CheckpointMismatch, DivergenceError, GradCheckFailure, ShapeMismatch
from .gradcheck import check_model_loss, check_primitive, grad_check
from .model import classification_loss, classify_tokens, encode, init_params, layer_embeddings, mlm_loss, predict
from .train import finetune, mlm_prepare, pretrain_mlm
from .vocab import DEFAULT_VOCAB, MASK, PAD, UNK, TooLong, Vocabulary, encode_tokens, pad_batch

__all__ = [
    "PRESETS",
    "ConfigError",
    "ModelConfig",
    "TrainConfig",
    "preset",
    "CheckpointMismatch",
    "DivergenceError",
    "GradCheckFailure",
    "ShapeMismatch",
    "check_model_loss",
    "check_primitive",
    "grad_check",
    "classification_loss",
    "classify_tokens",
    "encode",
    "init_params",
    "layer_embeddings",
    "mlm_loss",
    "predict",
    "finetune",
    "mlm_prepare",
    "pretrain_mlm",
    "load_checkpoint",
    "save_checkpoint",
    "DEFAULT_VOCAB",
    "MASK",
    "PAD",
    "UNK",
    "TooLong",
    "Vocabulary",
    "encode_tokens",
    "pad_batch",
]
