"""LSTM-encoder / GRU-decoder captioner trained with SGD."""

from .checkpoint import load_checkpoint, save_checkpoint
from .model import (
    DEFAULT_MAX_LEN,
    EncoderState,
    ForwardCache,
    backward,
    batch_loss_and_grads,
    encode,
    forward_loss,
    greedy_decode,
    greedy_decode_ids,
    gru_step,
    lstm_step,
    sgd_step,
    sigmoid,
    softmax,
)
from .params import GruParams, LstmParams, Seq2SeqParams, init_params
from .train import EpochLog, TrainConfig, sgd_train, validation_meteor

__all__ = [
    "DEFAULT_MAX_LEN",
    "EncoderState",
    "EpochLog",
    "ForwardCache",
    "GruParams",
    "LstmParams",
    "Seq2SeqParams",
    "TrainConfig",
    "backward",
    "batch_loss_and_grads",
    "encode",
    "forward_loss",
    "greedy_decode",
    "greedy_decode_ids",
    "gru_step",
    "init_params",
    "load_checkpoint",
    "lstm_step",
    "save_checkpoint",
    "sgd_step",
    "sgd_train",
    "sigmoid",
    "softmax",
    "validation_meteor",
]
