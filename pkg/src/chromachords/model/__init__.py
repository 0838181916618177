"""Numpy stacked-LSTM chord model: forward/backward, Adam, training, checkpoints."""
from .checkpoint import decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint
from .lstm import LstmModel, backward, build_input, dropout_masks, forward, init_model, loss_msle, predict_next
from .optim import AdamState, adam_step
from .training import build_windows, train

__all__ = [
    "AdamState",
    "LstmModel",
    "adam_step",
    "backward",
    "build_input",
    "build_windows",
    "decode_checkpoint",
    "dropout_masks",
    "encode_checkpoint",
    "forward",
    "init_model",
    "load_checkpoint",
    "loss_msle",
    "predict_next",
    "save_checkpoint",
    "train",
]
