"""
Stacked LSTM chord regressor in numpy.

Parameters live in a flat name -> array dict so the optimizer and the
checkpoint code can walk them in one fixed order:

    layer{l}.W_x  (in_dim, 4H)   gate order: input, forget, candidate, output
    layer{l}.W_h  (H, 4H)
    layer{l}.b    (4H,)
    head.W        (H, out_dim)
    head.b        (out_dim,)
"""
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from ..core.chroma import l1_normalize
from ..core.errors import NegativeInput, NonFiniteActivation, ShapeMismatch
from ..core.models import ModelConfig
from .optim import AdamState

FORGET_BIAS = 1.0
OUTPUT_EPS = 1e-12


class LstmModel(BaseModel):
    """Configuration, parameters and training progress of one model."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    config: ModelConfig
    params: dict[str, np.ndarray]
    trained_epochs: int = 0
    optimizer: Optional[AdamState] = None

    def parameter_names(self) -> list[str]:
        return list(self.params)


def sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def quantize_f32(arrays: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    """Round every array to float32 precision, kept in float64."""
    return {name: a.astype(np.float32).astype(np.float64) for name, a in arrays.items()}


def init_model(config: ModelConfig, seed: Optional[int] = None) -> LstmModel:
    """
    Uniform +-1/sqrt(fan_in) weights, zero biases, forget-gate bias 1.0.

    Values are rounded to float32 so a checkpoint round trip is exact.
    """
    rng = np.random.default_rng(config.seed if seed is None else seed)
    H = config.hidden_dim
    params: dict[str, np.ndarray] = {}
    in_dim = config.input_dim
    for layer in range(config.num_layers):
        params[f"layer{layer}.W_x"] = rng.uniform(-1, 1, (in_dim, 4 * H)) / np.sqrt(in_dim)
        params[f"layer{layer}.W_h"] = rng.uniform(-1, 1, (H, 4 * H)) / np.sqrt(H)
        bias = np.zeros(4 * H)
        bias[H:2 * H] = FORGET_BIAS
        params[f"layer{layer}.b"] = bias
        in_dim = H
    params["head.W"] = rng.uniform(-1, 1, (H, config.output_dim)) / np.sqrt(H)
    params["head.b"] = np.zeros(config.output_dim)
    return LstmModel(config=config, params=quantize_f32(params))


def dropout_masks(config: ModelConfig, batch: int, seed: Optional[int]) -> list[np.ndarray]:
    """Inverted-dropout masks, one (batch, seq_len, H) array per layer."""
    rng = np.random.default_rng(seed)
    keep = 1.0 - config.dropout_rate
    shape = (batch, config.seq_len, config.hidden_dim)
    return [(rng.random(shape) < keep) / keep for _ in range(config.num_layers)]


def forward(
    model: LstmModel,
    x: np.ndarray,
    training: bool = False,
    seed: Optional[int] = None,
    masks: Optional[Sequence[np.ndarray]] = None,
) -> tuple[np.ndarray, dict]:
    """
    Run a batch (B, seq_len, input_dim) or a single (seq_len, input_dim) input.

    Returns sigmoid outputs for the last timestep and a cache for backward.
    Dropout is applied to each layer's output only when `training`; explicit
    `masks` override the seeded ones.
    """
    cfg = model.config
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 2
    if single:
        x = x[None]
    if x.ndim != 3 or x.shape[1:] != (cfg.seq_len, cfg.input_dim):
        raise ShapeMismatch(
            f"expected input (B, {cfg.seq_len}, {cfg.input_dim}), got {x.shape}"
        )
    B, T, H = x.shape[0], cfg.seq_len, cfg.hidden_dim
    if training and masks is None:
        masks = dropout_masks(cfg, B, seed)

    layers = []
    layer_in = x
    for layer in range(cfg.num_layers):
        W_x = model.params[f"layer{layer}.W_x"]
        W_h = model.params[f"layer{layer}.W_h"]
        xw = layer_in @ W_x + model.params[f"layer{layer}.b"]
        gates = np.empty((B, T, 4 * H))
        cells = np.empty((B, T, H))
        hs = np.empty((B, T, H))
        h = np.zeros((B, H))
        c = np.zeros((B, H))
        for t in range(T):
            z = xw[:, t] + h @ W_h
            i = sigmoid(z[:, :H])
            f = sigmoid(z[:, H:2 * H])
            g = np.tanh(z[:, 2 * H:3 * H])
            o = sigmoid(z[:, 3 * H:])
            c = f * c + i * g
            h = o * np.tanh(c)
            gates[:, t] = np.concatenate([i, f, g, o], axis=1)
            cells[:, t] = c
            hs[:, t] = h
        out = hs * masks[layer] if training else hs
        layers.append({"input": layer_in, "gates": gates, "cells": cells, "hidden": hs})
        layer_in = out

    last = layer_in[:, -1]
    pred = sigmoid(last @ model.params["head.W"] + model.params["head.b"])
    if not np.all(np.isfinite(pred)):
        raise NonFiniteActivation("non-finite value in LSTM output")

    cache = {"layers": layers, "masks": masks if training else None, "last": last, "pred": pred}
    return (pred[0] if single else pred), cache


def loss_msle(pred, target) -> float:
    """Mean over all entries of (ln(1 + pred) - ln(1 + target))^2."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if np.any(pred < 0) or np.any(target < 0):
        raise NegativeInput("MSLE needs non-negative predictions and targets")
    return float(np.mean((np.log1p(pred) - np.log1p(target)) ** 2))


def backward(model: LstmModel, cache: dict, target) -> dict[str, np.ndarray]:
    """Exact gradients of loss_msle over the batch, through time and dropout."""
    cfg = model.config
    H = cfg.hidden_dim
    pred = cache["pred"]
    target = np.asarray(target, dtype=np.float64).reshape(pred.shape)
    grads = {name: np.zeros_like(p) for name, p in model.params.items()}

    d_pred = 2.0 * (np.log1p(pred) - np.log1p(target)) / (1.0 + pred) / pred.size
    d_logits = d_pred * pred * (1.0 - pred)
    grads["head.W"] = cache["last"].T @ d_logits
    grads["head.b"] = d_logits.sum(axis=0)

    B, T = pred.shape[0], cfg.seq_len
    d_out = np.zeros((B, T, H))
    d_out[:, -1] = d_logits @ model.params["head.W"].T

    masks = cache["masks"]
    for layer in reversed(range(cfg.num_layers)):
        lc = cache["layers"][layer]
        W_h = model.params[f"layer{layer}.W_h"]
        d_hidden = d_out * masks[layer] if masks is not None else d_out
        d_z = np.empty((B, T, 4 * H))
        dh_next = np.zeros((B, H))
        dc_next = np.zeros((B, H))
        for t in reversed(range(T)):
            gate = lc["gates"][:, t]
            i, f, g, o = gate[:, :H], gate[:, H:2 * H], gate[:, 2 * H:3 * H], gate[:, 3 * H:]
            c = lc["cells"][:, t]
            c_prev = lc["cells"][:, t - 1] if t > 0 else np.zeros((B, H))
            h_prev = lc["hidden"][:, t - 1] if t > 0 else np.zeros((B, H))
            tc = np.tanh(c)

            dh = d_hidden[:, t] + dh_next
            dc = dh * o * (1.0 - tc ** 2) + dc_next
            dz = np.concatenate([
                dc * g * i * (1.0 - i),
                dc * c_prev * f * (1.0 - f),
                dc * i * (1.0 - g ** 2),
                dh * tc * o * (1.0 - o),
            ], axis=1)
            d_z[:, t] = dz
            grads[f"layer{layer}.W_h"] += h_prev.T @ dz
            dh_next = dz @ W_h.T
            dc_next = dc * f

        grads[f"layer{layer}.W_x"] = np.einsum("btd,btg->dg", lc["input"], d_z)
        grads[f"layer{layer}.b"] = d_z.sum(axis=(0, 1))
        d_out = d_z @ model.params[f"layer{layer}.W_x"].T

    return grads


def build_input(melody_pcs: Sequence[int], chords: Sequence[np.ndarray], seq_len: int = 8) -> np.ndarray:
    """
    (seq_len, 13) model input from the most recent melody pitch classes
    (current note last) and the most recent chords (previous chord last).

    Both windows are right-aligned; missing positions stay zero.
    """
    x = np.zeros((seq_len, 13))
    melody = list(melody_pcs)[-seq_len:]
    if melody:
        x[seq_len - len(melody):, 0] = np.asarray(melody, dtype=np.float64) / 11.0
    recent = list(chords)[-seq_len:]
    if recent:
        x[seq_len - len(recent):, 1:] = np.stack(recent)
    return x


def predict_next(model: LstmModel, melody_window: Sequence[int], chord_window: Sequence[np.ndarray]) -> np.ndarray:
    """L1-normalized chord histogram for the current melody note."""
    x = build_input(melody_window, chord_window, model.config.seq_len)
    raw, _ = forward(model, x, training=False)
    if raw.sum() < OUTPUT_EPS:
        return np.zeros_like(raw)
    return l1_normalize(raw)
