"""Sliding-window construction and the mini-batch training loop."""
from typing import Callable, Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..core.errors import DatasetTooSmall
from ..core.models import ModelConfig
from ..dataset.storage import ChordDataset, SongBlock
from .lstm import LstmModel, backward, forward, init_model, loss_msle, quantize_f32
from .optim import AdamState, adam_step

EpochCallback = Callable[[int, float], None]


def song_windows(song: SongBlock, seq_len: int) -> tuple[np.ndarray, np.ndarray]:
    """
    One (seq_len, 13) window per example of a song, with that example's chord
    as target.

    Timestep t of the window for note n holds melody note n-(seq_len-1)+t and
    chord n-seq_len+t; positions before the song start are zero.
    """
    n = len(song)
    if n == 0:
        return np.zeros((0, seq_len, 13)), np.zeros((0, 12))
    melody = np.concatenate([np.zeros(seq_len - 1), song.melody_pcs / 11.0])
    chords = np.concatenate([np.zeros((seq_len, 12)), song.chords])
    mel_win = sliding_window_view(melody, seq_len)[:n]
    chord_win = sliding_window_view(chords, seq_len, axis=0)[:n].transpose(0, 2, 1)
    X = np.concatenate([mel_win[:, :, None], chord_win], axis=2)
    return X, song.chords.astype(np.float64)


def build_windows(dataset: ChordDataset, seq_len: int) -> tuple[np.ndarray, np.ndarray]:
    """Windows of every song, in song order; none cross a song boundary."""
    if not any(len(song) > seq_len for song in dataset.songs):
        raise DatasetTooSmall(f"no song has more than {seq_len} examples")
    parts = [song_windows(song, seq_len) for song in dataset.songs if len(song)]
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def train(
    dataset: ChordDataset,
    config: ModelConfig,
    epochs: int,
    model: Optional[LstmModel] = None,
    on_epoch: Optional[EpochCallback] = None,
) -> tuple[LstmModel, list[float]]:
    """
    Train for `epochs` epochs and return the model with its loss history.

    Passing a previously trained `model` resumes it, optimizer state
    included. Shuffling and dropout draw from a generator seeded by
    (config.seed, epoch number), so runs are reproducible.
    """
    X, Y = build_windows(dataset, config.seq_len)
    if model is None:
        model = init_model(config)
    if epochs <= 0:
        return model, []

    state = model.optimizer or AdamState.zeros_like(model.params)
    history = []
    for _ in range(epochs):
        epoch = model.trained_epochs + 1
        rng = np.random.default_rng([config.seed, epoch])
        order = rng.permutation(len(X))
        total = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = order[start:start + config.batch_size]
            pred, cache = forward(
                model, X[batch], training=True, seed=int(rng.integers(2**32))
            )
            total += loss_msle(pred, Y[batch]) * len(batch)
            adam_step(model.params, backward(model, cache, Y[batch]), state, config.learning_rate)
        mean_loss = total / len(X)
        history.append(mean_loss)
        model.trained_epochs = epoch
        if on_epoch is not None:
            on_epoch(epoch, mean_loss)

    model.params = quantize_f32(model.params)
    state.m = quantize_f32(state.m)
    state.v = quantize_f32(state.v)
    model.optimizer = state
    return model, history
