"""Predictor backed by a trained LSTM checkpoint."""
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from ..core.errors import ChromaChordsError, ModelLoadError
from ..model.checkpoint import load_checkpoint
from ..model.lstm import LstmModel, predict_next
from .interfaces import ChordPredictor


class LstmChordPredictor(ChordPredictor):
    """Runs the stacked LSTM at inference (no dropout)."""

    def __init__(self, model: LstmModel):
        self.model = model
        self.seq_len = model.config.seq_len

    @classmethod
    def from_checkpoint(cls, path: Union[str, Path]) -> "LstmChordPredictor":
        try:
            return cls(load_checkpoint(path))
        except (ChromaChordsError, OSError) as e:
            raise ModelLoadError(f"Could not load chord model from {path}: {e}") from e

    def predict_next(self, melody_window: Sequence[int], chord_window: Sequence[np.ndarray]) -> np.ndarray:
        return predict_next(self.model, melody_window, chord_window)

    def describe(self) -> str:
        cfg = self.model.config
        return (f"LstmChordPredictor(layers={cfg.num_layers}, hidden={cfg.hidden_dim}, "
                f"seq_len={cfg.seq_len}, epochs={self.model.trained_epochs})")
