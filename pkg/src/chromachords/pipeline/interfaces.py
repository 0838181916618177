"""Chord predictor interface for dependency injection."""
from abc import ABC, abstractmethod
from typing import Sequence

import numpy as np


class ChordPredictor(ABC):
    """Interface for next-chord prediction."""

    seq_len: int = 8

    @abstractmethod
    def predict_next(self, melody_window: Sequence[int], chord_window: Sequence[np.ndarray]) -> np.ndarray:
        """
        Return a C-aligned chord histogram (all-zero or L1-normalized) for the
        last melody pitch class in `melody_window`, given the previous chords.
        """
        pass

    def describe(self) -> str:
        return self.__class__.__name__
