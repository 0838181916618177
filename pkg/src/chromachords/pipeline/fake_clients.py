"""Fake predictor for testing without a trained model."""
from typing import Sequence

import numpy as np

from .interfaces import ChordPredictor

# I, IV, V, I as root-doubled triads (root 0.5, third and fifth 0.25)
CADENCE_ROOTS = (0, 5, 7, 0)


def triad_histogram(root_pc: int) -> np.ndarray:
    h = np.zeros(12)
    h[root_pc % 12] = 0.5
    h[(root_pc + 4) % 12] = 0.25
    h[(root_pc + 7) % 12] = 0.25
    return h


class FakeChordPredictor(ChordPredictor):
    """Cycles I-IV-V-I by position in the piece, ignoring the melody."""

    def __init__(self, roots: Sequence[int] = CADENCE_ROOTS):
        self.roots = tuple(roots)
        self.calls = 0

    def predict_next(self, melody_window: Sequence[int], chord_window: Sequence[np.ndarray]) -> np.ndarray:
        self.calls += 1
        return triad_histogram(self.roots[(self.calls - 1) % len(self.roots)])

    def reset(self) -> None:
        self.calls = 0
