"""Harmonization pipeline: predictors, voicing, generation loop."""
from .factory import create_predictor
from .fake_clients import FakeChordPredictor
from .interfaces import ChordPredictor
from .latency import measure_latency
from .predictors import LstmChordPredictor
from .runner import HarmonizerRunner, generate
from .voicing import voice_chord

__all__ = [
    "ChordPredictor",
    "FakeChordPredictor",
    "HarmonizerRunner",
    "LstmChordPredictor",
    "create_predictor",
    "generate",
    "measure_latency",
    "voice_chord",
]
