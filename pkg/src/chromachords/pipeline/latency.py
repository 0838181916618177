"""Per-prediction latency measurement."""
import time
from typing import Union

import numpy as np

from ..core.errors import InvalidParameter
from ..core.models import LatencyReport
from ..model.lstm import LstmModel
from .interfaces import ChordPredictor
from .predictors import LstmChordPredictor

MIN_TRIALS = 30
WARMUP_CALLS = 5


def latency_inputs(n: int, seq_len: int, seed: int = 0) -> list[tuple[list[int], list[np.ndarray]]]:
    """Random full-length (melody pcs, normalized chords) contexts."""
    rng = np.random.default_rng(seed)
    inputs = []
    for _ in range(n):
        pcs = [int(pc) for pc in rng.integers(0, 12, size=seq_len)]
        chords = list(rng.dirichlet(np.ones(12), size=seq_len))
        inputs.append((pcs, chords))
    return inputs


def measure_latency(predictor: Union[ChordPredictor, LstmModel], trials: int, seed: int = 0) -> LatencyReport:
    """Wall-clock ms per predict_next call, after 5 warmup calls."""
    if trials < MIN_TRIALS:
        raise InvalidParameter(f"trials must be at least {MIN_TRIALS}, got {trials}")
    if isinstance(predictor, LstmModel):
        predictor = LstmChordPredictor(predictor)
    inputs = latency_inputs(WARMUP_CALLS + trials, predictor.seq_len, seed)
    for pcs, chords in inputs[:WARMUP_CALLS]:
        predictor.predict_next(pcs, chords)

    timings = np.empty(trials)
    for k, (pcs, chords) in enumerate(inputs[WARMUP_CALLS:]):
        start = time.perf_counter()
        predictor.predict_next(pcs, chords)
        timings[k] = (time.perf_counter() - start) * 1000.0

    return LatencyReport(
        mean_ms=float(timings.mean()),
        p95_ms=float(np.percentile(timings, 95)),
        max_ms=float(timings.max()),
        trials=trials,
    )
