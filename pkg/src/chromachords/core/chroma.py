"""Pitch-class arithmetic, chroma histograms and the note-overlap metric."""
from typing import Iterable, Sequence

import numpy as np

from .errors import NegativeWeight, InvalidParameter
from .models import N_PITCH_CLASSES, Note


def pitch_class(midi_pitch: int) -> int:
    """MIDI note number -> pitch class (C = 0)."""
    if not 0 <= midi_pitch <= 127:
        raise InvalidParameter(f"MIDI pitch must be 0-127, got {midi_pitch}")
    return midi_pitch % N_PITCH_CLASSES


def empty_histogram() -> np.ndarray:
    return np.zeros(N_PITCH_CLASSES, dtype=np.float64)


def l1_normalize(values: np.ndarray) -> np.ndarray:
    """Scale to unit sum; an all-zero vector stays all-zero."""
    values = np.asarray(values, dtype=np.float64)
    total = values.sum(axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(total > 0, values / np.where(total > 0, total, 1.0), 0.0)
    return out


def histogram_from_weighted_notes(pairs: Iterable[tuple[int, float]]) -> np.ndarray:
    """
    Accumulate (pitch class, weight) pairs into an L1-normalized histogram.

    The normalizer is the running sum of weights in input order, so two
    inputs that differ only by a relabeling of pitch classes normalize
    identically.
    """
    hist = empty_histogram()
    total = 0.0
    for pc, weight in pairs:
        if weight < 0:
            raise NegativeWeight(f"weight for pitch class {pc} is negative: {weight}")
        hist[pc % N_PITCH_CLASSES] += weight
        total += weight
    if total <= 0:
        return empty_histogram()
    return hist / total


def histogram_from_arrays(pcs: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Vectorized histogram_from_weighted_notes for numpy inputs."""
    weights = np.asarray(weights, dtype=np.float64)
    if weights.size and weights.min() < 0:
        raise NegativeWeight("histogram weights must be non-negative")
    hist = np.bincount(np.asarray(pcs, dtype=np.int64) % N_PITCH_CLASSES,
                       weights=weights, minlength=N_PITCH_CLASSES)
    total = weights.sum()
    if total <= 0:
        return empty_histogram()
    return hist / total


def transpose_histogram(h: np.ndarray, semitones: int) -> np.ndarray:
    """out[(i + semitones) mod 12] = h[i]."""
    return np.roll(np.asarray(h, dtype=np.float64), semitones % N_PITCH_CLASSES, axis=-1)


def align_to_c(h: np.ndarray, tonic_pc: int) -> np.ndarray:
    """Rotate so that the tonic's mass lands on index 0."""
    if not 0 <= tonic_pc <= 11:
        raise InvalidParameter(f"tonic_pc must be 0-11, got {tonic_pc}")
    return transpose_histogram(h, -tonic_pc % N_PITCH_CLASSES)


def overlap_proportion(notes: Sequence[Note]) -> float:
    """
    Share of sounding time during which two or more notes overlap.

    Sweep line over half-open [onset, end) intervals: T_multi / T_any, 0 for
    an empty track.
    """
    if not notes:
        return 0.0
    onsets = np.fromiter((n.onset for n in notes), dtype=np.int64, count=len(notes))
    ends = np.fromiter((n.end for n in notes), dtype=np.int64, count=len(notes))
    return _overlap_from_intervals(onsets, ends)


def _overlap_from_intervals(onsets: np.ndarray, ends: np.ndarray) -> float:
    times = np.concatenate([onsets, ends])
    deltas = np.concatenate([np.ones_like(onsets), -np.ones_like(ends)])
    # ends sort before starts at the same tick
    order = np.lexsort((deltas, times))
    times, deltas = times[order], deltas[order]
    active = np.cumsum(deltas)[:-1]
    spans = np.diff(times)
    t_any = spans[active >= 1].sum()
    if t_any == 0:
        return 0.0
    t_multi = spans[active >= 2].sum()
    return float(t_multi) / float(t_any)


def song_histogram(song) -> np.ndarray:
    """Duration-weighted histogram of every non-drum note in a song."""
    pcs, weights = [], []
    for track in song.tracks:
        if track.is_drum:
            continue
        for note in track.notes:
            pcs.append(note.pitch)
            weights.append(note.duration)
    if not pcs:
        return empty_histogram()
    return histogram_from_arrays(np.array(pcs), np.array(weights))
