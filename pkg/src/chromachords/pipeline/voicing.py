"""Predicted histogram -> concrete chord pitches."""
from typing import Optional

import numpy as np

from ..core.models import VoicedChord

BASS_OCTAVE = 36  # C2
CHORD_OCTAVE = 48  # C3
DEFAULT_THRESHOLD = 0.14


def voice_chord(
    h,
    tonic_pc: int = 0,
    threshold: float = DEFAULT_THRESHOLD,
    onset: int = 0,
    duration: int = 1,
) -> Optional[VoicedChord]:
    """
    Voice a C-aligned histogram in the supplied key.

    Bins >= threshold are kept; none kept means a silent beat (None). The
    largest kept bin is the root (lowest pitch class on ties), voiced at C2-B3
    and C3-B3; other kept pitch classes go in C3-B3. Everything is then
    shifted up by `tonic_pc`.
    """
    h = np.asarray(h, dtype=np.float64)
    kept = np.flatnonzero(h >= threshold)
    if kept.size == 0:
        return None
    root = int(kept[np.argmax(h[kept])])
    pitches = {BASS_OCTAVE + root, CHORD_OCTAVE + root}
    pitches.update(CHORD_OCTAVE + int(pc) for pc in kept)
    return VoicedChord(
        pitches=tuple(sorted(p + tonic_pc for p in pitches)),
        root_pc=(root + tonic_pc) % 12,
        onset=onset,
        duration=duration,
    )
