"""Deterministic synthetic corpora for desk-scale training and checks."""
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from ..core.binary import atomic_write_bytes
from ..core.chroma import histogram_from_arrays
from ..core.models import KeyExample, KeyMode, KeySignature, MidiSong
from ..midi.smf import build_track, write_midi
from .builder import extract_examples
from .storage import ChordDataset, SongBlock

MAJOR_SCALE = (0, 2, 4, 5, 7, 9, 11)
MINOR_SCALE = (0, 2, 3, 5, 7, 8, 10)
# tonic, 2nd, 3rd, 4th, 5th, 6th, 7th
DEGREE_EMPHASIS = np.array([3.0, 1.0, 2.0, 1.0, 2.5, 1.0, 0.7])

TRIADS = {
    "I": (0, (0, 4, 7)),
    "ii": (2, (0, 3, 7)),
    "iii": (4, (0, 3, 7)),
    "IV": (5, (0, 4, 7)),
    "V": (7, (0, 4, 7)),
    "vi": (9, (0, 3, 7)),
}
CADENCE = ("I", "IV", "V", "I")
CADENCE_MELODY = (0, 4, 5, 9, 7, 11, 4, 0)


def synthesize_key_examples(
    n_per_key: int,
    seed: int,
    minor_fraction: float = 0.25,
    notes_per_file: int = 48,
) -> list[KeyExample]:
    """
    Random diatonic note samples with tonic emphasis, n_per_key per major key.

    A `minor_fraction` share of each key's files is written in its relative
    minor (same pitch set, emphasis on the minor tonic) and labeled as such.
    """
    rng = np.random.default_rng(seed)
    weights = DEGREE_EMPHASIS / DEGREE_EMPHASIS.sum()
    examples = []
    for key in range(12):
        for _ in range(n_per_key):
            minor = rng.random() < minor_fraction
            tonic = (key + 9) % 12 if minor else key
            scale = np.array(MINOR_SCALE if minor else MAJOR_SCALE)
            degrees = rng.choice(7, size=notes_per_file, p=weights)
            durations = rng.integers(1, 5, size=notes_per_file)
            hist = histogram_from_arrays((scale[degrees] + tonic) % 12, durations)
            examples.append(KeyExample(
                histogram=hist,
                tonic_pc=tonic,
                mode=KeyMode.MINOR if minor else KeyMode.MAJOR,
            ))
    return examples


def progression_song(
    tonic_pc: int = 0,
    progression: Sequence[str] = CADENCE,
    melody_pcs: Sequence[int] = CADENCE_MELODY,
    notes_per_chord: int = 2,
    note_ticks: int = 480,
    ticks_per_quarter: int = 480,
    key: Optional[KeySignature] = None,
    with_drums: bool = False,
) -> MidiSong:
    """
    Melody over root-doubled block chords, transposed to `tonic_pc`.

    Each chord is bass root + root, third and fifth, so its histogram
    weighs the root 0.5 and the other two tones 0.25 each.
    """
    n_notes = len(progression) * notes_per_chord
    melody = []
    for i in range(n_notes):
        pc = (melody_pcs[i % len(melody_pcs)] + tonic_pc) % 12
        melody.append((72 + pc, i * note_ticks, note_ticks))

    chords = []
    for i, numeral in enumerate(progression):
        degree, intervals = TRIADS[numeral]
        root = (tonic_pc + degree) % 12
        onset = i * notes_per_chord * note_ticks
        duration = notes_per_chord * note_ticks
        chords.append((48 + root, onset, duration, 80))
        for interval in intervals:
            chords.append((60 + root + interval, onset, duration, 80))

    tracks = [
        build_track(0, melody, name="Melody", program=73),
        build_track(1, chords, name="Piano", program=0),
    ]
    if with_drums:
        beats = [(36, i * note_ticks, note_ticks // 2) for i in range(n_notes)]
        tracks.append(build_track(2, beats, name="Drums", is_drum=True))

    return MidiSong(
        ticks_per_quarter=ticks_per_quarter,
        tracks=tuple(tracks),
        key_events=(key,) if key is not None else (),
    )


def progression_dataset(copies: int = 50, **song_kwargs) -> ChordDataset:
    """`copies` identical C-major songs extracted from progression_song, unpruned."""
    song = progression_song(tonic_pc=0, **song_kwargs)
    block = SongBlock.from_examples(extract_examples(song, 0, 0))
    return ChordDataset(songs=[
        SongBlock(melody_pcs=block.melody_pcs.copy(), chords=block.chords.copy()) for _ in range(copies)
    ])


def key_signature_for(tonic_pc: int) -> KeySignature:
    """
    Key event for a major key at tick 0.

    C major at tick 0 reads as an untrusted default, so C is written as its
    relative minor, A minor.
    """
    if tonic_pc == 0:
        return KeySignature(tonic_pc=9, mode=KeyMode.MINOR, tick=0)
    return KeySignature(tonic_pc=tonic_pc, mode=KeyMode.MAJOR, tick=0)


def write_synthetic_corpus(
    directory: Union[str, Path],
    n_songs: int,
    seed: int,
    with_key: bool = True,
) -> list[Path]:
    """Write `n_songs` random-key cadence songs as MIDI files."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    numerals = list(TRIADS)
    paths = []
    for i in range(n_songs):
        tonic = int(rng.integers(0, 12))
        progression = ["I"] + [numerals[j] for j in rng.integers(0, len(numerals), size=2)] + ["V", "I"]
        melody = [int(MAJOR_SCALE[d]) for d in rng.integers(0, 7, size=len(progression) * 2)]
        song = progression_song(
            tonic_pc=tonic,
            progression=progression,
            melody_pcs=melody,
            key=key_signature_for(tonic) if with_key else None,
            with_drums=bool(i % 2),
        )
        paths.append(atomic_write_bytes(directory / f"song_{i:04d}.mid", write_midi(song)))
    return paths
