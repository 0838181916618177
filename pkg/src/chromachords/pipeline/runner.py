"""Harmonization runner: melody file in, melody + accompaniment song out."""
import bisect
import sys
import time
from pathlib import Path
from typing import Optional, TextIO, Union

import numpy as np

from ..core.binary import atomic_write_bytes
from ..core.errors import ChromaChordsError, NoMelodyTrack
from ..core.models import (
    GenerationConfig,
    GenerationResult,
    MidiSong,
    Track,
    VoicedChord,
)
from ..core.parsing import tonic_name
from ..dataset.builder import select_melody_track
from ..midi.smf import build_track, read_midi_file, write_midi
from ..model.lstm import LstmModel
from .interfaces import ChordPredictor
from .predictors import LstmChordPredictor
from .voicing import voice_chord

ACCOMPANIMENT_NAME = "Accompaniment"
ACCOMPANIMENT_PROGRAM = 0
ACCOMPANIMENT_VELOCITY = 80


class TeeLogger:
    """Write to both stdout and a file."""
    def __init__(self, file: TextIO):
        self.file = file
        self.stdout = sys.stdout

    def write(self, message: str):
        self.stdout.write(message)
        self.file.write(message)
        self.file.flush()

    def flush(self):
        self.stdout.flush()
        self.file.flush()


def melody_track_index(song: MidiSong, overlap_threshold: float) -> int:
    """Single-track files use their only track; otherwise select_melody_track."""
    if len(song.tracks) == 1 and not song.tracks[0].is_drum:
        return 0
    index = select_melody_track(song, overlap_threshold)
    if index is None:
        raise NoMelodyTrack(f"no melody track among {len(song.tracks)} track(s)")
    return index


def _reindexed(track: Track, index: int) -> Track:
    notes = [(n.pitch, n.onset, n.duration, n.velocity) for n in track.notes]
    return build_track(index, notes, name=track.name, program=track.program)


def accompaniment_track(chords: list[Optional[VoicedChord]], index: int = 1) -> Track:
    """
    Block chords as one track. A chord is cut off where the next later
    chord starts, so repeated pitches never overlap.
    """
    sounding = sorted((c for c in chords if c is not None), key=lambda c: c.onset)
    onsets = [c.onset for c in sounding]
    notes = []
    for chord in sounding:
        end = chord.onset + chord.duration
        later = bisect.bisect_right(onsets, chord.onset)
        if later < len(onsets):
            end = min(end, onsets[later])
        notes.extend(
            (pitch, chord.onset, end - chord.onset, ACCOMPANIMENT_VELOCITY)
            for pitch in chord.pitches
        )
    return build_track(index, notes, name=ACCOMPANIMENT_NAME, program=ACCOMPANIMENT_PROGRAM)


class HarmonizerRunner:
    """Drives the autoregressive prediction loop over a melody."""

    def __init__(self, predictor: ChordPredictor):
        self.predictor = predictor

    def harmonize(self, song: MidiSong, config: GenerationConfig) -> GenerationResult:
        """
        One prediction per melody note, in onset order.

        Context is the last seq_len melody pitch classes (C-aligned, current
        note last) and the last seq_len predicted histograms. The output song
        keeps the input's timing and key events and holds the melody track
        followed by the accompaniment track.
        """
        melody = song.tracks[melody_track_index(song, config.overlap_threshold)]
        seq_len = self.predictor.seq_len
        if hasattr(self.predictor, "reset"):
            self.predictor.reset()

        pcs: list[int] = []
        history: list[np.ndarray] = []
        chords: list[Optional[VoicedChord]] = []
        timings: list[float] = []
        for note in melody.notes:
            pcs.append((note.pitch - config.tonic_pc) % 12)
            start = time.perf_counter()
            h = self.predictor.predict_next(pcs[-seq_len:], history[-seq_len:])
            timings.append((time.perf_counter() - start) * 1000.0)
            history.append(h)
            chords.append(voice_chord(
                h, config.tonic_pc, config.voicing_threshold,
                onset=note.onset, duration=note.duration,
            ))

        out = MidiSong(
            ticks_per_quarter=song.ticks_per_quarter,
            tempo_us_per_quarter=song.tempo_us_per_quarter,
            tracks=(_reindexed(melody, 0), accompaniment_track(chords, 1)),
            key_events=song.key_events,
        )
        return GenerationResult(song=out, chords=chords, histograms=history, prediction_ms=timings)

    def run(
        self,
        melody_file: Union[str, Path],
        output_file: Union[str, Path],
        config: GenerationConfig,
        log_dir: Optional[Path] = None,
    ) -> GenerationResult:
        """Harmonize a file and write the result, logging to stdout and `log_dir`."""
        melody_file, output_file = Path(melody_file), Path(output_file)
        log_file = None
        original_stdout = sys.stdout
        if log_dir is not None:
            log_dir.mkdir(parents=True, exist_ok=True)
            log_file = open(log_dir / f"generate_{melody_file.stem}.log", "w", encoding="utf-8")
            sys.stdout = TeeLogger(log_file)

        try:
            print(f"[Harmonizer] Melody: {melody_file}")
            print(f"[Harmonizer] Key: {tonic_name(config.tonic_pc)} major")
            print(f"[Harmonizer] Predictor: {self.predictor.describe()}")
            result = self.harmonize(read_midi_file(melody_file), config)
            atomic_write_bytes(output_file, write_midi(result.song))
            voiced = sum(c is not None for c in result.chords)
            mean_ms = float(np.mean(result.prediction_ms)) if result.prediction_ms else 0.0
            print(f"[Harmonizer] ✅ {voiced}/{len(result.chords)} notes harmonized "
                  f"(mean {mean_ms:.2f} ms per prediction) -> {output_file}")
            return result
        except (ChromaChordsError, OSError) as e:
            print(f"[Harmonizer] ❌ Failed: {e}")
            raise
        finally:
            sys.stdout = original_stdout
            if log_file is not None:
                log_file.close()


def generate(
    melody_file: Union[str, Path],
    config: GenerationConfig,
    predictor: Union[ChordPredictor, LstmModel],
) -> MidiSong:
    """Harmonize a melody file and return the output song."""
    if isinstance(predictor, LstmModel):
        predictor = LstmChordPredictor(predictor)
    return HarmonizerRunner(predictor).harmonize(read_midi_file(melody_file), config).song
