"""Corpus -> training dataset: melody selection, chord extraction, pruning."""
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Union

import numpy as np

from ..core.binary import atomic_write_text
from ..core.chroma import (
    align_to_c,
    empty_histogram,
    histogram_from_arrays,
    overlap_proportion,
    song_histogram,
)
from ..core.errors import ChromaChordsError, EmptyCorpus, InvalidTrack
from ..core.models import CorpusStats, MidiSong, TrainingExample
from ..midi.smf import extract_key_meta, ignored_key_events, read_midi_file
from .storage import SongBlock, write_dataset

MELODY_KEYWORDS = ("voice", "vocal", "vox", "sing", "melody")
MIN_CANDIDATE_NOTES = 8
IDENTICAL_TOL = 1e-9
SIMILAR_TOL = 0.1
SIMILAR_MIN_BINS = 4
MIDI_SUFFIXES = (".mid", ".midi")


def select_melody_track(song: MidiSong, overlap_threshold: float = 0.2) -> Optional[int]:
    """
    Pick the melody track of a song.

    Keyword-named non-drum tracks win; otherwise non-drum tracks with at
    least 8 notes whose overlap proportion is below the threshold (a
    perfectly monophonic track always qualifies). Among candidates the
    highest mean pitch wins, ties to the lowest index.
    """
    candidates = [
        i for i, t in enumerate(song.tracks)
        if not t.is_drum and t.notes and any(k in t.name.lower() for k in MELODY_KEYWORDS)
    ]
    if not candidates:
        for i, track in enumerate(song.tracks):
            if track.is_drum or len(track.notes) < MIN_CANDIDATE_NOTES:
                continue
            overlap = overlap_proportion(track.notes)
            if overlap < overlap_threshold or overlap == 0.0:
                candidates.append(i)
    if not candidates:
        return None
    return max(candidates, key=lambda i: (song.tracks[i].mean_pitch, -i))


def _accompaniment_arrays(song: MidiSong, melody_track: int) -> tuple[np.ndarray, ...]:
    pitches, onsets, ends = [], [], []
    for i, track in enumerate(song.tracks):
        if i == melody_track or track.is_drum:
            continue
        for note in track.notes:
            pitches.append(note.pitch)
            onsets.append(note.onset)
            ends.append(note.end)
    pitches = np.array(pitches, dtype=np.int64)
    onsets = np.array(onsets, dtype=np.int64)
    ends = np.array(ends, dtype=np.int64)
    order = np.argsort(onsets, kind="stable")
    return pitches[order], onsets[order], ends[order]


def extract_examples(song: MidiSong, tonic_pc: int, melody_track: int) -> list[TrainingExample]:
    """
    One example per melody note, in onset order.

    The chord is the histogram of every note in other non-drum tracks that
    sounds during the melody note, weighted by overlap in ticks. Melody pitch
    class and chord are both rotated so the tonic becomes C. Notes with no
    accompaniment keep an all-zero chord.
    """
    if not 0 <= melody_track < len(song.tracks):
        raise InvalidTrack(f"melody track {melody_track} out of range (0..{len(song.tracks) - 1})")
    melody = song.tracks[melody_track]
    if melody.is_drum:
        raise InvalidTrack(f"melody track {melody_track} is a drum track")

    pitches, onsets, ends = _accompaniment_arrays(song, melody_track)
    examples = []
    for n, note in enumerate(melody.notes):
        stop = np.searchsorted(onsets, note.end, side="left")
        overlap = np.minimum(ends[:stop], note.end) - np.maximum(onsets[:stop], note.onset)
        sounding = overlap > 0
        if sounding.any():
            chord = histogram_from_arrays(pitches[:stop][sounding], overlap[sounding])
        else:
            chord = empty_histogram()
        examples.append(TrainingExample(
            melody_pc=(note.pitch - tonic_pc) % 12,
            chord=align_to_c(chord, tonic_pc),
            song_start=(n == 0),
        ))
    return examples


def chords_similar(a: np.ndarray, b: np.ndarray) -> bool:
    """Identical, or at least 4 bins non-zero in both and within 0.1."""
    diff = np.abs(a - b)
    if np.all(diff <= IDENTICAL_TOL):
        return True
    close = (a > 0) & (b > 0) & (diff <= SIMILAR_TOL)
    return int(close.sum()) >= SIMILAR_MIN_BINS


def remove_similar_adjacent(examples: list[TrainingExample]) -> list[TrainingExample]:
    """
    Drop chords similar to the most recent kept chord of the same song.

    The first example of each song is always kept; order is preserved.
    """
    out = []
    last = None
    for ex in examples:
        if ex.song_start or last is None or not chords_similar(ex.chord, last):
            out.append(ex)
            last = ex.chord
    return out


def _process_file(
    path: Path,
    key_model,
    overlap_threshold: float,
) -> tuple[Optional[SongBlock], CorpusStats, list[str]]:
    stats = CorpusStats(files_seen=1)
    messages = []
    try:
        song = read_midi_file(path)
    except (ChromaChordsError, OSError) as e:
        messages.append(f"⚠️  {path.name}: unreadable ({e})")
        return None, stats + CorpusStats(files_skipped_malformed=1), messages

    tonic = extract_key_meta(song)
    if tonic is None and key_model is not None:
        hist = song_histogram(song)
        if hist.any():
            tonic = int(key_model.predict_many(hist)[0])
    if tonic is None:
        return None, stats + CorpusStats(files_skipped_no_key=1), messages
    ignored = ignored_key_events(song)
    if ignored:
        messages.append(f"⚠️  {path.name}: {len(ignored)} later key change(s) ignored")

    melody = select_melody_track(song, overlap_threshold)
    if melody is None:
        return None, stats + CorpusStats(files_skipped_no_melody=1), messages

    examples = extract_examples(song, tonic, melody)
    kept = remove_similar_adjacent(examples)
    stats = stats + CorpusStats(examples_before_prune=len(examples), examples_after_prune=len(kept))
    return SongBlock.from_examples(kept), stats, messages


def list_corpus(corpus_dir: Union[str, Path]) -> list[Path]:
    """MIDI files under a directory, sorted by path."""
    corpus_dir = Path(corpus_dir)
    if not corpus_dir.is_dir():
        raise FileNotFoundError(f"Corpus directory not found: {corpus_dir}")
    return sorted(p for p in corpus_dir.rglob("*") if p.is_file() and p.suffix.lower() in MIDI_SUFFIXES)


def build_dataset(
    corpus_dir: Union[str, Path],
    out_path: Union[str, Path],
    key_model=None,
    overlap_threshold: float = 0.2,
    workers: int = 1,
) -> tuple[Path, CorpusStats]:
    """
    Run the four-stage pipeline over a corpus and write a CHRD file.

    Per file: key from metadata, else from `key_model` on the whole-file
    histogram (skipped when neither gives one); melody selection; chord
    extraction; pruning. Songs are written in sorted path order, and a
    `<out>.stats.txt` summary is written next to the dataset.
    """
    files = list_corpus(corpus_dir)
    if not files:
        raise EmptyCorpus(f"No .mid/.midi files under {corpus_dir}")

    print(f"[Dataset] Corpus: {corpus_dir} ({len(files)} files)")
    print(f"[Dataset] Key source: metadata{' + classifier' if key_model is not None else ' only'}")

    args = [(path, key_model, overlap_threshold) for path in files]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_process_file, *zip(*args)))
    else:
        results = [_process_file(*a) for a in args]

    blocks = []
    stats = CorpusStats()
    for block, file_stats, messages in results:
        for message in messages:
            print(f"[Dataset] {message}")
        stats = stats + file_stats
        if block is not None and len(block):
            blocks.append(block)

    out_path = write_dataset(out_path, blocks)
    atomic_write_text(Path(f"{out_path}.stats.txt"), stats.summary())
    print(f"[Dataset] ✅ {len(blocks)} songs, {stats.examples_after_prune} examples "
          f"({stats.examples_before_prune} before pruning) -> {out_path}")
    return out_path, stats
