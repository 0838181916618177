"""Unit tests for melody selection, chord extraction, pruning and CHRD storage."""
import struct

import numpy as np
import pytest
from pydantic import BaseModel, ValidationError

from src.chromachords.core.errors import CorruptCheckpoint, InvalidTrack, VersionMismatch
from src.chromachords.core.models import MidiSong, TrainingExample
from src.chromachords.dataset.builder import (
    chords_similar,
    extract_examples,
    remove_similar_adjacent,
    select_melody_track,
)
from src.chromachords.dataset.storage import (
    ChordDataset,
    SongBlock,
    decode_dataset,
    encode_dataset,
    read_dataset,
    write_dataset,
)
from src.chromachords.dataset.synthetic import progression_dataset, progression_song
from src.chromachords.midi.smf import build_track

from utils import make_song, monophonic_notes


def block_chords(roots, step=480):
    """Root-position triads, one per step."""
    return [(60 + r + i, n * step, step) for n, r in enumerate(roots) for i in (0, 4, 7)]


def transposed(song: MidiSong, k: int) -> MidiSong:
    tracks = tuple(
        build_track(i, [(n.pitch + k, n.onset, n.duration, n.velocity) for n in t.notes],
                    name=t.name, program=t.program, is_drum=t.is_drum)
        for i, t in enumerate(song.tracks)
    )
    return song.model_copy(update={"tracks": tracks})


def random_accompanied_song(rng: np.random.Generator) -> MidiSong:
    """Monophonic lead over random accompaniment notes, sometimes with drums."""
    n = int(rng.integers(1, 24))
    durations = rng.integers(60, 960, size=n)
    onsets = np.concatenate([[0], np.cumsum(durations)[:-1]])
    lead = [(int(p), int(o), int(d)) for p, o, d in zip(rng.integers(60, 96, size=n), onsets, durations)]
    total = int(onsets[-1] + durations[-1])
    accompaniment = [
        (int(rng.integers(30, 72)), int(rng.integers(0, total)), int(rng.integers(1, 1000)))
        for _ in range(int(rng.integers(0, 40)))
    ]
    tracks = [{"name": "Lead", "notes": lead}, {"notes": accompaniment}]
    if rng.random() < 0.3:
        tracks.append({"notes": [(36, int(o), 120) for o in onsets], "is_drum": True})
    return make_song(tracks)


def reference_prune(examples):
    """Independent loop-based version of the adjacent-similarity rule."""
    kept = []
    last = None
    for ex in examples:
        if ex.song_start:
            kept.append(ex)
            last = ex.chord
            continue
        identical = all(abs(a - b) <= 1e-9 for a, b in zip(ex.chord, last))
        close = 0
        for a, b in zip(ex.chord, last):
            if a != 0 and b != 0 and abs(a - b) <= 0.1:
                close += 1
        if not (identical or close >= 4):
            kept.append(ex)
            last = ex.chord
    return kept


@pytest.mark.unit
class TestSelectMelodyTrack:
    """Test the keyword and monophony rules."""

    def test_keyword_wins(self):
        song = make_song([
            {"name": "Piano", "notes": monophonic_notes([80] * 8)},
            {"name": "Lead Vocal", "notes": monophonic_notes([60] * 8)},
            {"name": "Bass", "notes": monophonic_notes([40] * 8)},
        ])
        assert select_melody_track(song) == 1

    def test_highest_mean_pitch(self):
        song = make_song([
            {"name": "B", "notes": monophonic_notes([45] * 10)},
            {"name": "A", "notes": monophonic_notes([70] * 10)},
        ])
        assert select_melody_track(song) == 1

    def test_tie_goes_to_lowest_index(self):
        song = make_song([
            {"notes": monophonic_notes([64] * 8)},
            {"notes": monophonic_notes([64] * 8)},
        ])
        assert select_melody_track(song) == 0

    def test_polyphonic_only(self):
        song = make_song([{"notes": block_chords([0, 5, 7, 0, 0, 5, 7, 0])}])
        assert select_melody_track(song) is None

    def test_zero_threshold_keeps_monophonic(self):
        song = make_song([
            {"notes": block_chords([0, 5, 7, 0])},
            {"notes": monophonic_notes([72, 74, 76, 77, 79, 81, 83, 84])},
        ])
        assert select_melody_track(song, overlap_threshold=0.0) == 1

    def test_drums_and_short_tracks_skipped(self):
        song = make_song([
            {"name": "Melody", "notes": monophonic_notes([38] * 8), "is_drum": True},
            {"notes": monophonic_notes([72] * 7)},
        ])
        assert select_melody_track(song) is None

    def test_empty_keyword_track_ignored(self):
        song = make_song([
            {"name": "vocals", "notes": []},
            {"notes": monophonic_notes([50] * 8)},
        ])
        assert select_melody_track(song) == 1


@pytest.mark.unit
class TestExtractExamples:
    """Test per-note chord histograms."""

    def test_full_cover(self):
        song = make_song([
            {"notes": [(60, 0, 480)]},
            {"notes": [(60, 0, 480), (64, 0, 480), (67, 0, 480)]},
        ])
        (ex,) = extract_examples(song, 0, 0)
        assert ex.melody_pc == 0
        assert ex.song_start
        np.testing.assert_allclose(ex.chord[[0, 4, 7]], [1 / 3] * 3)
        assert ex.chord.sum() == pytest.approx(1.0)

    def test_aligned_to_tonic(self):
        """Test G major with a G-B-D chord lands on C-E-G."""
        song = make_song([
            {"notes": [(67, 0, 480)]},
            {"notes": [(55, 0, 480), (59, 0, 480), (62, 0, 480)]},
        ])
        (ex,) = extract_examples(song, 7, 0)
        assert ex.melody_pc == 0
        assert set(np.flatnonzero(ex.chord)) == {0, 4, 7}

    def test_overlap_weighting(self):
        song = make_song([
            {"notes": [(72, 0, 480)]},
            {"notes": [(60, 0, 240), (64, 0, 480)]},
        ])
        (ex,) = extract_examples(song, 0, 0)
        assert ex.chord[0] == pytest.approx(1 / 3)
        assert ex.chord[4] == pytest.approx(2 / 3)

    def test_partial_windows_and_gaps(self):
        """Test notes outside the window are ignored and silent notes are kept."""
        song = make_song([
            {"notes": [(72, 0, 480), (74, 480, 480), (76, 2000, 480)]},
            {"notes": [(60, 240, 480)]},
            {"notes": [(36, 0, 3000)], "is_drum": True},
        ])
        examples = extract_examples(song, 0, 0)
        assert [e.melody_pc for e in examples] == [0, 2, 4]
        assert [e.song_start for e in examples] == [True, False, False]
        assert examples[0].chord[0] == 1.0
        assert examples[1].chord[0] == 1.0
        assert not examples[2].chord.any()

    def test_progression(self):
        examples = extract_examples(progression_song(), 0, 0)
        assert len(examples) == 8
        assert [e.melody_pc for e in examples] == [0, 4, 5, 9, 7, 11, 4, 0]
        np.testing.assert_allclose(examples[2].chord[[5, 9, 0]], [0.5, 0.25, 0.25])

    @pytest.mark.parametrize("k", [1, 5, 11])
    def test_transposition_equivariance(self, k):
        song = progression_song(tonic_pc=2)
        base = extract_examples(song, 2, 0)
        moved = extract_examples(transposed(song, k), (2 + k) % 12, 0)
        assert moved == base

    def test_transposition_equivariance_random_songs(self):
        """Test 100 random songs, each moved by a random k along with its tonic."""
        rng = np.random.default_rng(2718)
        for _ in range(100):
            song = random_accompanied_song(rng)
            tonic = int(rng.integers(0, 12))
            k = int(rng.integers(0, 12))
            base = extract_examples(song, tonic, 0)
            moved = extract_examples(transposed(song, k), (tonic + k) % 12, 0)
            assert len(base) == len(song.tracks[0].notes)
            assert moved == base

    def test_invalid_track(self):
        song = make_song([{"notes": [(60, 0, 1)]}, {"notes": [(36, 0, 1)], "is_drum": True}])
        with pytest.raises(InvalidTrack):
            extract_examples(song, 0, 2)
        with pytest.raises(InvalidTrack):
            extract_examples(song, 0, 1)


@pytest.mark.unit
class TestPruning:
    """Test adjacent-similarity pruning."""

    def _examples(self, chords, starts=(0,)):
        return [
            TrainingExample(melody_pc=i % 12, chord=np.asarray(c, dtype=float), song_start=i in starts)
            for i, c in enumerate(chords)
        ]

    def test_identical_run(self):
        h = np.zeros(12)
        h[[0, 4, 7]] = 1 / 3
        assert len(remove_similar_adjacent(self._examples([h, h, h]))) == 1

    def test_three_close_bins_kept(self):
        a = np.array([0.25, 0.25, 0.25, 0.25] + [0.0] * 8)
        b = np.array([0.3, 0.3, 0.3, 0.0, 0.1] + [0.0] * 7)
        assert not chords_similar(a, b)
        assert len(remove_similar_adjacent(self._examples([a, b]))) == 2

    def test_four_close_bins_dropped(self):
        a = np.array([0.25, 0.25, 0.25, 0.25] + [0.0] * 8)
        b = np.array([0.2, 0.3, 0.2, 0.3] + [0.0] * 8)
        assert chords_similar(a, b)

    def test_song_start_always_kept(self):
        h = np.full(12, 1 / 12)
        out = remove_similar_adjacent(self._examples([h, h, h, h], starts=(0, 2)))
        assert [e.song_start for e in out] == [True, True]

    def test_compares_against_last_kept(self):
        """Test a slow drift is measured from the last kept chord."""
        base = np.array([0.25] * 4 + [0.0] * 8)
        drift = [base + np.array([d, -d, d, -d] + [0.0] * 8) for d in (0.0, 0.06, 0.12)]
        out = remove_similar_adjacent(self._examples(drift))
        assert len(out) == 2
        np.testing.assert_array_equal(out[1].chord, drift[2])

    def test_matches_reference(self, rng):
        pool = [np.where(rng.random(12) < 0.4, rng.random(12), 0.0) for _ in range(5)]
        chords, starts = [], set()
        for i in range(1000):
            c = pool[int(rng.integers(0, 5))] + np.where(rng.random(12) < 0.3, rng.random(12) * 0.15, 0.0)
            total = c.sum()
            chords.append(c / total if total > 0 else c)
            if i == 0 or rng.random() < 0.02:
                starts.add(i)
        examples = self._examples(chords, starts=starts)
        ours = remove_similar_adjacent(examples)
        assert ours == reference_prune(examples)
        assert len(ours) < len(examples)
        assert remove_similar_adjacent(ours) == ours


@pytest.mark.unit
class TestStorage:
    """Test the CHRD dataset file."""

    def test_round_trip(self, tmp_path):
        dataset = progression_dataset(copies=3)
        path = write_dataset(tmp_path / "d.chrd", dataset.songs + [SongBlock.from_examples([])])
        loaded = read_dataset(path)
        assert len(loaded.songs) == 4
        assert loaded.n_examples == dataset.n_examples
        for a, b in zip(loaded.songs, dataset.songs):
            np.testing.assert_array_equal(a.melody_pcs, b.melody_pcs)
            np.testing.assert_allclose(a.chords, b.chords, atol=1e-6)
        assert len(loaded.songs[-1]) == 0

    def test_examples_view(self):
        dataset = progression_dataset(copies=2)
        examples = dataset.examples()
        assert len(examples) == 16
        assert [i for i, e in enumerate(examples) if e.song_start] == [0, 8]

    def test_record_layout(self):
        data = encode_dataset([SongBlock(melody_pcs=np.array([3]), chords=np.eye(12)[[4]])])
        assert data[:6] == b"CHRD" + struct.pack("<H", 1)
        assert struct.unpack("<I", data[6:10]) == (1,)
        assert len(data) == 10 + 1 + 48
        assert data[10] == 3

    def test_empty_dataset(self):
        assert decode_dataset(encode_dataset([])).songs == []
        assert ChordDataset().n_examples == 0

    def test_records_are_models(self):
        """Test songs compare by array contents and reject missing fields."""
        a = SongBlock(melody_pcs=np.array([3, 5]), chords=np.eye(12)[[4, 7]])
        b = SongBlock(melody_pcs=np.array([3, 5]), chords=np.eye(12)[[4, 7]])
        assert isinstance(a, BaseModel)
        assert a == b
        assert a != SongBlock(melody_pcs=np.array([3, 6]), chords=np.eye(12)[[4, 7]])
        assert ChordDataset(songs=[a]).n_examples == 2
        with pytest.raises(ValidationError):
            SongBlock(melody_pcs=np.array([3]))

    def test_corruption(self):
        data = encode_dataset(progression_dataset(copies=1).songs)
        with pytest.raises(CorruptCheckpoint):
            decode_dataset(b"MThd" + data[4:])
        with pytest.raises(CorruptCheckpoint):
            decode_dataset(data[:-5])
        with pytest.raises(CorruptCheckpoint):
            decode_dataset(data + b"\x01")
        with pytest.raises(VersionMismatch):
            decode_dataset(b"CHRD" + struct.pack("<H", 2) + data[6:])
