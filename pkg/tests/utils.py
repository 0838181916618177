"""Test utilities for ChromaChords."""
import socket
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from src.chromachords.core.models import KeyMode, KeySignature, MidiSong, Track
from src.chromachords.dataset.storage import ChordDataset
from src.chromachords.midi.smf import build_track, write_midi


class NetworkGuard:
    """
    Prevents network access during tests.

    Outbound connections and DNS lookups raise; local socket pairs (used by
    asyncio event loops) keep working.

    Usage:
        with NetworkGuard():
            # code that should not make network calls
            ...
    """

    def __init__(self):
        self.original_connect = None
        self.original_connect_ex = None
        self.original_getaddrinfo = None
        self.original_create_connection = None

    def __enter__(self):
        """Block network access."""
        self.original_connect = socket.socket.connect
        self.original_connect_ex = socket.socket.connect_ex
        self.original_getaddrinfo = socket.getaddrinfo
        self.original_create_connection = socket.create_connection

        def guard_connect(*args, **kwargs):
            raise RuntimeError(
                "❌ NetworkGuard: Attempted to open a connection! "
                "Tests should not make network calls. "
                "Use the fake predictor or an in-process ASGI transport."
            )

        def guard_getaddrinfo(*args, **kwargs):
            raise RuntimeError(
                "❌ NetworkGuard: Attempted DNS lookup! "
                "Tests should not make network calls."
            )

        socket.socket.connect = guard_connect
        socket.socket.connect_ex = guard_connect
        socket.create_connection = guard_connect
        socket.getaddrinfo = guard_getaddrinfo
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        """Restore network access."""
        socket.socket.connect = self.original_connect
        socket.socket.connect_ex = self.original_connect_ex
        socket.create_connection = self.original_create_connection
        socket.getaddrinfo = self.original_getaddrinfo


# MIDI fixture builders

def make_song(
    tracks: Sequence[dict],
    key: Optional[tuple[int, KeyMode, int]] = None,
    ticks_per_quarter: int = 480,
    tempo: int = 500_000,
) -> MidiSong:
    """
    Build a song from track dicts: {"notes": [(pitch, onset, duration), ...],
    "name": str, "program": int, "is_drum": bool}.
    """
    built = [
        build_track(
            i,
            track.get("notes", []),
            name=track.get("name", ""),
            program=track.get("program", 0),
            is_drum=track.get("is_drum", False),
        )
        for i, track in enumerate(tracks)
    ]
    key_events = ()
    if key is not None:
        tonic, mode, tick = key
        key_events = (KeySignature(tonic_pc=tonic, mode=mode, tick=tick),)
    return MidiSong(
        ticks_per_quarter=ticks_per_quarter,
        tempo_us_per_quarter=tempo,
        tracks=tuple(built),
        key_events=key_events,
    )


def monophonic_notes(pitches: Iterable[int], step: int = 480, start: int = 0) -> list[tuple[int, int, int]]:
    return [(p, start + i * step, step) for i, p in enumerate(pitches)]


def write_song(path: Path, song: MidiSong) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(write_midi(song))
    return path


def random_song(rng: np.random.Generator) -> MidiSong:
    """
    Random song without same-pitch overlaps inside a track, so it survives a
    write/parse round trip exactly.
    """
    n_tracks = int(rng.integers(1, 5))
    tracks = []
    drum_used = False
    for i in range(n_tracks):
        is_drum = not drum_used and rng.random() < 0.2
        drum_used = drum_used or is_drum
        notes = []
        next_free: dict[int, int] = {}
        for _ in range(int(rng.integers(1, 40))):
            pitch = int(rng.integers(0, 128))
            onset = max(int(rng.integers(0, 20_000)), next_free.get(pitch, 0))
            duration = int(rng.integers(1, 2_000))
            velocity = int(rng.integers(1, 128))
            next_free[pitch] = onset + duration
            notes.append((pitch, onset, duration, velocity))
        tracks.append(build_track(
            i, notes, name=f"Track {i}", program=int(rng.integers(0, 128)), is_drum=is_drum,
        ))
    key_events = ()
    if rng.random() < 0.7:
        key_events = (KeySignature(
            tonic_pc=int(rng.integers(0, 12)),
            mode=KeyMode.MINOR if rng.random() < 0.3 else KeyMode.MAJOR,
            tick=int(rng.integers(0, 1000)),
        ),)
    return MidiSong(
        ticks_per_quarter=int(rng.integers(24, 1920)),
        tempo_us_per_quarter=int(rng.integers(200_000, 1_500_000)),
        tracks=tuple(tracks),
        key_events=key_events,
    )


def note_tuples(track: Track) -> list[tuple[int, int, int, int]]:
    return [(n.pitch, n.onset, n.duration, n.velocity) for n in track.notes]


def brute_force_windows(dataset: ChordDataset, seq_len: int) -> tuple[np.ndarray, np.ndarray]:
    """Reference window enumeration, one example at a time."""
    xs, ys = [], []
    for song in dataset.songs:
        for n in range(len(song)):
            x = np.zeros((seq_len, 13))
            for t in range(seq_len):
                m = n - (seq_len - 1) + t
                if m >= 0:
                    x[t, 0] = song.melody_pcs[m] / 11.0
                c = n - seq_len + t
                if c >= 0:
                    x[t, 1:] = song.chords[c]
            xs.append(x)
            ys.append(song.chords[n])
    return np.array(xs), np.array(ys)
