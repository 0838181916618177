"""
Standard MIDI File reader and writer built on mido.

Only the events the harmonization pipeline needs are modeled: note on/off,
program change, track name, key signature and set tempo. mido skips or
decodes everything else; none of it is written back.
"""
import io
from pathlib import Path
from typing import Iterable, Optional, Union

import mido
from pydantic import ValidationError

from ..core.errors import InvalidSong, MalformedFile, UnsupportedFormat
from ..core.models import (
    DEFAULT_TEMPO_US,
    KeyMode,
    KeySignature,
    MidiSong,
    Note,
    Track,
)

DRUM_CHANNEL = 9

_MELODIC_CHANNELS = [c for c in range(16) if c != DRUM_CHANNEL]

# mido spells key signatures by name; index = sharps + 7
_MAJOR_NAMES = ("Cb", "Gb", "Db", "Ab", "Eb", "Bb", "F", "C", "G", "D", "A", "E", "B", "F#", "C#")
_MINOR_NAMES = ("Abm", "Ebm", "Bbm", "Fm", "Cm", "Gm", "Dm", "Am", "Em", "Bm", "F#m", "C#m", "G#m", "D#m", "A#m")
_SIGNATURE_BY_NAME = {
    **{name: (sf - 7, False) for sf, name in enumerate(_MAJOR_NAMES)},
    **{name: (sf - 7, True) for sf, name in enumerate(_MINOR_NAMES)},
}

_MIDO_ERRORS = (OSError, EOFError, ValueError, IndexError, KeyError, mido.KeySignatureError)


# Key signatures

def key_from_signature(sharps: int, minor: bool) -> tuple[int, KeyMode]:
    """Decode the (sf, mi) pair of a key-signature meta event."""
    if minor:
        return (sharps * 7 + 9) % 12, KeyMode.MINOR
    return (sharps * 7) % 12, KeyMode.MAJOR


def signature_from_key(tonic_pc: int, mode: KeyMode) -> int:
    """Fewest-accidental sf value for a key; sharps win ties."""
    offset = 9 if mode == KeyMode.MINOR else 0
    candidates = [sf for sf in range(-7, 8) if (sf * 7 + offset) % 12 == tonic_pc]
    return min(candidates, key=lambda sf: (abs(sf), sf < 0))


def key_name(tonic_pc: int, mode: KeyMode) -> str:
    """mido key-signature name for a key, e.g. 'F#m'."""
    sf = signature_from_key(tonic_pc, mode)
    names = _MINOR_NAMES if mode == KeyMode.MINOR else _MAJOR_NAMES
    return names[sf + 7]


def relative_major(tonic_pc: int, mode: KeyMode) -> int:
    """Tonic of the major key sharing the signature."""
    if mode == KeyMode.MINOR:
        return (tonic_pc + 3) % 12
    return tonic_pc


def extract_key_meta(song: MidiSong) -> Optional[int]:
    """
    Major-key tonic of the first key event.

    Minor keys map to their relative major. C major at tick 0 is the
    default many sequencers write and is treated as missing.
    """
    if not song.key_events:
        return None
    first = song.key_events[0]
    if first.tick == 0 and first.mode == KeyMode.MAJOR and first.tonic_pc == 0:
        return None
    return relative_major(first.tonic_pc, first.mode)


def ignored_key_events(song: MidiSong) -> list[KeySignature]:
    """Later key events whose major tonic conflicts with the first one."""
    if len(song.key_events) < 2:
        return []
    first = song.key_events[0]
    tonic = relative_major(first.tonic_pc, first.mode)
    return [
        k for k in song.key_events[1:]
        if relative_major(k.tonic_pc, k.mode) != tonic
    ]


# Reading

def _decode_name(name: str) -> str:
    # mido decodes text as latin-1; most files carry UTF-8
    raw = name.encode("latin-1", errors="replace")
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError:
        return name


def _read_track(
    track: mido.MidiTrack,
    first_index: int,
    chunk_number: int,
    tempos: list[tuple[int, int, int]],
    keys: list[KeySignature],
) -> list[Track]:
    name = ""
    notes: dict[int, list[tuple[int, int, int, int]]] = {}
    programs: dict[int, int] = {}
    first_program_channel: Optional[int] = None
    open_notes: dict[tuple[int, int], tuple[int, int]] = {}
    tick = 0

    def close(channel: int, pitch: int, at: int) -> None:
        onset, velocity = open_notes.pop((channel, pitch))
        if at > onset:
            notes.setdefault(channel, []).append((pitch, onset, at - onset, velocity))

    for msg in track:
        tick += msg.time
        if msg.type == "track_name" and not name:
            name = _decode_name(msg.name)
        elif msg.type == "set_tempo":
            tempos.append((tick, chunk_number, msg.tempo))
        elif msg.type == "key_signature":
            sharps, minor = _SIGNATURE_BY_NAME[msg.key]
            tonic, mode = key_from_signature(sharps, minor)
            keys.append(KeySignature(tonic_pc=tonic, mode=mode, tick=tick))
        elif msg.type == "note_on" and msg.velocity > 0:
            if (msg.channel, msg.note) in open_notes:
                # last note-on wins
                close(msg.channel, msg.note, tick)
            open_notes[(msg.channel, msg.note)] = (tick, msg.velocity)
        elif msg.type in ("note_on", "note_off"):
            if (msg.channel, msg.note) in open_notes:
                close(msg.channel, msg.note, tick)
        elif msg.type == "program_change":
            programs.setdefault(msg.channel, msg.program)
            if first_program_channel is None:
                first_program_channel = msg.channel

    for channel, pitch in list(open_notes):
        close(channel, pitch, tick)

    if not notes:
        if not (name or programs):
            return []
        channel = first_program_channel
        return [Track(
            name=name,
            program=programs.get(channel, 0) if channel is not None else 0,
            is_drum=channel == DRUM_CHANNEL,
        )]

    tracks = []
    for offset, channel in enumerate(sorted(notes)):
        index = first_index + offset
        ordered = sorted(notes[channel], key=lambda n: (n[1], n[0]))
        tracks.append(Track(
            name=name,
            program=programs.get(channel, 0),
            is_drum=channel == DRUM_CHANNEL,
            notes=tuple(
                Note(pitch=p, onset=o, duration=d, velocity=v, track_index=index)
                for p, o, d, v in ordered
            ),
        ))
    return tracks


def parse_midi(data: bytes) -> MidiSong:
    """
    Parse SMF format 0 or 1 bytes into a MidiSong.

    Each track chunk yields one Track per channel that carries notes. A chunk
    without notes yields a single empty Track if it names an instrument or
    sets a program, and nothing otherwise (a pure conductor track).
    """
    if data[:4] != b"MThd":
        raise MalformedFile("missing MThd header chunk")
    try:
        mid = mido.MidiFile(file=io.BytesIO(data))
    except _MIDO_ERRORS as e:
        raise MalformedFile(f"could not parse MIDI data: {e}") from e

    if mid.type != 0 and mid.type != 1:
        raise UnsupportedFormat(f"SMF format {mid.type} is not supported")
    if mid.ticks_per_beat & 0x8000:
        raise UnsupportedFormat("SMPTE time division is not supported")
    if mid.ticks_per_beat == 0:
        raise MalformedFile("ticks per quarter note must be positive")

    tracks: list[Track] = []
    tempos: list[tuple[int, int, int]] = []
    keys: list[KeySignature] = []
    try:
        for chunk_number, track in enumerate(mid.tracks):
            tracks.extend(_read_track(track, len(tracks), chunk_number, tempos, keys))
    except (KeyError, ValidationError) as e:
        raise MalformedFile(f"invalid event data: {e}") from e

    tempo = min(tempos)[2] if tempos else DEFAULT_TEMPO_US
    keys.sort(key=lambda k: k.tick)
    return MidiSong(
        ticks_per_quarter=mid.ticks_per_beat,
        tempo_us_per_quarter=tempo if tempo > 0 else DEFAULT_TEMPO_US,
        tracks=tuple(tracks),
        key_events=tuple(keys),
    )


def read_midi_file(path: Union[str, Path]) -> MidiSong:
    return parse_midi(Path(path).read_bytes())


# Writing

def _check_song(song: MidiSong) -> None:
    if not 0 < song.ticks_per_quarter <= 0x7FFF:
        raise InvalidSong(f"ticks_per_quarter must be 1..32767, got {song.ticks_per_quarter}")
    if not 0 < song.tempo_us_per_quarter <= 0xFFFFFF:
        raise InvalidSong(f"tempo out of range: {song.tempo_us_per_quarter}")
    for i, track in enumerate(song.tracks):
        if not 0 <= track.program <= 127:
            raise InvalidSong(f"track {i}: program out of range")
        previous = None
        for note in track.notes:
            if note.track_index != i:
                raise InvalidSong(f"track {i}: note has track_index {note.track_index}")
            if not 0 <= note.pitch <= 127 or note.duration <= 0 or note.onset < 0:
                raise InvalidSong(f"track {i}: invalid note {note}")
            key = (note.onset, note.pitch)
            if previous is not None and key < previous:
                raise InvalidSong(f"track {i}: notes not sorted by (onset, pitch)")
            previous = key


def _assign_channels(tracks: Iterable[Track]) -> list[int]:
    channels, melodic = [], 0
    for track in tracks:
        if track.is_drum:
            channels.append(DRUM_CHANNEL)
        else:
            channels.append(_MELODIC_CHANNELS[melodic % len(_MELODIC_CHANNELS)])
            melodic += 1
    return channels


Event = tuple[int, int, int, Union[mido.Message, mido.MetaMessage]]


def _conductor_events(song: MidiSong) -> list[Event]:
    events = [(0, 0, 0, mido.MetaMessage("set_tempo", tempo=song.tempo_us_per_quarter))]
    for key in song.key_events:
        meta = mido.MetaMessage("key_signature", key=key_name(key.tonic_pc, key.mode))
        events.append((key.tick, 0, 0, meta))
    return events


def _track_events(track: Track, channel: int) -> list[Event]:
    # (tick, priority, pitch, message): meta < program < note-off < note-on
    events = []
    if track.name:
        name = track.name.encode("utf-8").decode("latin-1")
        events.append((0, 0, 0, mido.MetaMessage("track_name", name=name)))
    events.append((0, 1, 0, mido.Message("program_change", channel=channel, program=track.program)))
    for note in track.notes:
        events.append((note.onset, 3, note.pitch, mido.Message(
            "note_on", channel=channel, note=note.pitch, velocity=note.velocity)))
        events.append((note.end, 2, note.pitch, mido.Message(
            "note_off", channel=channel, note=note.pitch, velocity=0)))
    return events


def _to_track(events: list[Event]) -> mido.MidiTrack:
    track = mido.MidiTrack()
    tick = 0
    for at, _, _, msg in sorted(events, key=lambda e: (e[0], e[1], e[2])):
        track.append(msg.copy(time=at - tick))
        tick = at
    track.append(mido.MetaMessage("end_of_track", time=0))
    return track


def write_midi(song: MidiSong) -> bytes:
    """
    Serialize a song as SMF format 1, one chunk per Track.

    Tempo and key signatures go into the first chunk; a song without tracks
    becomes a single conductor chunk. Notes of the same pitch that overlap
    inside one track are re-split on read (last note-on wins), so only songs
    without such overlaps round-trip exactly.
    """
    _check_song(song)
    conductor = _conductor_events(song)
    mid = mido.MidiFile(type=1, ticks_per_beat=song.ticks_per_quarter)
    if not song.tracks:
        mid.tracks.append(_to_track(conductor))
    for i, (track, channel) in enumerate(zip(song.tracks, _assign_channels(song.tracks))):
        events = _track_events(track, channel)
        if i == 0:
            events = conductor + events
        mid.tracks.append(_to_track(events))

    buffer = io.BytesIO()
    mid.save(file=buffer)
    return buffer.getvalue()


# Construction helpers

def build_track(
    index: int,
    notes: Iterable[tuple],
    name: str = "",
    program: int = 0,
    is_drum: bool = False,
) -> Track:
    """
    Build a Track from (pitch, onset, duration[, velocity]) tuples.

    The notes are sorted into track order.
    """
    records = []
    for entry in notes:
        pitch, onset, duration = entry[:3]
        velocity = entry[3] if len(entry) > 3 else 100
        records.append(Note(pitch=pitch, onset=onset, duration=duration,
                            velocity=velocity, track_index=index))
    records.sort(key=lambda n: (n.onset, n.pitch))
    return Track(name=name, program=program, is_drum=is_drum, notes=tuple(records))


def notes_equivalent(a: MidiSong, b: MidiSong) -> bool:
    """Same track count and, per track, the same (pitch, onset, duration) notes."""
    if len(a.tracks) != len(b.tracks):
        return False
    for ta, tb in zip(a.tracks, b.tracks):
        na = [(n.pitch, n.onset, n.duration) for n in ta.notes]
        nb = [(n.pitch, n.onset, n.duration) for n in tb.notes]
        if na != nb:
            return False
    return True
