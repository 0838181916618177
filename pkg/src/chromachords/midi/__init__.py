"""Standard MIDI File input/output."""
from .smf import (
    build_track,
    extract_key_meta,
    notes_equivalent,
    parse_midi,
    read_midi_file,
    relative_major,
    write_midi,
)

__all__ = [
    "build_track",
    "extract_key_meta",
    "notes_equivalent",
    "parse_midi",
    "read_midi_file",
    "relative_major",
    "write_midi",
]
