"""The CHRD dataset file: per-song blocks of (melody pc, chord histogram) records."""
import struct
from pathlib import Path
from typing import Iterable, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..core.binary import atomic_write_bytes
from ..core.chroma import l1_normalize
from ..core.errors import CorruptCheckpoint, VersionMismatch
from ..core.models import ArrayModel, TrainingExample

CHRD_MAGIC = b"CHRD"
CHRD_VERSION = 1

_RECORD = np.dtype([("pc", "u1"), ("chord", "<f4", (12,))])


class SongBlock(ArrayModel):
    """Examples of one song as arrays."""
    melody_pcs: np.ndarray
    chords: np.ndarray

    def __len__(self) -> int:
        return len(self.melody_pcs)

    @classmethod
    def from_examples(cls, examples: list[TrainingExample]) -> "SongBlock":
        if not examples:
            return cls(melody_pcs=np.zeros(0, dtype=np.int64), chords=np.zeros((0, 12)))
        return cls(
            melody_pcs=np.array([e.melody_pc for e in examples], dtype=np.int64),
            chords=np.stack([e.chord for e in examples]).astype(np.float64),
        )

    def to_examples(self) -> list[TrainingExample]:
        return [
            TrainingExample(melody_pc=int(pc), chord=chord.copy(), song_start=(i == 0))
            for i, (pc, chord) in enumerate(zip(self.melody_pcs, self.chords))
        ]


class ChordDataset(BaseModel):
    """Ordered songs; examples never cross a song boundary."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    songs: list[SongBlock] = Field(default_factory=list)

    @property
    def n_examples(self) -> int:
        return sum(len(s) for s in self.songs)

    def examples(self) -> list[TrainingExample]:
        out = []
        for song in self.songs:
            out.extend(song.to_examples())
        return out


def encode_dataset(songs: Iterable[SongBlock]) -> bytes:
    parts = [CHRD_MAGIC, struct.pack("<H", CHRD_VERSION)]
    for song in songs:
        records = np.zeros(len(song), dtype=_RECORD)
        records["pc"] = song.melody_pcs
        records["chord"] = song.chords
        parts.append(struct.pack("<I", len(song)))
        parts.append(records.tobytes())
    return b"".join(parts)


def decode_dataset(data: bytes) -> ChordDataset:
    """Parse CHRD bytes; non-zero chords are re-normalized in float64."""
    if data[:4] != CHRD_MAGIC:
        raise CorruptCheckpoint("not a CHRD dataset file")
    if len(data) < 6:
        raise CorruptCheckpoint("truncated CHRD header")
    (version,) = struct.unpack("<H", data[4:6])
    if version != CHRD_VERSION:
        raise VersionMismatch(f"unsupported CHRD version {version}")

    songs = []
    pos = 6
    while pos < len(data):
        if pos + 4 > len(data):
            raise CorruptCheckpoint("truncated song header")
        (count,) = struct.unpack("<I", data[pos:pos + 4])
        pos += 4
        size = count * _RECORD.itemsize
        if pos + size > len(data):
            raise CorruptCheckpoint("truncated song block")
        records = np.frombuffer(data[pos:pos + size], dtype=_RECORD)
        pos += size
        songs.append(SongBlock(
            melody_pcs=records["pc"].astype(np.int64),
            chords=l1_normalize(records["chord"].astype(np.float64)),
        ))
    return ChordDataset(songs=songs)


def write_dataset(path: Union[str, Path], songs: Iterable[SongBlock]) -> Path:
    return atomic_write_bytes(path, encode_dataset(songs))


def read_dataset(path: Union[str, Path]) -> ChordDataset:
    return decode_dataset(Path(path).read_bytes())
